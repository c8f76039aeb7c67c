//! Generalized least squares regression through the QUBO pipeline.
//!
//! For a model `F(x) = sum_n p_n f_n(x)` fitted to means `y` with covariance
//! `S`, the objective `(F p - y)' S^-1 (F p - y)` is minimized where
//! `P1 p + P0 = 0` with `P1 = F' S^-1 F` and `P0 = -F' S^-1 y`.
//!
//! `S^-1` is only ever applied through its Cholesky factor `S = L L'`. The
//! whitened system `L^-1 F p - L^-1 y = 0` has residual sum of squares equal
//! to the objective itself, so compiling it gives a QUBO whose energy is the
//! GLS objective on every grid point.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encoding::{BitEncoding, BitString};
use crate::error::{Error, Result};
use crate::polysys::PolynomialSystem;
use crate::qubo::compile_linear_qubo;
use crate::solvers::{solve_qubo, Backend, SampleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    x_grid: Vec<f64>,
    y_mean: Vec<f64>,
    covariance: DMatrix<f64>,
}

impl RegressionDataset {
    pub fn new(x_grid: Vec<f64>, y_mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = x_grid.len();
        if n == 0 {
            return Err(Error::InvalidArgument("dataset has no points".into()));
        }
        if y_mean.len() != n {
            return Err(Error::shape("y", format!("length {n}"), y_mean.len()));
        }
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::shape(
                "covariance",
                format!("{n}x{n}"),
                format!("{}x{}", covariance.nrows(), covariance.ncols()),
            ));
        }
        if x_grid
            .iter()
            .chain(&y_mean)
            .chain(covariance.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("dataset".into()));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in i + 1..n {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            x_grid,
            y_mean,
            covariance,
        })
    }

    /// Uncorrelated, unit-variance observations: ordinary least squares.
    pub fn with_identity_covariance(x_grid: Vec<f64>, y_mean: Vec<f64>) -> Result<Self> {
        let n = x_grid.len();
        Self::new(x_grid, y_mean, DMatrix::identity(n, n))
    }

    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn y_mean(&self) -> &[f64] {
        &self.y_mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.covariance.clone()).ok_or_else(|| {
            let eig = SymmetricEigen::new(self.covariance.clone());
            let min = eig.eigenvalues.min();
            let max = eig.eigenvalues.max();
            Error::SingularCovariance(format!("eigenvalues span [{min:e}, {max:e}]"))
        })
    }

    /// Writes `x,y` rows with a header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y"])?;
        for (x, y) in self.x_grid.iter().zip(&self.y_mean) {
            w.write_record([format!("{x:?}"), format!("{y:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_covariance_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for i in 0..self.len() {
            w.write_record(self.covariance.row(i).iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an `x,y` CSV and, when given, a headerless square covariance CSV.
    /// Without a covariance file the observations are taken as uncorrelated
    /// with unit variance.
    pub fn read_csv(data: impl AsRef<Path>, covariance: Option<&Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(data)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize, name: &str| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| {
                        Error::Parse(format!("data row {}: bad `{name}` value", row + 1))
                    })
            };
            xs.push(field(0, "x")?);
            ys.push(field(1, "y")?);
        }
        let cov = match covariance {
            None => DMatrix::identity(xs.len(), xs.len()),
            Some(path) => read_matrix_csv(path)?,
        };
        Self::new(xs, ys, cov)
    }
}

fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("covariance row {}, column {}: {s:?}", r + 1, c + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(Error::shape(
            format!("covariance row {}", r + 1),
            n,
            row.len(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Basis functions evaluated on the grid, one column per function.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    labels: Vec<String>,
    design: DMatrix<f64>,
}

impl BasisSet {
    pub fn new(labels: Vec<String>, design: DMatrix<f64>) -> Result<Self> {
        if labels.len() != design.ncols() {
            return Err(Error::shape("basis labels", design.ncols(), labels.len()));
        }
        if design.ncols() == 0 || design.ncols() > design.nrows() {
            return Err(Error::InvalidArgument(format!(
                "need between 1 and {} basis functions, got {}",
                design.nrows(),
                design.ncols()
            )));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix".into()));
        }
        Ok(Self { labels, design })
    }

    /// Monomials `1, x, ..., x^degree`.
    pub fn polynomial(degree: usize, x_grid: &[f64]) -> Result<Self> {
        let labels = (0..=degree)
            .map(|k| match k {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{k}"),
            })
            .collect();
        let design = DMatrix::from_fn(x_grid.len(), degree + 1, |i, k| x_grid[i].powi(k as i32));
        Self::new(labels, design)
    }

    /// Parses `poly:<degree>`.
    pub fn parse(spec: &str, x_grid: &[f64]) -> Result<Self> {
        match spec.split_once(':') {
            Some(("poly", d)) => {
                let degree = d.parse().map_err(|_| {
                    Error::Parse(format!("bad polynomial degree in basis {spec:?}"))
                })?;
                Self::polynomial(degree, x_grid)
            }
            _ => Err(Error::Parse(format!(
                "unknown basis {spec:?}; expected poly:<degree>"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }
}

fn check_sizes(data: &RegressionDataset, basis: &BasisSet) -> Result<()> {
    if basis.design.nrows() != data.len() {
        return Err(Error::shape(
            "design matrix rows",
            data.len(),
            basis.design.nrows(),
        ));
    }
    Ok(())
}

/// `(L^-1 F, L^-1 y)` for `S = L L'`.
fn whiten(data: &RegressionDataset, basis: &BasisSet) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_sizes(data, basis)?;
    let chol = data.cholesky()?;
    let l = chol.l();
    let w = l
        .solve_lower_triangular(&basis.design)
        .ok_or_else(|| Error::SingularCovariance("zero on Cholesky diagonal".into()))?;
    let z = l
        .solve_lower_triangular(&DVector::from_column_slice(&data.y_mean))
        .ok_or_else(|| Error::SingularCovariance("zero on Cholesky diagonal".into()))?;
    Ok((w, z))
}

/// Degree-1 system `P1 p + P0 = 0` whose root is the GLS estimate.
pub fn normal_equations(data: &RegressionDataset, basis: &BasisSet) -> Result<PolynomialSystem> {
    let (w, z) = whiten(data, basis)?;
    let p1 = w.transpose() * &w;
    let p0 = -(w.transpose() * z);
    PolynomialSystem::linear(&p1, &p0)
}

/// Overdetermined degree-1 system `L^-1 F p - L^-1 y = 0`; its residual sum
/// of squares is the GLS objective.
pub fn whitened_system(data: &RegressionDataset, basis: &BasisSet) -> Result<PolynomialSystem> {
    let (w, z) = whiten(data, basis)?;
    PolynomialSystem::linear(&w, &(-z))
}

pub fn gls_objective(data: &RegressionDataset, basis: &BasisSet, params: &[f64]) -> Result<f64> {
    whitened_system(data, basis)?.chi_squared(params)
}

/// Continuous GLS estimate, by QR on the whitened design.
pub fn gls_estimate(data: &RegressionDataset, basis: &BasisSet) -> Result<Vec<f64>> {
    let (w, z) = whiten(data, basis)?;
    let qr = w.qr();
    let qtz = qr.q().transpose() * z;
    qr.r()
        .solve_upper_triangular(&qtz)
        .map(|p| p.as_slice().to_vec())
        .ok_or_else(|| Error::InvalidArgument("design matrix is rank deficient".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    None,
    Seeded(u64),
}

/// Synthetic correlated series on `x = 0..n_points-1`: mean `8 + 4x + 7x^2`,
/// variance mean/10 and correlation `corr_base^|x_i - x_j|`.
///
/// With [`Noise::Seeded`] the means are replaced by one draw from the
/// multivariate normal with that mean and covariance.
pub fn generate_dataset(
    n_points: usize,
    corr_base: f64,
    noise: Noise,
) -> Result<RegressionDataset> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    if !(corr_base > 0.0 && corr_base < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation base must lie in (0, 1), got {corr_base}"
        )));
    }
    let x: Vec<f64> = (0..n_points).map(|i| i as f64).collect();
    let mean: Vec<f64> = x.iter().map(|&x| 8.0 + 4.0 * x + 7.0 * x * x).collect();
    let var: Vec<f64> = mean.iter().map(|m| m / 10.0).collect();
    let cov = DMatrix::from_fn(n_points, n_points, |i, j| {
        (var[i] * var[j]).sqrt() * corr_base.powi((i as i64 - j as i64).unsigned_abs() as i32)
    });
    let y = match noise {
        Noise::None => mean,
        Noise::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = DVector::from_fn(n_points, |_, _| StandardNormal.sample(&mut rng));
            let l = Cholesky::new(cov.clone())
                .ok_or_else(|| Error::SingularCovariance("generated covariance".into()))?
                .l();
            let draw = l * z;
            mean.iter().zip(draw.iter()).map(|(m, d)| m + d).collect()
        }
    };
    RegressionDataset::new(x, y, cov)
}

/// Which squared residual the QUBO encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitObjective {
    /// The GLS objective itself (whitened system).
    #[default]
    Gls,
    /// `||P1 p + P0||^2` of the normal equations.
    NormalResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub objective: FitObjective,
    pub labels: Vec<String>,
    pub params: Vec<f64>,
    pub bits: BitString,
    /// QUBO energy with every constant term included.
    pub energy: f64,
    /// The same energy without the constant term, as a raw QUBO solver would report it.
    pub energy_without_constant: f64,
    pub gls_objective: f64,
    pub gls_estimate: Vec<f64>,
    pub logical_bits: usize,
    pub hit_fraction: f64,
    pub reads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSet>,
}

pub fn fit_qubo(
    data: &RegressionDataset,
    basis: &BasisSet,
    enc: &BitEncoding,
    backend: &Backend,
    objective: FitObjective,
) -> Result<FitReport> {
    let system = match objective {
        FitObjective::Gls => whitened_system(data, basis)?,
        FitObjective::NormalResidual => normal_equations(data, basis)?,
    };
    let qubo = compile_linear_qubo(&system, enc)?;
    let solution = solve_qubo(&qubo, backend)?;
    let params = enc.decode(solution.bits.as_slice())?;
    Ok(FitReport {
        objective,
        labels: basis.labels.clone(),
        gls_objective: gls_objective(data, basis, &params)?,
        gls_estimate: gls_estimate(data, basis)?,
        params,
        energy: solution.energy,
        energy_without_constant: solution.energy - qubo.offset(),
        logical_bits: qubo.num_logical(),
        bits: solution.bits,
        hit_fraction: solution.hit_fraction,
        reads: solution.reads,
        samples: solution.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_dataset_entries() {
        let d = generate_dataset(50, 0.9, Noise::None).unwrap();
        assert_eq!(d.len(), 50);
        assert!((d.covariance()[(0, 0)] - 0.8).abs() < 1e-15);
        let s = d.covariance();
        assert!((s[(0, 1)] / (s[(0, 0)] * s[(1, 1)]).sqrt() - 0.9).abs() < 1e-12);
        assert_eq!(d.y_mean()[2], 44.0);
        assert_eq!(d.x_grid()[49], 49.0);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let a = generate_dataset(10, 0.5, Noise::Seeded(4)).unwrap();
        let b = generate_dataset(10, 0.5, Noise::Seeded(4)).unwrap();
        let c = generate_dataset(10, 0.5, Noise::Seeded(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y_mean(), c.y_mean());
        assert!(generate_dataset(10, 1.0, Noise::None).is_err());
    }

    #[test]
    fn sample_mean_from_constant_basis() {
        let d =
            RegressionDataset::with_identity_covariance(vec![0.0, 1.0, 2.0], vec![5.0; 3]).unwrap();
        let basis = BasisSet::polynomial(0, d.x_grid()).unwrap();
        let sys = normal_equations(&d, &basis).unwrap();
        assert_eq!(sys.n_equations(), 1);
        assert!(sys.chi_squared(&[5.0]).unwrap() < 1e-24);
    }

    #[test]
    fn singular_covariance_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let d = RegressionDataset::new(vec![0.0, 1.0], vec![1.0, 2.0], cov).unwrap();
        let basis = BasisSet::polynomial(0, d.x_grid()).unwrap();
        let err = normal_equations(&d, &basis).unwrap_err();
        assert!(matches!(err, Error::SingularCovariance(_)), "{err}");
        assert!(err.to_string().contains("eigenvalues"));
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(RegressionDataset::new(vec![0.0, 1.0], vec![1.0, 2.0], cov).is_err());
    }

    #[test]
    fn basis_parsing() {
        let b = BasisSet::parse("poly:2", &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(b.labels(), &["1", "x", "x^2"]);
        assert_eq!(b.design()[(2, 2)], 4.0);
        assert!(BasisSet::parse("spline:3", &[0.0]).is_err());
        assert!(BasisSet::parse("poly:3", &[0.0, 1.0]).is_err());
    }

    #[test]
    fn constant_fit_through_qubo() {
        let d = RegressionDataset::with_identity_covariance(vec![0.0, 1.0, 2.0, 3.0], vec![5.0; 4])
            .unwrap();
        let basis = BasisSet::polynomial(0, d.x_grid()).unwrap();
        let enc = BitEncoding::uniform(1, 0.0, 15.0, 4).unwrap();
        for objective in [FitObjective::Gls, FitObjective::NormalResidual] {
            let r = fit_qubo(&d, &basis, &enc, &Backend::default(), objective).unwrap();
            assert_eq!(r.params, vec![5.0]);
            assert!(r.energy.abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_dataset(6, 0.9, Noise::Seeded(1)).unwrap();
        let data = dir.path().join("data.csv");
        let cov = dir.path().join("cov.csv");
        d.write_csv(&data).unwrap();
        d.write_covariance_csv(&cov).unwrap();
        let back = RegressionDataset::read_csv(&data, Some(&cov)).unwrap();
        assert_eq!(back, d);
        let ols = RegressionDataset::read_csv(&data, None).unwrap();
        assert_eq!(ols.covariance(), &DMatrix::identity(6, 6));
    }
}
