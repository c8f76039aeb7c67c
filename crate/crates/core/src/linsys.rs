//! Linear systems with a prescribed condition number, relative residuals,
//! scaling sweeps and iterative range refinement.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{BitEncoding, BitString};
use crate::error::{Error, Result};
use crate::polysys::PolynomialSystem;
use crate::qubo::compile_linear_qubo;
use crate::solvers::{conjugate_gradient, solve_qubo, Backend, CgReport};

/// Tolerance of the reference solves that define "the exact solution".
const REFERENCE_TOL: f64 = 1e-13;

/// Iterative refinement stops once the relative residual drops below this.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedSpec {
    pub size: usize,
    pub kappa: f64,
    pub seed: u64,
}

/// `U diag(1, ..., kappa) U'` with `U` the orthogonal factor of a seeded
/// Gaussian matrix and eigenvalues evenly spaced.
pub fn make_conditioned_matrix(spec: &ConditionedSpec) -> Result<DMatrix<f64>> {
    if spec.size == 0 {
        return Err(Error::InvalidArgument(
            "matrix size must be at least 1".into(),
        ));
    }
    if !spec.kappa.is_finite() || spec.kappa < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "condition number must be finite and >= 1, got {}",
            spec.kappa
        )));
    }
    let n = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gaussian: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let u = gaussian.qr().q();
    let eigenvalues = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            1.0 + (spec.kappa - 1.0) * i as f64 / (n - 1) as f64
        }
    });
    let a = &u * DMatrix::from_diagonal(&eigenvalues) * u.transpose();
    Ok((&a + a.transpose()) * 0.5)
}

/// Evenly spaced values from 1 down to -1.
pub fn make_rhs(n: usize) -> DVector<f64> {
    if n <= 1 {
        return DVector::from_element(n, 1.0);
    }
    DVector::from_fn(n, |i, _| 1.0 - 2.0 * i as f64 / (n - 1) as f64)
}

/// `(P1, P0)` for the system `P1 x = rhs`, written as `P1 x + P0 = 0`.
pub fn conditioned_system(spec: &ConditionedSpec) -> Result<(DMatrix<f64>, DVector<f64>)> {
    Ok((make_conditioned_matrix(spec)?, -make_rhs(spec.size)))
}

/// `||P1 x + P0||^2 / ||P0||^2`.
pub fn relative_residual(p1: &DMatrix<f64>, p0: &DVector<f64>, x: &[f64]) -> Result<f64> {
    if p1.nrows() != p0.len() || p1.ncols() != x.len() {
        return Err(Error::shape(
            "linear system",
            format!("{}x{} with rhs {}", p1.nrows(), x.len(), p1.nrows()),
            format!("{}x{} with rhs {}", p1.nrows(), p1.ncols(), p0.len()),
        ));
    }
    let denom = p0.norm_squared();
    if denom == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let r = p1 * DVector::from_column_slice(x) + p0;
    Ok(r.norm_squared() / denom)
}

fn reference_solve(p1: &DMatrix<f64>, p0: &DVector<f64>) -> Result<CgReport> {
    conjugate_gradient(p1, p0, REFERENCE_TOL, 50 * p0.len().max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardErrorPoint {
    pub x: Vec<f64>,
    pub bits: BitString,
    pub relative_residual: f64,
    pub reference: CgReport,
}

/// Grid point nearest to the conjugate-gradient solution and its residual.
pub fn forward_error_minimum(
    p1: &DMatrix<f64>,
    p0: &DVector<f64>,
    enc: &BitEncoding,
) -> Result<ForwardErrorPoint> {
    let reference = reference_solve(p1, p0)?;
    let bits = enc.encode_nearest(&reference.solution)?;
    let x = enc.decode(bits.as_slice())?;
    Ok(ForwardErrorPoint {
        relative_residual: relative_residual(p1, p0, &x)?,
        x,
        bits,
        reference,
    })
}

/// Range covering the solution components, padded when they coincide.
fn solution_range(solutions: &[&[f64]]) -> (f64, f64) {
    let (lo, hi) = solutions
        .iter()
        .flat_map(|s| s.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Vary `N` at fixed `kappa` and `R`.
    Size,
    /// Vary `kappa` at fixed `N` and `R`.
    Condition,
    /// Vary `R` at fixed `N` and `kappa`.
    Precision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Swept values; meaning depends on `kind`.
    pub values: Vec<f64>,
    pub size: usize,
    pub kappa: f64,
    pub bits: usize,
    pub seed: u64,
    pub backend: Backend,
}

impl SweepConfig {
    /// Default settings per kind: size sweeps hold `kappa=1.1, R=2`;
    /// condition sweeps `N=12, R=2`; precision sweeps `N=4, kappa=1.1`.
    pub fn new(kind: SweepKind, values: Vec<f64>, backend: Backend) -> Self {
        let (size, kappa, bits) = match kind {
            SweepKind::Size => (4, 1.1, 2),
            SweepKind::Condition => (12, 1.1, 2),
            SweepKind::Precision => (4, 1.1, 2),
        };
        Self {
            kind,
            values,
            size,
            kappa,
            bits,
            seed: 0,
            backend,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub min_energy: f64,
    pub rel_residual: f64,
    pub hit_fraction: f64,
    pub forward_error_residual: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str =
    "param,min_energy,rel_residual,hit_fraction,forward_error_residual";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let fe = r
            .forward_error_residual
            .map(|v| format!("{v:?}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{}\n",
            r.param, r.min_energy, r.rel_residual, r.hit_fraction, fe
        ));
    }
    out
}

struct SweepPoint {
    param: f64,
    p1: DMatrix<f64>,
    p0: DVector<f64>,
    bits: usize,
    reference: Vec<f64>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.values.is_empty() {
        return Err(Error::InvalidArgument("sweep has no values".into()));
    }
    let mut points = Vec::with_capacity(config.values.len());
    for &v in &config.values {
        let (size, kappa, bits) = match config.kind {
            SweepKind::Size => (as_count(v, "size")?, config.kappa, config.bits),
            SweepKind::Condition => (config.size, v, config.bits),
            SweepKind::Precision => (config.size, config.kappa, as_count(v, "bits")?),
        };
        let spec = ConditionedSpec {
            size,
            kappa,
            seed: config.seed,
        };
        let (p1, p0) = conditioned_system(&spec)?;
        let reference = reference_solve(&p1, &p0)?.solution;
        points.push(SweepPoint {
            param: v,
            p1,
            p0,
            bits,
            reference,
        });
    }

    // size sweeps share one range over the whole set; the others fit each instance
    let shared = solution_range(
        &points
            .iter()
            .map(|p| p.reference.as_slice())
            .collect::<Vec<_>>(),
    );

    let mut rows = points
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            let (lo, hi) = match config.kind {
                SweepKind::Size => shared,
                _ => solution_range(&[&point.reference]),
            };
            let n = point.p0.len();
            let enc = BitEncoding::uniform(n, lo, hi, point.bits)?;
            let system = PolynomialSystem::linear(&point.p1, &point.p0)?;
            let qubo = compile_linear_qubo(&system, &enc)?;
            let solution = solve_qubo(&qubo, &point_backend(&config.backend, index as u64))?;
            let x = enc.decode(solution.bits.as_slice())?;
            let forward_error_residual = match config.kind {
                SweepKind::Condition => None,
                _ => Some(forward_error_minimum(&point.p1, &point.p0, &enc)?.relative_residual),
            };
            Ok(SweepRow {
                param: point.param,
                min_energy: solution.energy,
                rel_residual: relative_residual(&point.p1, &point.p0, &x)?,
                hit_fraction: solution.hit_fraction,
                forward_error_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(rows)
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} must be a positive integer, got {v}"
        )))
    }
}

/// Gives point or iteration `index` its own block of read seeds.
fn point_backend(backend: &Backend, index: u64) -> Backend {
    match *backend {
        Backend::Anneal(mut p) => {
            p.seed = p.seed.wrapping_add(index.wrapping_mul(p.reads as u64));
            Backend::Anneal(p)
        }
        b => b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bits: BitString,
    pub x: Vec<f64>,
    pub min_energy: f64,
    pub rel_residual: f64,
    pub hit_fraction: f64,
    pub reads: usize,
    /// Variables whose incumbent sat on a range endpoint; their next window
    /// is shifted rather than narrowed.
    pub recentered: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn final_relative_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.rel_residual)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rel_residual).collect()
    }
}

/// Solves on the grid, narrows each variable's window to the neighbours of the
/// incumbent and repeats. Stops after `iterations` rounds or once the
/// relative residual falls below [`RESIDUAL_FLOOR`].
pub fn iterate_solve(
    p1: &DMatrix<f64>,
    p0: &DVector<f64>,
    initial: BitEncoding,
    iterations: usize,
    backend: &Backend,
) -> Result<IterationTrace> {
    let system = PolynomialSystem::linear(p1, p0)?;
    let mut enc = initial;
    let mut records = Vec::with_capacity(iterations);
    for iteration in 1..=iterations {
        let qubo = compile_linear_qubo(&system, &enc)?;
        let solution = solve_qubo(&qubo, &point_backend(backend, iteration as u64 - 1))?;
        let x = enc.decode(solution.bits.as_slice())?;
        let rel = relative_residual(p1, p0, &x)?;
        let recentered = enc.on_boundary(solution.bits.as_slice());
        let next = recenter_or_refine(&enc, &x, &recentered)?;
        records.push(IterationRecord {
            iteration,
            lo: enc.lo(),
            hi: enc.hi(),
            bits: solution.bits,
            x,
            min_energy: solution.energy,
            rel_residual: rel,
            hit_fraction: solution.hit_fraction,
            reads: solution.reads,
            recentered,
        });
        if rel < RESIDUAL_FLOOR {
            break;
        }
        enc = next;
    }
    Ok(IterationTrace { records })
}

/// Narrows interior variables; shifts boundary ones by whole grid steps so
/// the incumbent stays representable near the middle of the window.
fn recenter_or_refine(enc: &BitEncoding, x: &[f64], on_boundary: &[bool]) -> Result<BitEncoding> {
    let refined = enc.refine(x)?;
    if !on_boundary.iter().any(|&b| b) {
        return Ok(refined);
    }
    let half_steps = ((1u64 << enc.bits_per_var()) - 1) / 2;
    let levels = crate::encoding::levels(enc.bits_per_var());
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..enc.n_variables())
        .map(|j| {
            if on_boundary[j] {
                let a = enc.scale()[j];
                let lo = x[j] - a * half_steps as f64;
                (lo, lo + a * levels)
            } else {
                (refined.lo()[j], refined.hi()[j])
            }
        })
        .unzip();
    BitEncoding::from_range(&lo, &hi, enc.bits_per_var())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        assert_eq!(make_rhs(3).as_slice(), &[1.0, 0.0, -1.0]);
        assert_eq!(make_rhs(2).as_slice(), &[1.0, -1.0]);
        assert_eq!(make_rhs(5).as_slice(), &[1.0, 0.5, 0.0, -0.5, -1.0]);
        assert_eq!(make_rhs(1).as_slice(), &[1.0]);
    }

    #[test]
    fn unit_kappa_gives_identity() {
        let m = make_conditioned_matrix(&ConditionedSpec {
            size: 5,
            kappa: 1.0,
            seed: 9,
        })
        .unwrap();
        assert!((m - DMatrix::identity(5, 5)).amax() < 1e-14);
    }

    #[test]
    fn relative_residual_examples() {
        let (p1, p0) = conditioned_system(&ConditionedSpec {
            size: 4,
            kappa: 3.0,
            seed: 1,
        })
        .unwrap();
        assert_eq!(relative_residual(&p1, &p0, &[0.0; 4]).unwrap(), 1.0);
        let x = p1.clone().lu().solve(&(-&p0)).unwrap();
        assert!(relative_residual(&p1, &p0, x.as_slice()).unwrap() < 1e-28);
        assert!(matches!(
            relative_residual(&p1, &DVector::zeros(4), &[0.0; 4]),
            Err(Error::ZeroRhs)
        ));
    }

    #[test]
    fn forward_error_on_grid_solution() {
        // x = (1, 2) exactly representable on [0, 3] with two bits
        let p1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let p0 = DVector::from_vec(vec![-2.0, -2.0]);
        let enc = BitEncoding::uniform(2, 0.0, 3.0, 2).unwrap();
        let fe = forward_error_minimum(&p1, &p0, &enc).unwrap();
        assert_eq!(fe.x, vec![1.0, 2.0]);
        assert!(fe.relative_residual < 1e-24);
    }

    #[test]
    fn exact_grid_hit_stops_iteration() {
        let p1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let p0 = DVector::from_vec(vec![-2.0, -2.0]);
        let enc = BitEncoding::uniform(2, 0.0, 3.0, 2).unwrap();
        let trace = iterate_solve(&p1, &p0, enc, 5, &Backend::default()).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.final_relative_residual(), Some(0.0));
    }

    #[test]
    fn boundary_incumbent_shifts_window() {
        // solution x = 5 lies outside [0, 3]
        let p1 = DMatrix::identity(1, 1);
        let p0 = DVector::from_vec(vec![-5.0]);
        let enc = BitEncoding::uniform(1, 0.0, 3.0, 2).unwrap();
        let trace = iterate_solve(&p1, &p0, enc, 4, &Backend::default()).unwrap();
        assert!(trace.records[0].recentered[0]);
        assert_eq!(trace.records[1].lo, vec![2.0]);
        assert_eq!(trace.records[1].hi, vec![5.0]);
        assert_eq!(trace.final_relative_residual(), Some(0.0));
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = vec![SweepRow {
            param: 2.0,
            min_energy: 0.5,
            rel_residual: 0.25,
            hit_fraction: 1.0,
            forward_error_residual: None,
        }];
        assert_eq!(
            sweep_csv(&rows),
            "param,min_energy,rel_residual,hit_fraction,forward_error_residual\n2.0,0.5,0.25,1.0,\n"
        );
    }
}
