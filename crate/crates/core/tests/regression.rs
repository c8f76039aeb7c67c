use nalgebra::{DMatrix, DVector};
use polyqubo::regression::*;
use polyqubo::{Backend, BitEncoding};

fn explicit_gls(data: &RegressionDataset, basis: &BasisSet) -> DVector<f64> {
    let s_inv = data.covariance().clone().try_inverse().unwrap();
    let f = basis.design();
    let y = DVector::from_column_slice(data.y_mean());
    let lhs = f.transpose() * &s_inv * f;
    lhs.try_inverse().unwrap() * f.transpose() * &s_inv * y
}

fn explicit_objective(data: &RegressionDataset, basis: &BasisSet, p: &[f64]) -> f64 {
    let s_inv = data.covariance().clone().try_inverse().unwrap();
    let r =
        DVector::from_column_slice(data.y_mean()) - basis.design() * DVector::from_column_slice(p);
    (r.transpose() * s_inv * r)[(0, 0)]
}

#[test]
fn straight_line_ols_matches_closed_form() {
    let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
    let y = vec![1.1, 2.9, 5.2, 7.1, 8.8];
    let d = RegressionDataset::with_identity_covariance(x.clone(), y.clone()).unwrap();
    let basis = BasisSet::polynomial(1, d.x_grid()).unwrap();
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let est = gls_estimate(&d, &basis).unwrap();
    assert!((est[0] - intercept).abs() < 1e-12);
    assert!((est[1] - slope).abs() < 1e-12);
}

#[test]
fn correlated_estimate_matches_explicit_inverse() {
    let d = generate_dataset(12, 0.7, Noise::Seeded(3)).unwrap();
    let basis = BasisSet::polynomial(2, d.x_grid()).unwrap();
    let expected = explicit_gls(&d, &basis);
    let est = gls_estimate(&d, &basis).unwrap();
    for (a, b) in est.iter().zip(expected.iter()) {
        assert!(
            (a - b).abs() < 1e-8 * b.abs().max(1.0),
            "{est:?} vs {expected}"
        );
    }
    let sys = normal_equations(&d, &basis).unwrap();
    assert!(sys.chi_squared(&est).unwrap() < 1e-12);
    let p = [7.5, 4.2, 6.9];
    let obj = gls_objective(&d, &basis, &p).unwrap();
    assert!((obj - explicit_objective(&d, &basis, &p)).abs() < 1e-9 * obj);
}

#[test]
fn qubo_minimizer_is_grid_minimizer_of_gls_objective() {
    let d = generate_dataset(10, 0.8, Noise::Seeded(11)).unwrap();
    let basis = BasisSet::polynomial(2, d.x_grid()).unwrap();
    let enc = BitEncoding::from_range(&[0.0, 0.0, 4.0], &[14.0, 7.0, 11.0], 3).unwrap();
    let fit = fit_qubo(&d, &basis, &enc, &Backend::default(), FitObjective::Gls).unwrap();
    let n = enc.num_bits();
    let mut best = (f64::INFINITY, Vec::new());
    for state in 0..1u64 << n {
        let psi: Vec<u8> = (0..n).map(|i| (state >> i & 1) as u8).collect();
        let p = enc.decode(&psi).unwrap();
        let e = explicit_objective(&d, &basis, &p);
        if e < best.0 {
            best = (e, p);
        }
    }
    assert_eq!(fit.params, best.1);
    assert!((fit.energy - best.0).abs() < 1e-8 * best.0);
    assert!((fit.gls_objective - best.0).abs() < 1e-8 * best.0);
}

#[test]
fn noiseless_quadratic_recovers_generating_coefficients() {
    let d = generate_dataset(50, 0.9, Noise::None).unwrap();
    let basis = BasisSet::parse("poly:2", d.x_grid()).unwrap();
    let enc = BitEncoding::uniform(3, 0.0, 15.0, 4).unwrap();
    for objective in [FitObjective::Gls, FitObjective::NormalResidual] {
        let fit = fit_qubo(&d, &basis, &enc, &Backend::default(), objective).unwrap();
        assert_eq!(fit.params, vec![8.0, 4.0, 7.0]);
        assert_eq!(fit.bits.to_string(), "000100101110");
        assert_eq!(fit.logical_bits, 12);
    }
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = generate_dataset(6, 0.5, Noise::Seeded(2)).unwrap();
    let (data, cov) = (dir.path().join("d.csv"), dir.path().join("s.csv"));
    d.write_csv(&data).unwrap();
    d.write_covariance_csv(&cov).unwrap();
    assert_eq!(RegressionDataset::read_csv(&data, Some(&cov)).unwrap(), d);
    let plain = RegressionDataset::read_csv(&data, None).unwrap();
    assert_eq!(plain.covariance(), &DMatrix::identity(6, 6));
}

#[test]
fn malformed_csv_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n0,1\n1,oops\n").unwrap();
    let err = RegressionDataset::read_csv(&path, None)
        .unwrap_err()
        .to_string();
    assert!(err.contains("row 2"), "{err}");
}
