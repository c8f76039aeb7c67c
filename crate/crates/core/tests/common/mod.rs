//! Generators and reference evaluators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use polyqubo::{PolynomialSystem, PseudoBooleanPolynomial};
use rand::Rng;

/// Dense random system with coefficients drawn from `[-2, 2]`.
pub fn random_system(
    rng: &mut impl Rng,
    n_equations: usize,
    n_variables: usize,
    degree: usize,
) -> PolynomialSystem {
    let coeffs = (0..=degree)
        .map(|order| {
            (0..n_equations * n_variables.pow(order as u32))
                .map(|_| rng.random_range(-2.0..2.0))
                .collect()
        })
        .collect();
    PolynomialSystem::new(n_equations, n_variables, coeffs).unwrap()
}

pub fn random_linear(
    rng: &mut impl Rng,
    n_equations: usize,
    n_variables: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let p1 = DMatrix::from_fn(n_equations, n_variables, |_, _| rng.random_range(-2.0..2.0));
    let p0 = DVector::from_fn(n_equations, |_, _| rng.random_range(-2.0..2.0));
    (p1, p0)
}

/// Residual sum of squares by explicit index loops over every tensor entry.
pub fn naive_chi_squared(system: &PolynomialSystem, x: &[f64]) -> f64 {
    let v = system.n_variables();
    let mut total = 0.0;
    for i in 0..system.n_equations() {
        let mut f = 0.0;
        for order in 0..=system.degree() {
            let row = system.equation_tensor(order, i);
            for (flat, c) in row.iter().enumerate() {
                let mut rest = flat;
                let mut m = 1.0;
                for _ in 0..order {
                    m *= x[rest % v];
                    rest /= v;
                }
                f += c * m;
            }
        }
        total += f * f;
    }
    total
}

/// Value of `sum_j a_j sum_r 2^r psi[j R + r] + b_j` computed bit by bit.
pub fn naive_decode(scale: &[f64], offset: &[f64], r: usize, psi: &[u8]) -> Vec<f64> {
    (0..scale.len())
        .map(|j| {
            let mut k = 0.0;
            for bit in 0..r {
                if psi[j * r + bit] == 1 {
                    k += 2f64.powi(bit as i32);
                }
            }
            scale[j] * k + offset[j]
        })
        .collect()
}

pub fn bits_of(state: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| (state >> i & 1) as u8).collect()
}

/// Sum of the terms whose indices are all set.
pub fn naive_pubo_energy(p: &PseudoBooleanPolynomial, psi: &[u8]) -> f64 {
    p.offset()
        + p.terms()
            .iter()
            .filter(|(s, _)| s.iter().all(|&i| psi[i] == 1))
            .map(|(_, c)| c)
            .sum::<f64>()
}

/// Random PUBO over `n` bits with terms up to order four.
pub fn random_quartic_pubo(
    rng: &mut impl Rng,
    n: usize,
    n_terms: usize,
) -> PseudoBooleanPolynomial {
    let mut raw = Vec::with_capacity(n_terms + 1);
    // always include a quartic term so every instance exercises the deepest gadget
    let mut first: Vec<usize> = (0..n).collect();
    for i in 0..4 {
        let j = rng.random_range(i..n);
        first.swap(i, j);
    }
    first.truncate(4);
    raw.push((first, rng.random_range(-5.0..5.0)));
    for _ in 0..n_terms {
        let order = rng.random_range(1..=4);
        let set: Vec<usize> = (0..order).map(|_| rng.random_range(0..n)).collect();
        raw.push((set, rng.random_range(-5.0..5.0)));
    }
    PseudoBooleanPolynomial::from_raw_terms(n, rng.random_range(-1.0..1.0), raw).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
