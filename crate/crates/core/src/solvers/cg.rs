//! Conjugate gradient for `P1 x + P0 = 0` with symmetric positive definite `P1`.
//!
//! Convergence is declared when `||P1 x + P0|| <= tol * ||P0||`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_relative_residual_norm: f64,
    /// False when `max_iter` was reached first; `solution` is then partial.
    pub converged: bool,
}

pub fn conjugate_gradient(
    p1: &DMatrix<f64>,
    p0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<CgReport> {
    let n = p0.len();
    if p1.nrows() != n || p1.ncols() != n {
        return Err(Error::shape(
            "P1",
            format!("{n}x{n}"),
            format!("{}x{}", p1.nrows(), p1.ncols()),
        ));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rhs_norm = p0.norm();
    let mut x = DVector::zeros(n);
    if rhs_norm == 0.0 {
        return Ok(CgReport {
            solution: x.as_slice().to_vec(),
            iterations: 0,
            final_relative_residual_norm: 0.0,
            converged: true,
        });
    }
    // residual of P1 x = -P0 at x = 0
    let mut r = -p0;
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        let ap = p1 * &p;
        let curvature = p.dot(&ap);
        if curvature <= 0.0 {
            break;
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        iterations += 1;
        let rr_next = r.norm_squared();
        rel = rr_next.sqrt() / rhs_norm;
        if rel <= tol {
            break;
        }
        p = &r + (rr_next / rr) * &p;
        rr = rr_next;
    }
    Ok(CgReport {
        solution: x.as_slice().to_vec(),
        iterations,
        final_relative_residual_norm: rel,
        converged: rel <= tol,
    })
}
