//! Solve polynomial and linear systems of equations as binary optimization problems.
//!
//! The pipeline: a [`PolynomialSystem`] and a fixed-point [`BitEncoding`] are
//! compiled into a pseudo-Boolean objective equal to the residual sum of
//! squares ([`compile_pubo`]), reduced to a QUBO ([`quadratize`], or
//! [`compile_linear_qubo`] for linear systems) and minimized by exhaustive
//! search or simulated annealing. The [`regression`] and [`linsys`] modules
//! build problem families on top of it.

pub mod encoding;
pub mod error;
pub mod linsys;
pub mod polysys;
pub mod pubo;
pub mod qubo;
pub mod regression;
pub mod solvers;

pub use encoding::{BitEncoding, BitString};
pub use error::{Error, Result};
pub use polysys::PolynomialSystem;
pub use pubo::{choose_penalty, compile_pubo, sparsify, PseudoBooleanPolynomial};
pub use qubo::{compile_linear_qubo, quadratize, AuxMode, QuadratizationMap, QuboMatrix};
pub use solvers::{Backend, QuboSolution};
