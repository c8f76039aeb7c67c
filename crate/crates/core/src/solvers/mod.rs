//! Solver backends: exhaustive search, simulated annealing and conjugate gradient.

pub mod anneal;
pub mod brute;
pub mod cg;

use serde::{Deserialize, Serialize};

pub use anneal::{simulated_anneal, AnnealParams, SampleRecord, SampleSet, Schedule};
pub use brute::{brute_force, spectrum, BruteForceOptions, BruteForceResult};
pub use cg::{conjugate_gradient, CgReport};

use crate::encoding::BitString;
use crate::error::Result;
use crate::pubo::PseudoBooleanPolynomial;
use crate::qubo::QuboMatrix;

/// Anything the exhaustive solver can enumerate.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    Pubo(&'a PseudoBooleanPolynomial),
    Qubo(&'a QuboMatrix),
}

impl Objective<'_> {
    pub fn num_bits(&self) -> usize {
        match self {
            Objective::Pubo(p) => p.num_bits(),
            Objective::Qubo(q) => q.size(),
        }
    }
}

impl<'a> From<&'a PseudoBooleanPolynomial> for Objective<'a> {
    fn from(p: &'a PseudoBooleanPolynomial) -> Self {
        Objective::Pubo(p)
    }
}

impl<'a> From<&'a QuboMatrix> for Objective<'a> {
    fn from(q: &'a QuboMatrix) -> Self {
        Objective::Qubo(q)
    }
}

/// How a QUBO gets minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    Brute(BruteForceOptions),
    Anneal(AnnealParams),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Brute(BruteForceOptions::default())
    }
}

/// Best state found by either backend, in a common shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboSolution {
    pub bits: BitString,
    pub energy: f64,
    /// Share of reads in the lowest observed energy; 1 for exhaustive search.
    pub hit_fraction: f64,
    pub reads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSet>,
}

pub fn solve_qubo(q: &QuboMatrix, backend: &Backend) -> Result<QuboSolution> {
    match backend {
        Backend::Brute(opts) => {
            let r = brute_force(q, opts)?;
            Ok(QuboSolution {
                bits: r.ground_state().clone(),
                energy: r.energy,
                hit_fraction: 1.0,
                reads: 1,
                samples: None,
            })
        }
        Backend::Anneal(params) => {
            let set = simulated_anneal(q, params)?;
            let best = set.lowest();
            Ok(QuboSolution {
                bits: best.bits.clone(),
                energy: best.energy,
                hit_fraction: set.ground_hit_fraction(),
                reads: set.total_reads,
                samples: Some(set),
            })
        }
    }
}
