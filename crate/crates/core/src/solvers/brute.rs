//! Exhaustive ground-state search.
//!
//! States are visited in Gray-code order so each step flips one bit and the
//! energy is updated incrementally. The state space is split on its highest
//! bits into a fixed number of blocks; blocks run in parallel and are merged
//! in block order, so the result does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::BitString;
use crate::error::{Error, Result};
use crate::pubo::PseudoBooleanPolynomial;
use crate::qubo::QuboMatrix;

use super::Objective;

pub const DEFAULT_MAX_BITS: usize = 24;

/// Incremental energies are recomputed from scratch this often.
const RESYNC_INTERVAL: u64 = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOptions {
    pub max_bits: usize,
    /// Report every state within `degeneracy_tol * energy_scale` of the minimum.
    pub all_ground_states: bool,
    pub degeneracy_tol: f64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            max_bits: DEFAULT_MAX_BITS,
            all_ground_states: false,
            degeneracy_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub energy: f64,
    /// One minimizer, or all of them when requested; ordered by state index.
    pub ground_states: Vec<BitString>,
    pub states_searched: u64,
}

impl BruteForceResult {
    pub fn ground_state(&self) -> &BitString {
        &self.ground_states[0]
    }
}

pub fn check_size(bits: usize, limit: usize) -> Result<()> {
    if bits > limit || bits >= 64 {
        return Err(Error::TooManyBits {
            bits,
            limit,
            states: 2f64.powi(bits as i32),
        });
    }
    Ok(())
}

pub fn brute_force<'a>(
    objective: impl Into<Objective<'a>>,
    opts: &BruteForceOptions,
) -> Result<BruteForceResult> {
    let objective = objective.into();
    let n = objective.num_bits();
    check_size(n, opts.max_bits)?;
    let engine = Engine::new(objective);

    let high = if n > 12 { 6 } else { 0 };
    let low = n - high;
    let scale = engine.energy_scale();
    let tol = opts.degeneracy_tol * scale;

    let blocks: Vec<Vec<(f64, u64)>> = (0..1u64 << high)
        .into_par_iter()
        .map(|prefix| engine.scan_block(prefix << low, low, opts.all_ground_states, tol))
        .collect();

    // exact re-evaluation of every candidate, then a deterministic merge
    let mut candidates: Vec<(f64, u64)> = blocks
        .into_iter()
        .flatten()
        .map(|(_, s)| (engine.exact(s), s))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let energy = candidates[0].0;
    let mut states: Vec<u64> = if opts.all_ground_states {
        candidates
            .iter()
            .filter(|(e, _)| *e <= energy + tol)
            .map(|(_, s)| *s)
            .collect()
    } else {
        vec![candidates[0].1]
    };
    states.sort_unstable();
    states.dedup();
    Ok(BruteForceResult {
        energy,
        ground_states: states
            .into_iter()
            .map(|s| BitString::from_index(s, n))
            .collect(),
        states_searched: 1u64 << n,
    })
}

/// Every state with its exact energy, ascending (ties by state index).
pub fn spectrum<'a>(
    objective: impl Into<Objective<'a>>,
    max_bits: usize,
) -> Result<Vec<(f64, BitString)>> {
    let objective = objective.into();
    let n = objective.num_bits();
    check_size(n, max_bits)?;
    let engine = Engine::new(objective);
    let mut all: Vec<(f64, u64)> = (0..1u64 << n)
        .into_par_iter()
        .map(|s| (engine.exact(s), s))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(all
        .into_iter()
        .map(|(e, s)| (e, BitString::from_index(s, n)))
        .collect())
}

enum Engine {
    Qubo {
        n: usize,
        offset: f64,
        diag: Vec<f64>,
        /// Symmetric off-diagonal couplings, row-major `n x n`.
        coupling: Vec<f64>,
    },
    Pubo {
        offset: f64,
        masks: Vec<(u64, f64)>,
        /// Per bit: (mask of the other indices, coefficient) for terms containing it.
        touching: Vec<Vec<(u64, f64)>>,
    },
}

impl Engine {
    fn new(objective: Objective<'_>) -> Self {
        match objective {
            Objective::Qubo(q) => Self::from_qubo(q),
            Objective::Pubo(p) => Self::from_pubo(p),
        }
    }

    fn from_qubo(q: &QuboMatrix) -> Self {
        let n = q.size();
        let mut diag = vec![0.0; n];
        let mut coupling = vec![0.0; n * n];
        for (i, j, v) in q.entries() {
            if i == j {
                diag[i] = v;
            } else {
                coupling[i * n + j] = v;
                coupling[j * n + i] = v;
            }
        }
        Engine::Qubo {
            n,
            offset: q.offset(),
            diag,
            coupling,
        }
    }

    fn from_pubo(p: &PseudoBooleanPolynomial) -> Self {
        let n = p.num_bits();
        let masks = p.masks();
        let mut touching = vec![Vec::new(); n];
        for &(m, c) in &masks {
            for (k, list) in touching.iter_mut().enumerate() {
                if m >> k & 1 == 1 {
                    list.push((m & !(1 << k), c));
                }
            }
        }
        Engine::Pubo {
            offset: p.offset(),
            masks,
            touching,
        }
    }

    fn energy_scale(&self) -> f64 {
        let (offset, coeffs) = match self {
            Engine::Qubo {
                offset,
                diag,
                coupling,
                ..
            } => (
                *offset,
                diag.iter().map(|v| v.abs()).sum::<f64>()
                    + coupling.iter().map(|v| v.abs()).sum::<f64>() / 2.0,
            ),
            Engine::Pubo { offset, masks, .. } => {
                (*offset, masks.iter().map(|(_, c)| c.abs()).sum())
            }
        };
        (offset.abs() + coeffs).max(f64::MIN_POSITIVE)
    }

    fn exact(&self, state: u64) -> f64 {
        match self {
            Engine::Qubo {
                n,
                offset,
                diag,
                coupling,
            } => {
                let mut e = *offset;
                for i in (0..*n).filter(|&i| state >> i & 1 == 1) {
                    // same summation order as QuboMatrix::energy, so both agree bit for bit
                    let row = &coupling[i * n..(i + 1) * n];
                    e += (i + 1..*n)
                        .filter(|&j| state >> j & 1 == 1)
                        .fold(diag[i], |acc, j| acc + row[j]);
                }
                e
            }
            Engine::Pubo { offset, masks, .. } => {
                offset
                    + masks
                        .iter()
                        .filter(|(m, _)| state & m == *m)
                        .map(|(_, c)| c)
                        .sum::<f64>()
            }
        }
    }

    fn fields(&self, state: u64) -> Vec<f64> {
        match self {
            Engine::Qubo { n, coupling, .. } => (0..*n)
                .map(|k| {
                    let row = &coupling[k * n..(k + 1) * n];
                    (0..*n)
                        .filter(|&j| state >> j & 1 == 1)
                        .map(|j| row[j])
                        .sum()
                })
                .collect(),
            Engine::Pubo { .. } => Vec::new(),
        }
    }

    /// Energy change from flipping bit `k` of `state`; updates the fields.
    fn flip(&self, state: u64, k: usize, fields: &mut [f64]) -> f64 {
        let up = state >> k & 1 == 0;
        let sign = if up { 1.0 } else { -1.0 };
        match self {
            Engine::Qubo {
                n, diag, coupling, ..
            } => {
                let delta = sign * (diag[k] + fields[k]);
                let col = &coupling[k * n..(k + 1) * n];
                for (f, c) in fields.iter_mut().zip(col) {
                    *f += sign * c;
                }
                delta
            }
            Engine::Pubo { touching, .. } => {
                sign * touching[k]
                    .iter()
                    .filter(|(m, _)| state & m == *m)
                    .map(|(_, c)| c)
                    .sum::<f64>()
            }
        }
    }

    /// Scans the `2^low` states sharing the fixed high bits of `base`.
    /// Returns the best state, or every state within `tol` of the running minimum.
    fn scan_block(&self, base: u64, low: usize, keep_all: bool, tol: f64) -> Vec<(f64, u64)> {
        let mut state = base;
        let mut energy = self.exact(state);
        let mut fields = self.fields(state);
        let mut best = (energy, state);
        let mut kept = vec![(energy, state)];
        for step in 1..1u64 << low {
            let k = step.trailing_zeros() as usize;
            energy += self.flip(state, k, &mut fields);
            state ^= 1 << k;
            if step % RESYNC_INTERVAL == 0 {
                energy = self.exact(state);
                fields = self.fields(state);
            }
            if keep_all && energy <= best.0 + tol {
                kept.push((energy, state));
            }
            if energy < best.0 {
                best = (energy, state);
            }
        }
        if keep_all {
            // pad the tolerance for incremental drift; exact filtering happens later
            kept.retain(|(e, _)| *e <= best.0 + 2.0 * tol + 1e-12 * best.0.abs());
            kept
        } else {
            vec![best]
        }
    }
}
