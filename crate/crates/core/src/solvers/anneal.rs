//! Single-spin-flip simulated annealing on a QUBO.
//!
//! Each read is an independent Metropolis trajectory over a geometric
//! temperature ladder, seeded with `seed + read_index`, so reads can run in
//! any order or in parallel and the sample set stays bit-reproducible.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::BitString;
use crate::error::{Error, Result};
use crate::qubo::QuboMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub reads: usize,
    pub sweeps: usize,
    pub seed: u64,
    /// Defaults to `max|q_ij| * size`.
    pub t_hot: Option<f64>,
    /// Defaults to `1e-3 * min nonzero |q_ij|`.
    pub t_cold: Option<f64>,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            reads: 1000,
            sweeps: 1000,
            seed: 0,
            t_hot: None,
            t_cold: None,
        }
    }
}

/// Resolved temperature ladder, recorded with every sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub t_hot: f64,
    pub t_cold: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Geometric,
}

impl Schedule {
    pub fn for_qubo(q: &QuboMatrix, params: &AnnealParams) -> Result<Self> {
        let max = q.max_abs_coefficient();
        let t_hot = params.t_hot.unwrap_or(if max > 0.0 {
            max * q.size() as f64
        } else {
            1.0
        });
        let t_cold = params
            .t_cold
            .unwrap_or_else(|| q.min_abs_nonzero_coefficient().map_or(1.0, |m| 1e-3 * m));
        if !(t_hot > 0.0 && t_cold > 0.0) || !t_hot.is_finite() || !t_cold.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "temperatures must be positive, got t_hot={t_hot}, t_cold={t_cold}"
            )));
        }
        Ok(Self {
            kind: ScheduleKind::Geometric,
            t_hot,
            t_cold,
            sweeps: params.sweeps,
        })
    }

    pub fn temperature(&self, sweep: usize) -> f64 {
        let frac = if self.sweeps > 1 {
            sweep as f64 / (self.sweeps - 1) as f64
        } else {
            1.0
        };
        self.t_hot * (self.t_cold / self.t_hot).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub bits: BitString,
    pub energy: f64,
    pub count: usize,
}

/// Distinct final states of all reads, sorted by energy then bit string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub records: Vec<SampleRecord>,
    pub total_reads: usize,
    pub rng_seed: u64,
    pub schedule: Schedule,
}

impl SampleSet {
    pub fn lowest(&self) -> &SampleRecord {
        &self.records[0]
    }

    /// Fraction of reads that ended in the lowest observed energy.
    pub fn ground_hit_fraction(&self) -> f64 {
        let min = self.lowest().energy;
        let hits: usize = self
            .records
            .iter()
            .filter(|r| r.energy == min)
            .map(|r| r.count)
            .sum();
        hits as f64 / self.total_reads as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bits,energy,count\n");
        for r in &self.records {
            out.push_str(&format!("{},{:?},{}\n", r.bits, r.energy, r.count));
        }
        out
    }
}

pub fn simulated_anneal(q: &QuboMatrix, params: &AnnealParams) -> Result<SampleSet> {
    if params.reads == 0 || params.sweeps == 0 {
        return Err(Error::InvalidArgument(
            "reads and sweeps must be at least 1".into(),
        ));
    }
    if q.size() == 0 {
        return Err(Error::InvalidArgument("QUBO has no variables".into()));
    }
    let schedule = Schedule::for_qubo(q, params)?;
    let model = Model::new(q);
    let temperatures: Vec<f64> = (0..schedule.sweeps)
        .map(|s| schedule.temperature(s))
        .collect();

    let finals: Vec<Vec<u8>> = (0..params.reads)
        .into_par_iter()
        .map(|read| model.run(params.seed.wrapping_add(read as u64), &temperatures))
        .collect();

    let mut tally: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for state in finals {
        *tally.entry(state).or_insert(0) += 1;
    }
    let mut records: Vec<SampleRecord> = tally
        .into_iter()
        .map(|(bits, count)| {
            let energy = q.energy(&bits).expect("state has QUBO length");
            SampleRecord {
                bits: BitString::new(bits).expect("binary state"),
                energy,
                count,
            }
        })
        .collect();
    records.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then_with(|| a.bits.cmp(&b.bits))
    });
    Ok(SampleSet {
        records,
        total_reads: params.reads,
        rng_seed: params.seed,
        schedule,
    })
}

struct Model {
    n: usize,
    diag: Vec<f64>,
    coupling: Vec<f64>,
}

impl Model {
    fn new(q: &QuboMatrix) -> Self {
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
        Self { n, diag, coupling }
    }

    fn run(&self, seed: u64, temperatures: &[f64]) -> Vec<u8> {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let mut fields: Vec<f64> = (0..n)
            .map(|k| {
                let row = &self.coupling[k * n..(k + 1) * n];
                row.iter().zip(&state).map(|(c, &s)| c * s as f64).sum()
            })
            .collect();
        for &t in temperatures {
            for k in 0..n {
                let sign = if state[k] == 0 { 1.0 } else { -1.0 };
                let delta = sign * (self.diag[k] + fields[k]);
                if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                    state[k] ^= 1;
                    let col = &self.coupling[k * n..(k + 1) * n];
                    for (f, c) in fields.iter_mut().zip(col) {
                        *f += sign * c;
                    }
                }
            }
        }
        state
    }
}
