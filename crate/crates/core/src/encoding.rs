//! Fixed-point binary encoding of real variables.
//!
//! Variable `j` is represented by `R` bits as
//! `x_j = a_j * sum_r 2^r psi[j*R + r] + b_j`: blocks are variable-major and
//! little-endian within a block. With `R` bits a variable takes `2^R` evenly
//! spaced values from `b_j` to `b_j + a_j (2^R - 1)` inclusive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound on bits per variable; keeps `2^R - 1` exact in an `f64`.
pub const MAX_BITS_PER_VAR: usize = 52;

/// A sequence of binary values, written as a string of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        check_bits(&bits)?;
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// Bit `i` of the result is bit `i` of `state`.
    pub fn from_index(state: u64, len: usize) -> Self {
        Self((0..len).map(|i| ((state >> i) & 1) as u8).collect())
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!(
                    "character {i} of bit string is {c:?}"
                ))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_bits(bits: &[u8]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(index) => Err(Error::NotABit {
            index,
            value: bits[index],
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitEncoding {
    scale: Vec<f64>,
    offset: Vec<f64>,
    bits_per_var: usize,
}

impl BitEncoding {
    pub fn new(scale: Vec<f64>, offset: Vec<f64>, bits_per_var: usize) -> Result<Self> {
        if scale.is_empty() {
            return Err(Error::InvalidArgument(
                "encoding needs at least one variable".into(),
            ));
        }
        if scale.len() != offset.len() {
            return Err(Error::shape(
                "offset",
                format!("length {}", scale.len()),
                offset.len(),
            ));
        }
        if bits_per_var == 0 || bits_per_var > MAX_BITS_PER_VAR {
            return Err(Error::InvalidArgument(format!(
                "bits per variable must be in 1..={MAX_BITS_PER_VAR}, got {bits_per_var}"
            )));
        }
        if scale.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoding".into()));
        }
        if let Some(j) = scale.iter().position(|&a| a <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale of variable {j} must be positive, got {}",
                scale[j]
            )));
        }
        Ok(Self {
            scale,
            offset,
            bits_per_var,
        })
    }

    /// Grid whose endpoints are exactly `lo` and `hi`.
    pub fn from_range(lo: &[f64], hi: &[f64], bits_per_var: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::shape("hi", format!("length {}", lo.len()), hi.len()));
        }
        if bits_per_var == 0 || bits_per_var > MAX_BITS_PER_VAR {
            return Err(Error::InvalidArgument(format!(
                "bits per variable must be in 1..={MAX_BITS_PER_VAR}, got {bits_per_var}"
            )));
        }
        for (var, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l >= h {
                return Err(Error::InvalidRange { var, lo: l, hi: h });
            }
        }
        let levels = levels(bits_per_var);
        let scale = lo.iter().zip(hi).map(|(l, h)| (h - l) / levels).collect();
        Self::new(scale, lo.to_vec(), bits_per_var)
    }

    /// Same range `[lo, hi]` for every variable.
    pub fn uniform(n_variables: usize, lo: f64, hi: f64, bits_per_var: usize) -> Result<Self> {
        Self::from_range(&vec![lo; n_variables], &vec![hi; n_variables], bits_per_var)
    }

    pub fn n_variables(&self) -> usize {
        self.scale.len()
    }

    pub fn bits_per_var(&self) -> usize {
        self.bits_per_var
    }

    /// Number of logical bits, `V * R`.
    pub fn num_bits(&self) -> usize {
        self.scale.len() * self.bits_per_var
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn lo(&self) -> Vec<f64> {
        self.offset.clone()
    }

    pub fn hi(&self) -> Vec<f64> {
        let levels = levels(self.bits_per_var);
        self.scale
            .iter()
            .zip(&self.offset)
            .map(|(a, b)| b + a * levels)
            .collect()
    }

    /// Weight of logical bit `index` in its variable, `a_j 2^r`.
    pub fn bit_weight(&self, index: usize) -> f64 {
        let (var, r) = (index / self.bits_per_var, index % self.bits_per_var);
        self.scale[var] * (1u64 << r) as f64
    }

    pub fn decode(&self, psi: &[u8]) -> Result<Vec<f64>> {
        if psi.len() != self.num_bits() {
            return Err(Error::shape(
                "bit string",
                format!("{} logical bits", self.num_bits()),
                psi.len(),
            ));
        }
        check_bits(psi)?;
        Ok(self
            .integer_levels(psi)
            .iter()
            .enumerate()
            .map(|(j, &k)| self.scale[j] * k as f64 + self.offset[j])
            .collect())
    }

    fn integer_levels(&self, psi: &[u8]) -> Vec<u64> {
        psi.chunks(self.bits_per_var)
            .map(|block| {
                block
                    .iter()
                    .enumerate()
                    .map(|(r, &b)| (b as u64) << r)
                    .sum()
            })
            .collect()
    }

    /// Bits of the grid point nearest to `x`, component-wise, clamped to the range.
    pub fn encode_nearest(&self, x: &[f64]) -> Result<BitString> {
        if x.len() != self.n_variables() {
            return Err(Error::shape(
                "solution vector",
                format!("length {}", self.n_variables()),
                x.len(),
            ));
        }
        let max = levels(self.bits_per_var);
        let mut bits = Vec::with_capacity(self.num_bits());
        for (j, &xj) in x.iter().enumerate() {
            let k = ((xj - self.offset[j]) / self.scale[j])
                .round()
                .clamp(0.0, max) as u64;
            bits.extend((0..self.bits_per_var).map(|r| ((k >> r) & 1) as u8));
        }
        Ok(BitString(bits))
    }

    /// Per variable: is the block all zeros or all ones, i.e. an endpoint of the range.
    pub fn on_boundary(&self, psi: &[u8]) -> Vec<bool> {
        let max = (1u64 << self.bits_per_var) - 1;
        self.integer_levels(psi)
            .into_iter()
            .map(|k| k == 0 || k == max)
            .collect()
    }

    /// Narrows each variable to `[x_j - a_j, x_j + a_j]`, the two grid
    /// neighbours of the incumbent, re-gridded with the same bit count.
    pub fn refine(&self, x_star: &[f64]) -> Result<Self> {
        self.refine_with(x_star, &vec![false; self.n_variables()])
    }

    /// Like [`refine`](Self::refine), except variables flagged in `recenter`
    /// keep their spacing and only shift the window to center on `x_star`.
    pub fn refine_with(&self, x_star: &[f64], recenter: &[bool]) -> Result<Self> {
        if x_star.len() != self.n_variables() || recenter.len() != self.n_variables() {
            return Err(Error::shape(
                "incumbent",
                format!("length {}", self.n_variables()),
                x_star.len(),
            ));
        }
        let half_span = self
            .scale
            .iter()
            .map(|a| a * levels(self.bits_per_var) / 2.0);
        let (lo, hi): (Vec<f64>, Vec<f64>) = x_star
            .iter()
            .zip(&self.scale)
            .zip(half_span)
            .zip(recenter)
            .map(|(((&x, &a), half), &shift)| {
                let w = if shift { half } else { a };
                (x - w, x + w)
            })
            .unzip();
        Self::from_range(&lo, &hi, self.bits_per_var)
    }
}

/// Number of grid steps, `2^R - 1`.
pub fn levels(bits_per_var: usize) -> f64 {
    ((1u64 << bits_per_var) - 1) as f64
}
