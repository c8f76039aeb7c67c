//! Quadratic unconstrained binary optimization problems.
//!
//! A [`QuboMatrix`] stores an upper-triangular matrix `q` over logical bits
//! followed by auxiliary bits, with energy `offset + sum_{i<=j} q_ij s_i s_j`.
//!
//! Quartic and cubic pseudo-Boolean terms are reduced by substitution: each
//! auxiliary bit `s_a` stands for the product `s_i s_j` of a logical pair and
//! is tied to it by the penalty
//!
//! ```text
//! C (s_i s_j - 2 s_i s_a - 2 s_j s_a + 3 s_a)
//! ```
//!
//! which is zero when `s_a = s_i s_j` and at least `C` otherwise.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encoding::{check_bits, BitEncoding, BitString};
use crate::error::{Error, Result};
use crate::polysys::PolynomialSystem;
use crate::pubo::PseudoBooleanPolynomial;

/// Which logical pairs receive an auxiliary bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxMode {
    /// Every pair occurring inside some cubic or quartic term.
    #[default]
    Lazy,
    /// All `L(L-1)/2` logical pairs.
    All,
}

/// Logical pair represented by each auxiliary bit, in auxiliary order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuadratizationMap {
    pairs: Vec<(usize, usize)>,
}

impl QuadratizationMap {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(i, j) in &pairs {
            if i >= j {
                return Err(Error::InvalidArgument(format!(
                    "auxiliary pair ({i}, {j}) must have i < j"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate auxiliary pair ({i}, {j})"
                )));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Position of `(i, j)` among the auxiliaries.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.pairs.binary_search(&key).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboMatrix {
    num_logical: usize,
    size: usize,
    /// Dense row-major `size x size`, zero below the diagonal.
    q: Vec<f64>,
    offset: f64,
    aux: QuadratizationMap,
    penalty: f64,
}

impl QuboMatrix {
    /// An all-zero QUBO over `num_logical` bits plus the auxiliaries of `aux`.
    pub fn zeros(num_logical: usize, aux: QuadratizationMap, penalty: f64) -> Result<Self> {
        if let Some(&(_, j)) = aux.pairs().iter().find(|&&(_, j)| j >= num_logical) {
            return Err(Error::shape(
                "auxiliary pair index",
                format!("< {num_logical}"),
                j,
            ));
        }
        let size = num_logical + aux.len();
        Ok(Self {
            num_logical,
            size,
            q: vec![0.0; size * size],
            offset: 0.0,
            aux,
            penalty,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_logical(&self) -> usize {
        self.num_logical
    }

    pub fn num_aux(&self) -> usize {
        self.aux.len()
    }

    pub fn aux_map(&self) -> &QuadratizationMap {
        &self.aux
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        self.q[i * self.size + j]
    }

    /// Adds `value` to the coefficient of `s_i s_j` (`s_i` when `i == j`).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = (i.min(j), i.max(j));
        self.q[i * self.size + j] += value;
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    /// Nonzero upper-triangular entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.size).flat_map(move |i| {
            (i..self.size).filter_map(move |j| {
                let v = self.q[i * self.size + j];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.q.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_abs_nonzero_coefficient(&self) -> Option<f64> {
        self.q
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| v.abs())
            .min_by(f64::total_cmp)
    }

    pub fn energy(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.size {
            return Err(Error::shape(
                "bit string",
                format!("{} bits", self.size),
                bits.len(),
            ));
        }
        check_bits(bits)?;
        let mut e = self.offset;
        for i in (0..self.size).filter(|&i| bits[i] == 1) {
            let row = &self.q[i * self.size..(i + 1) * self.size];
            e += (i..self.size)
                .filter(|&j| bits[j] == 1)
                .map(|j| row[j])
                .sum::<f64>();
        }
        Ok(e)
    }

    /// Appends auxiliary bits set to the products they represent.
    pub fn with_consistent_aux(&self, logical: &[u8]) -> Result<BitString> {
        if logical.len() != self.num_logical {
            return Err(Error::shape(
                "logical bits",
                self.num_logical,
                logical.len(),
            ));
        }
        let mut bits = logical.to_vec();
        bits.extend(
            self.aux
                .pairs()
                .iter()
                .map(|&(i, j)| logical[i] & logical[j]),
        );
        BitString::new(bits)
    }

    /// Diff-friendly text form: a header line, one `aux` line per auxiliary,
    /// then `i j value` for every nonzero upper-triangular entry.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "offset={:?} logical={} aux={} penalty={:?}\n",
            self.offset,
            self.num_logical,
            self.num_aux(),
            self.penalty
        );
        for (k, (i, j)) in self.aux.pairs().iter().enumerate() {
            let _ = writeln!(out, "aux {} {} {}", self.num_logical + k, i, j);
        }
        for (i, j, v) in self.entries() {
            let _ = writeln!(out, "{i} {j} {v:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty QUBO file".into()))?;
        let mut offset = None;
        let mut logical = None;
        let mut aux_count = None;
        let mut penalty = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line 1: malformed header field {field:?}")))?;
            let bad = || Error::Parse(format!("line 1: bad value for `{key}`"));
            match key {
                "offset" => offset = Some(value.parse::<f64>().map_err(|_| bad())?),
                "logical" => logical = Some(value.parse::<usize>().map_err(|_| bad())?),
                "aux" => aux_count = Some(value.parse::<usize>().map_err(|_| bad())?),
                "penalty" => penalty = Some(value.parse::<f64>().map_err(|_| bad())?),
                _ => {
                    return Err(Error::Parse(format!(
                        "line 1: unknown header field `{key}`"
                    )))
                }
            }
        }
        let missing = |k: &str| Error::Parse(format!("line 1: header lacks `{k}`"));
        let logical = logical.ok_or_else(|| missing("logical"))?;
        let aux_count = aux_count.ok_or_else(|| missing("aux"))?;

        let mut pairs = Vec::with_capacity(aux_count);
        let mut entries = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: cannot parse {line:?}", n + 1));
            match fields.as_slice() {
                ["aux", idx, i, j] => {
                    let idx: usize = idx.parse().map_err(|_| bad())?;
                    if idx != logical + pairs.len() {
                        return Err(bad());
                    }
                    pairs.push((i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?));
                }
                [i, j, v] => entries.push((
                    i.parse::<usize>().map_err(|_| bad())?,
                    j.parse::<usize>().map_err(|_| bad())?,
                    v.parse::<f64>().map_err(|_| bad())?,
                )),
                _ => return Err(bad()),
            }
        }
        if pairs.len() != aux_count {
            return Err(Error::shape("aux lines", aux_count, pairs.len()));
        }
        let mut qubo = Self::zeros(
            logical,
            QuadratizationMap::new(pairs)?,
            penalty.ok_or_else(|| missing("penalty"))?,
        )?;
        qubo.offset = offset.ok_or_else(|| missing("offset"))?;
        for (i, j, v) in entries {
            if i > j || j >= qubo.size {
                return Err(Error::Parse(format!(
                    "entry ({i}, {j}) outside the upper triangle"
                )));
            }
            qubo.add(i, j, v);
        }
        Ok(qubo)
    }
}

/// Reduces a pseudo-Boolean polynomial of order at most 4 to a QUBO.
///
/// Cubic `{i,j,k}` becomes `aux(i,j) * k`; quartic `{i,j,k,l}` becomes
/// `aux(i,j) * aux(k,l)` (index sets are sorted, the lowest pair is substituted first).
pub fn quadratize(
    pubo: &PseudoBooleanPolynomial,
    penalty: f64,
    mode: AuxMode,
) -> Result<QuboMatrix> {
    if let Some((set, _)) = pubo.terms().iter().find(|(s, _)| s.len() > 4) {
        return Err(Error::TermTooLarge { size: set.len() });
    }
    if !penalty.is_finite() || penalty <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "penalty must be positive, got {penalty}"
        )));
    }
    let n = pubo.num_bits();
    let pairs: Vec<(usize, usize)> = match mode {
        AuxMode::All => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
        AuxMode::Lazy => pubo
            .terms()
            .iter()
            .filter(|(s, _)| s.len() >= 3)
            .flat_map(|(s, _)| {
                s.iter()
                    .enumerate()
                    .flat_map(|(a, &i)| s[a + 1..].iter().map(move |&j| (i, j)))
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let has_aux = !pairs.is_empty();
    let aux = QuadratizationMap::new(pairs)?;
    let mut qubo = QuboMatrix::zeros(n, aux, if has_aux { penalty } else { 0.0 })?;
    qubo.offset = pubo.offset();

    let aux_bit = |qubo: &QuboMatrix, i: usize, j: usize| {
        n + qubo.aux.position(i, j).expect("pair allocated")
    };
    for (set, c) in pubo.terms() {
        match set.as_slice() {
            [i] => qubo.add(*i, *i, *c),
            [i, j] => qubo.add(*i, *j, *c),
            [i, j, k] => {
                let a = aux_bit(&qubo, *i, *j);
                qubo.add(*k, a, *c);
            }
            [i, j, k, l] => {
                let a = aux_bit(&qubo, *i, *j);
                let b = aux_bit(&qubo, *k, *l);
                qubo.add(a, b, *c);
            }
            _ => unreachable!("term sizes checked above"),
        }
    }
    if has_aux {
        for (k, &(i, j)) in qubo.aux.pairs.clone().iter().enumerate() {
            let a = n + k;
            qubo.add(i, j, penalty);
            qubo.add(i, a, -2.0 * penalty);
            qubo.add(j, a, -2.0 * penalty);
            qubo.add(a, a, 3.0 * penalty);
        }
    }
    Ok(qubo)
}

/// QUBO for `||P1 x + P0||^2` of a linear system, constant included.
///
/// With `x = b + D psi` (`D` holding the bit weights) and `c = P1 b + P0`,
/// the energy is `psi' (M'M) psi + 2 c'M psi + c'c` for `M = P1 D`. Building
/// from the residual at the range origin keeps coefficients scaled to the
/// search window, which matters once the window has been narrowed many times.
pub fn compile_linear_qubo(system: &PolynomialSystem, enc: &BitEncoding) -> Result<QuboMatrix> {
    let (p1, p0) = system.linear_parts()?;
    if enc.n_variables() != system.n_variables() {
        return Err(Error::shape(
            "encoding",
            format!("{} variables", system.n_variables()),
            enc.n_variables(),
        ));
    }
    let r = enc.bits_per_var();
    let num_bits = enc.num_bits();
    let b = nalgebra::DVector::from_column_slice(enc.offset());
    let c = &p1 * &b + &p0;
    let m = nalgebra::DMatrix::from_fn(p1.nrows(), num_bits, |i, t| {
        p1[(i, t / r)] * enc.bit_weight(t)
    });
    let gram = m.transpose() * &m;
    let linear = m.transpose() * &c;

    let mut qubo = QuboMatrix::zeros(num_bits, QuadratizationMap::default(), 0.0)?;
    qubo.offset = c.norm_squared();
    for s in 0..num_bits {
        qubo.add(s, s, gram[(s, s)] + 2.0 * linear[s]);
        for t in s + 1..num_bits {
            qubo.add(s, t, 2.0 * gram[(s, t)]);
        }
    }
    Ok(qubo)
}
