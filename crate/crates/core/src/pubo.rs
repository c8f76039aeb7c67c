//! Multilinear pseudo-Boolean objectives.
//!
//! Substituting the bit encoding into the residual sum of squares of a
//! degree-`d` system gives a polynomial in binary variables of order up to
//! `2d`. Because `psi^2 = psi`, every monomial reduces to a product over a
//! duplicate-free index set; storing each set sorted gives the sparse
//! upper-triangular form used by the quadratizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::encoding::{check_bits, BitEncoding};
use crate::error::{Error, Result};
use crate::polysys::PolynomialSystem;

/// Map from index set to coefficient; the empty set is the constant.
type Terms = BTreeMap<Vec<usize>, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoBooleanPolynomial {
    num_bits: usize,
    offset: f64,
    terms: Vec<(Vec<usize>, f64)>,
}

impl PseudoBooleanPolynomial {
    pub fn zero(num_bits: usize) -> Self {
        Self {
            num_bits,
            offset: 0.0,
            terms: Vec::new(),
        }
    }

    /// Canonicalizes arbitrary monomials: repeated indices collapse
    /// (`psi_i psi_i = psi_i`), index order is sorted, coefficients of equal
    /// sets accumulate and empty sets fold into the offset.
    pub fn from_raw_terms<I>(num_bits: usize, offset: f64, raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut acc = Terms::new();
        acc.insert(Vec::new(), offset);
        for (mut set, c) in raw {
            if let Some(&bad) = set.iter().find(|&&i| i >= num_bits) {
                return Err(Error::shape("term index", format!("< {num_bits}"), bad));
            }
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("coefficient of term {set:?}")));
            }
            set.sort_unstable();
            set.dedup();
            *acc.entry(set).or_insert(0.0) += c;
        }
        Ok(Self::from_terms(num_bits, acc))
    }

    fn from_terms(num_bits: usize, mut acc: Terms) -> Self {
        let offset = acc.remove(&Vec::new()).unwrap_or(0.0);
        let terms = acc.into_iter().filter(|(_, c)| *c != 0.0).collect();
        Self {
            num_bits,
            offset,
            terms,
        }
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Non-constant terms in canonical order (by index set).
    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|(s, _)| s.len()).max().unwrap_or(0)
    }

    pub fn abs_coefficient_sum(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }

    pub fn energy(&self, psi: &[u8]) -> Result<f64> {
        if psi.len() != self.num_bits {
            return Err(Error::shape(
                "bit string",
                format!("{} bits", self.num_bits),
                psi.len(),
            ));
        }
        check_bits(psi)?;
        Ok(self.offset
            + self
                .terms
                .iter()
                .filter(|(s, _)| s.iter().all(|&i| psi[i] == 1))
                .map(|(_, c)| c)
                .sum::<f64>())
    }

    /// Terms as `(bitmask, coefficient)` pairs; requires `num_bits <= 64`.
    pub fn masks(&self) -> Vec<(u64, f64)> {
        assert!(self.num_bits <= 64, "mask form needs at most 64 bits");
        self.terms
            .iter()
            .map(|(s, c)| (s.iter().fold(0u64, |m, &i| m | (1 << i)), *c))
            .collect()
    }
}

/// Canonical form of raw multilinear terms over `num_bits` bits.
pub fn sparsify<I>(num_bits: usize, raw: I) -> Result<PseudoBooleanPolynomial>
where
    I: IntoIterator<Item = (Vec<usize>, f64)>,
{
    PseudoBooleanPolynomial::from_raw_terms(num_bits, 0.0, raw)
}

/// Expands `sum_i F_i(decode(psi))^2` into a pseudo-Boolean polynomial whose
/// value on every bit string equals the residual sum of squares, constant included.
pub fn compile_pubo(
    system: &PolynomialSystem,
    enc: &BitEncoding,
) -> Result<PseudoBooleanPolynomial> {
    let n_vars = system.n_variables();
    if enc.n_variables() != n_vars {
        return Err(Error::shape(
            "encoding",
            format!("{n_vars} variables"),
            enc.n_variables(),
        ));
    }
    let num_bits = enc.num_bits();
    let r = enc.bits_per_var();

    // x_j = b_j + sum_r a_j 2^r psi_{jR+r}
    let var_polys: Vec<Terms> = (0..n_vars)
        .map(|j| {
            let mut p = Terms::new();
            p.insert(Vec::new(), enc.offset()[j]);
            for bit in j * r..(j + 1) * r {
                p.insert(vec![bit], enc.bit_weight(bit));
            }
            p
        })
        .collect();

    let mut residuals: Vec<Terms> = vec![Terms::new(); system.n_equations()];
    // products[k] = prod of x over the base-V digits of k, for the current order
    let mut products: Vec<Terms> = vec![constant(1.0)];
    for order in 0..=system.degree() {
        if order > 0 {
            products = products
                .iter()
                .flat_map(|p| var_polys.iter().map(move |x| multiply(p, x)))
                .collect();
        }
        for (i, f) in residuals.iter_mut().enumerate() {
            for (k, &c) in system.equation_tensor(order, i).iter().enumerate() {
                if c != 0.0 {
                    add_scaled(f, &products[k], c);
                }
            }
        }
    }

    let mut chi2 = Terms::new();
    for f in &residuals {
        add_scaled(&mut chi2, &multiply(f, f), 1.0);
    }
    Ok(PseudoBooleanPolynomial::from_terms(num_bits, chi2))
}

/// Penalty weight `1 + 2 sum |c|`. Violating one substitution constraint costs
/// at least the penalty, which exceeds any energy change the violation could buy.
pub fn choose_penalty(pubo: &PseudoBooleanPolynomial) -> f64 {
    1.0 + 2.0 * pubo.abs_coefficient_sum()
}

fn constant(c: f64) -> Terms {
    let mut t = Terms::new();
    t.insert(Vec::new(), c);
    t
}

fn add_scaled(acc: &mut Terms, p: &Terms, scale: f64) {
    for (s, c) in p {
        *acc.entry(s.clone()).or_insert(0.0) += scale * c;
    }
}

fn multiply(p: &Terms, q: &Terms) -> Terms {
    let mut out = Terms::new();
    for (s1, c1) in p {
        for (s2, c2) in q {
            *out.entry(union_sorted(s1, s2)).or_insert(0.0) += c1 * c2;
        }
    }
    out
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
