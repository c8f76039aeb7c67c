//! Real-coefficient polynomial systems.
//!
//! Equation `i` of a degree-`d` system reads
//!
//! ```text
//! F_i(x) = P0[i] + sum_j P1[i,j] x_j + sum_jk P2[i,j,k] x_j x_k + ... = 0
//! ```
//!
//! Each coefficient tensor `P<n>` is stored dense and row-major with shape
//! `N x V^n`: the equation index is slowest, the last variable index fastest.
//! Higher-order tensors are not symmetrized; `P2[i,j,k]` and `P2[i,k,j]` are
//! distinct entries that both multiply `x_j x_k`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    n_equations: usize,
    n_variables: usize,
    coeffs: Vec<Vec<f64>>,
}

impl PolynomialSystem {
    /// Builds a system from flat row-major coefficient tensors, `coeffs[n]`
    /// holding `n_equations * n_variables^n` values.
    pub fn new(n_equations: usize, n_variables: usize, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if n_equations == 0 || n_variables == 0 {
            return Err(Error::InvalidArgument(
                "a system needs at least one equation and one variable".into(),
            ));
        }
        if coeffs.is_empty() {
            return Err(Error::shape("coeffs", "at least one tensor (P0)", "none"));
        }
        for (order, tensor) in coeffs.iter().enumerate() {
            let expected = n_equations * n_variables.pow(order as u32);
            if tensor.len() != expected {
                return Err(Error::shape(
                    format!("coeffs[{order}]"),
                    format!(
                        "{expected} entries ({})",
                        shape_label(n_equations, n_variables, order)
                    ),
                    format!("{} entries", tensor.len()),
                ));
            }
            if tensor.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!("coeffs[{order}]")));
            }
        }
        Ok(Self {
            n_equations,
            n_variables,
            coeffs,
        })
    }

    /// Linear system `p0 + p1 x = 0`.
    pub fn linear(p1: &DMatrix<f64>, p0: &DVector<f64>) -> Result<Self> {
        if p1.nrows() != p0.len() {
            return Err(Error::shape(
                "P0",
                format!("length {}", p1.nrows()),
                p0.len(),
            ));
        }
        let mut flat = Vec::with_capacity(p1.len());
        for i in 0..p1.nrows() {
            flat.extend(p1.row(i).iter());
        }
        Self::new(p1.nrows(), p1.ncols(), vec![p0.as_slice().to_vec(), flat])
    }

    pub fn n_equations(&self) -> usize {
        self.n_equations
    }

    pub fn n_variables(&self) -> usize {
        self.n_variables
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Flat coefficient tensor of the given order.
    pub fn tensor(&self, order: usize) -> &[f64] {
        &self.coeffs[order]
    }

    /// Slice of `P<order>` belonging to one equation (length `V^order`).
    pub fn equation_tensor(&self, order: usize, equation: usize) -> &[f64] {
        let width = self.n_variables.pow(order as u32);
        &self.coeffs[order][equation * width..(equation + 1) * width]
    }

    pub fn evaluate_residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_variables {
            return Err(Error::shape(
                "solution vector",
                format!("length {}", self.n_variables),
                x.len(),
            ));
        }
        let mut residuals = vec![0.0; self.n_equations];
        // monomials[k] for order n is the product of x over the digits of k in base V
        let mut monomials = vec![1.0];
        for order in 0..=self.degree() {
            if order > 0 {
                monomials = monomials
                    .iter()
                    .flat_map(|&m| x.iter().map(move |&xj| m * xj))
                    .collect();
            }
            for (i, r) in residuals.iter_mut().enumerate() {
                let row = self.equation_tensor(order, i);
                *r += row.iter().zip(&monomials).map(|(c, m)| c * m).sum::<f64>();
            }
        }
        Ok(residuals)
    }

    /// Residual sum of squares `sum_i F_i(x)^2`.
    pub fn chi_squared(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate_residuals(x)?.iter().map(|f| f * f).sum())
    }

    /// `(P1, P0)` of a degree-1 system.
    pub fn linear_parts(&self) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if self.degree() != 1 {
            return Err(Error::NotLinear(self.degree()));
        }
        let p1 = DMatrix::from_row_slice(self.n_equations, self.n_variables, &self.coeffs[1]);
        let p0 = DVector::from_column_slice(&self.coeffs[0]);
        Ok((p1, p0))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)?;
        Self::from_json(&doc)
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let field = |name: &str| -> Result<&Value> {
            doc.get(name)
                .ok_or_else(|| Error::Parse(format!("missing field `{name}`")))
        };
        let count = |name: &str| -> Result<usize> {
            field(name)?.as_u64().map(|v| v as usize).ok_or_else(|| {
                Error::Parse(format!("field `{name}` must be a non-negative integer"))
            })
        };
        let n_equations = count("n_equations")?;
        let n_variables = count("n_variables")?;
        let degree = count("degree")?;
        let orders = field("coeffs")?
            .as_array()
            .ok_or_else(|| Error::Parse("field `coeffs` must be an array".into()))?;
        if orders.len() != degree + 1 {
            return Err(Error::shape(
                "coeffs",
                format!("{} tensors for degree {degree}", degree + 1),
                orders.len(),
            ));
        }
        let mut coeffs = Vec::with_capacity(orders.len());
        for (order, tensor) in orders.iter().enumerate() {
            let mut dims = vec![n_equations];
            dims.extend(std::iter::repeat_n(n_variables, order));
            let mut flat = Vec::new();
            flatten(tensor, &dims, &format!("coeffs[{order}]"), &mut flat)?;
            coeffs.push(flat);
        }
        Self::new(n_equations, n_variables, coeffs)
    }

    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = (0..=self.degree())
            .map(|order| {
                let mut dims = vec![self.n_equations];
                dims.extend(std::iter::repeat_n(self.n_variables, order));
                nest(&self.coeffs[order], &dims)
            })
            .collect();
        serde_json::json!({
            "n_equations": self.n_equations,
            "n_variables": self.n_variables,
            "degree": self.degree(),
            "coeffs": coeffs,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn shape_label(n_equations: usize, n_variables: usize, order: usize) -> String {
    let mut label = n_equations.to_string();
    for _ in 0..order {
        label.push_str(&format!("x{n_variables}"));
    }
    label
}

fn flatten(value: &Value, dims: &[usize], path: &str, out: &mut Vec<f64>) -> Result<()> {
    match dims.split_first() {
        None => {
            let v = value
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("{path}: expected a number, found {value}")))?;
            out.push(v);
            Ok(())
        }
        Some((&len, rest)) => {
            let items = value.as_array().ok_or_else(|| {
                Error::Parse(format!("{path}: expected an array of length {len}"))
            })?;
            if items.len() != len {
                return Err(Error::shape(path, format!("length {len}"), items.len()));
            }
            for (k, item) in items.iter().enumerate() {
                flatten(item, rest, &format!("{path}[{k}]"), out)?;
            }
            Ok(())
        }
    }
}

fn nest(flat: &[f64], dims: &[usize]) -> Value {
    match dims.split_first() {
        None => serde_json::json!(flat[0]),
        Some((&len, rest)) => {
            let stride: usize = rest.iter().product();
            Value::Array(
                (0..len)
                    .map(|k| nest(&flat[k * stride..(k + 1) * stride], rest))
                    .collect(),
            )
        }
    }
}

/// The two-equation quadratic system used throughout the examples and tests:
///
/// ```text
/// 2x0^2 + 3x0x1 +  x1^2 + 2x0 + 4x1 - 51 = 0
///  x0^2 + 2x0x1 + 2x1^2 + 3x0 + 2x1 - 46 = 0
/// ```
pub fn worked_quadratic() -> PolynomialSystem {
    PolynomialSystem::new(
        2,
        2,
        vec![
            vec![-51.0, -46.0],
            vec![2.0, 4.0, 3.0, 2.0],
            vec![2.0, 3.0, 0.0, 1.0, 1.0, 2.0, 0.0, 2.0],
        ],
    )
    .expect("worked system is well formed")
}
