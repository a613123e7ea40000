//! Tridiagonal matrices and their LU factorisation (Thomas algorithm).

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `n × n` tridiagonal matrix. `lower[i]` is entry `(i+1, i)`, `upper[i]` is
/// entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len() + 1, diag.len());
        assert_eq!(upper.len() + 1, diag.len());
        Tridiagonal { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// `out = Aᵀ x`.
    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.upper[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.lower[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let mut s = self.diag[i];
        if i > 0 {
            s += self.lower[i - 1];
        }
        if i + 1 < self.len() {
            s += self.upper[i];
        }
        s
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        let mut s = self.diag[j];
        if j > 0 {
            s += self.upper[j - 1];
        }
        if j + 1 < self.len() {
            s += self.lower[j];
        }
        s
    }

    pub fn factorize(&self) -> Result<TridiagonalLu> {
        TridiagonalLu::new(self)
    }
}

/// Elimination coefficients of a [`Tridiagonal`] matrix, reusable across
/// right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
    /// Normalised super-diagonal `c'_i`.
    upper_scaled: Vec<f64>,
}

impl TridiagonalLu {
    pub fn new(m: &Tridiagonal) -> Result<Self> {
        let n = m.len();
        let mut inv_pivot = Vec::with_capacity(n);
        let mut upper_scaled = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let pivot = if i == 0 { m.diag[0] } else { m.diag[i] - m.lower[i - 1] * upper_scaled[i - 1] };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            inv_pivot.push(1.0 / pivot);
            if i + 1 < n {
                upper_scaled.push(m.upper[i] / pivot);
            }
        }
        Ok(TridiagonalLu { lower: m.lower.clone(), inv_pivot, upper_scaled })
    }

    /// Overwrites `rhs` with the solution of `A x = rhs`.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.inv_pivot.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}
