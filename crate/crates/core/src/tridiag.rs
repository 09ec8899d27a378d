//! Thomas algorithm for the tridiagonal Newton systems.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tridiagonal matrix stored by diagonals. `lower[i]` couples row `i + 1`
/// to column `i`, `upper[i]` couples row `i` to column `i + 1`.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![T::zero(); n.saturating_sub(1)],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Solves `A x = rhs` in place. No pivoting: the Newton matrices built in
    /// this crate are diagonally dominant M-matrices.
    pub fn solve_in_place(&self, rhs: &mut [T]) -> Result<()> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Usage(format!(
                "right-hand side has length {}, matrix has {n} rows",
                rhs.len()
            )));
        }
        if n == 0 {
            return Ok(());
        }
        let mut c_prime = vec![T::zero(); n];
        let mut denom = self.diag[0];
        if denom == T::zero() || !denom.is_finite() {
            return Err(Error::Numeric("singular tridiagonal pivot at row 0".into()));
        }
        if n > 1 {
            c_prime[0] = self.upper[0] / denom;
        }
        rhs[0] /= denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i - 1] * c_prime[i - 1];
            if denom == T::zero() || !denom.is_finite() {
                return Err(Error::Numeric(format!(
                    "singular tridiagonal pivot at row {i}"
                )));
            }
            if i < n - 1 {
                c_prime[i] = self.upper[i] / denom;
            }
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= c_prime[i] * next;
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }
}
