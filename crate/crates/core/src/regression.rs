//! Ordinary least squares on paired samples.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Root-mean-square of the residuals `y − (intercept + slope·x)`.
    pub rms_residual: T,
}

/// Fits `y ≈ intercept + slope·x`. Needs at least two distinct abscissae.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<LineFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::Usage(format!(
            "regression inputs differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = T::from_usize_lossy(n);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / nf;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / nf;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == T::zero() {
        return Err(Error::Numeric("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = xs.iter().zip(ys).fold(T::zero(), |a, (&x, &y)| {
        let r = y - (intercept + slope * x);
        a + r * r
    });
    Ok(LineFit {
        slope,
        intercept,
        rms_residual: (ss / nf).sqrt(),
    })
}
