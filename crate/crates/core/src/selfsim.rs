//! Reference solutions: the separated heat solution, the eigenprofile `f_q`,
//! the self-similar profile of the curvature model, and predicted rates.

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// Separated solution of the heat case, `(w, z)` with
/// `w = Cπ e^{−π²t} sin(πu)` and `z = −C e^{−π²t} cos(πu)`, so `z_u = w`.
pub fn heat_reference<T: Real>(c: T, u: T, t: T) -> (T, T) {
    let pi = T::PI();
    let decay = (-pi * pi * t).exp();
    let w = c * pi * decay * (pi * u).sin();
    let z = -c * decay * (pi * u).cos();
    (w, z)
}

/// Positive solution of `(f^q)″ + μ f = 0` on `[0, 1]` with zero end values,
/// `μ = q/|q − 1|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenProfile<T> {
    pub q: T,
    pub mu: T,
    /// Uniform sample points in `[0, 1]`.
    pub u: Vec<T>,
    pub f: Vec<T>,
    /// `g′(0)` for `g = f^q`.
    pub slope0: T,
}

impl<T: Real> EigenProfile<T> {
    /// Linear interpolation of the samples.
    pub fn eval(&self, u: T) -> T {
        let n = self.u.len();
        if u <= T::zero() || u >= T::one() {
            return T::zero();
        }
        let pos = u * T::from_usize_lossy(n - 1);
        let j = pos.floor().to_usize().unwrap_or(0).min(n - 2);
        let frac = pos - T::from_usize_lossy(j);
        self.f[j] + frac * (self.f[j + 1] - self.f[j])
    }

    pub fn max(&self) -> T {
        self.f.iter().copied().fold(T::zero(), T::max)
    }

    /// Largest `|(f^q)″ + μ f|` over samples in `[0.05, 0.95]`, with the
    /// second derivative taken by the five-point stencil. `None` with fewer
    /// than five samples.
    pub fn residual(&self) -> Option<T> {
        let n = self.u.len();
        if n < 5 {
            return None;
        }
        let h = T::one() / T::from_usize_lossy(n - 1);
        let g: Vec<T> = self.f.iter().map(|f| f.powf(self.q)).collect();
        let (lo, hi) = (T::lit(0.05), T::lit(0.95));
        let c = |v: f64| T::lit(v);
        Some(
            (2..n - 2)
                .filter(|&i| self.u[i] >= lo && self.u[i] <= hi)
                .map(|i| {
                    let d2 = (-g[i - 2] + c(16.0) * g[i - 1] - c(30.0) * g[i] + c(16.0) * g[i + 1]
                        - g[i + 2])
                        / (c(12.0) * h * h);
                    (d2 + self.mu * self.f[i]).abs()
                })
                .fold(T::zero(), T::max),
        )
    }

    /// `max |f(u) − f(1−u)| / max f` over the samples.
    pub fn symmetry_defect(&self) -> T {
        let n = self.f.len();
        let peak = self.max();
        (0..n)
            .map(|j| (self.f[j] - self.f[n - 1 - j]).abs())
            .fold(T::zero(), T::max)
            / peak
    }
}

/// Length of the interval near each end on which the series start is used.
const SERIES_START: f64 = 1e-4;
/// Largest RK4 step used by the shooting integrator.
const MAX_RK_STEP: f64 = 1.0 / 40_000.0;

struct Shooter<T> {
    q_inv: T,
    mu: T,
}

impl<T: Real> Shooter<T> {
    fn rhs(&self, g: T, gp: T) -> (T, T) {
        (gp, -self.mu * g.max(T::zero()).powf(self.q_inv))
    }

    /// `(g, g′)` at `u` from the two-term expansion about the left end.
    fn series(&self, s: T, u: T) -> (T, T) {
        let k = self.q_inv;
        let c = self.mu * s.powf(k) / (T::one() + k);
        (
            s * u - c * u.powf(T::lit(2.0) + k) / (T::lit(2.0) + k),
            s - c * u.powf(T::one() + k),
        )
    }

    fn rk4(&self, state: (T, T), from: T, to: T) -> (T, T) {
        let span = to - from;
        if span <= T::zero() {
            return state;
        }
        let steps = (span / T::lit(MAX_RK_STEP)).ceil().max(T::one());
        let n = steps.to_usize().unwrap_or(1);
        let h = span / steps;
        let half = T::lit(0.5);
        let sixth = T::one() / T::lit(6.0);
        let (mut g, mut gp) = state;
        for _ in 0..n {
            let (a1, b1) = self.rhs(g, gp);
            let (a2, b2) = self.rhs(g + half * h * a1, gp + half * h * b1);
            let (a3, b3) = self.rhs(g + half * h * a2, gp + half * h * b2);
            let (a4, b4) = self.rhs(g + h * a3, gp + h * b3);
            g += h * sixth * (a1 + T::lit(2.0) * (a2 + a3) + a4);
            gp += h * sixth * (b1 + T::lit(2.0) * (b2 + b3) + b4);
        }
        (g, gp)
    }

    /// `g′(1/2)` for the shooting slope `s`.
    fn miss(&self, s: T) -> T {
        let u0 = T::lit(SERIES_START);
        self.rk4(self.series(s, u0), u0, T::lit(0.5)).1
    }
}

/// Computes `f_q` by shooting on `g = f^q`, `g″ = −μ g^{1/q}`, bisecting on
/// `g′(0)` until `g′(1/2)` vanishes, then sampling at `n_samples` uniform
/// points of `[0, 1]`.
pub fn eigenprofile<T: Real>(q: T, n_samples: usize) -> Result<EigenProfile<T>> {
    if !(q > T::zero()) || q == T::one() || !q.is_finite() {
        return Err(Error::Domain(format!(
            "the eigenprofile needs q > 0 and q ≠ 1, got {q}"
        )));
    }
    if n_samples < 3 {
        return Err(Error::Usage(format!(
            "need at least 3 samples, got {n_samples}"
        )));
    }
    let mu = q / (q - T::one()).abs();
    let sh = Shooter { q_inv: T::one() / q, mu };

    // g′(1/2) is monotone in the slope, so expand geometrically from 1 in
    // both directions until the sign flips.
    let two = T::lit(2.0);
    let base = sh.miss(T::one());
    if base == T::zero() {
        return finish(&sh, q, T::one(), n_samples);
    }
    let (mut lo, mut hi) = (T::one(), T::one());
    let (mut f_lo, mut f_hi) = (base, base);
    let mut bracket = None;
    for _ in 0..60 {
        let up = hi * two;
        let f_up = sh.miss(up);
        if f_up.signum() != f_hi.signum() {
            bracket = Some((hi, up, f_hi));
            break;
        }
        hi = up;
        f_hi = f_up;
        let down = lo / two;
        let f_down = sh.miss(down);
        if f_down.signum() != f_lo.signum() {
            bracket = Some((down, lo, f_down));
            break;
        }
        lo = down;
        f_lo = f_down;
    }
    let Some((mut a, mut b, mut f_a)) = bracket else {
        return Err(Error::Numeric(format!(
            "eigenprofile shooting found no bracket for q = {q}: g′(1/2) keeps the sign of {base:e} on slopes [{lo:e}, {hi:e}]"
        )));
    };
    let mut s = T::lit(0.5) * (a + b);
    for _ in 0..200 {
        s = T::lit(0.5) * (a + b);
        if s <= a || s >= b {
            break;
        }
        let f_s = sh.miss(s);
        if f_s == T::zero() {
            break;
        }
        if f_s.signum() == f_a.signum() {
            a = s;
            f_a = f_s;
        } else {
            b = s;
        }
    }
    let residual = sh.miss(s).abs();
    if residual > T::lit(1e-10) {
        return Err(Error::Numeric(format!(
            "eigenprofile shooting for q = {q} stopped with g′(1/2) = {residual:e}"
        )));
    }
    finish(&sh, q, s, n_samples)
}

fn finish<T: Real>(sh: &Shooter<T>, q: T, s: T, n_samples: usize) -> Result<EigenProfile<T>> {
    let u0 = T::lit(SERIES_START);
    let last = T::one() - u0;
    let denom = T::from_usize_lossy(n_samples - 1);
    let u: Vec<T> = (0..n_samples)
        .map(|j| {
            if j == n_samples - 1 {
                T::one()
            } else {
                T::from_usize_lossy(j) / denom
            }
        })
        .collect();
    let mut g = Vec::with_capacity(n_samples);
    let mut state = sh.series(s, u0);
    let mut at = u0;
    for &uj in &u {
        let gj = if uj <= u0 {
            sh.series(s, uj).0
        } else if uj >= last {
            sh.series(s, T::one() - uj).0
        } else {
            state = sh.rk4(state, at, uj);
            at = uj;
            state.0
        };
        g.push(gj);
    }
    let f = g
        .into_iter()
        .map(|gj| gj.max(T::zero()).powf(T::one() / q))
        .collect();
    Ok(EigenProfile {
        q,
        mu: sh.mu,
        u,
        f,
        slope0: s,
    })
}

/// Self-similar profile `F` of the curvature model with exponent `α`,
/// rising from 0 at `−K` to 1 at `K` with slope `A (K² − ξ²)^{−1/(2+2α)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityProfile<T> {
    pub alpha: T,
    /// `A = (2α/(1+α))^{1/(2+2α)}`.
    pub a_coef: T,
    pub k: T,
    pub xi: Vec<T>,
    pub f: Vec<T>,
}

impl<T: Real> SimilarityProfile<T> {
    fn beta(&self) -> T {
        T::one() / (T::lit(2.0) + T::lit(2.0) * self.alpha)
    }

    /// `F′(ξ)` for `|ξ| < K`.
    pub fn slope(&self, xi: T) -> T {
        self.a_coef * (self.k * self.k - xi * xi).powf(-self.beta())
    }
}

/// Samples the self-similar profile at `n_samples` uniform points of
/// `[−K, K]`. With `ξ = K sin θ` the normalisation becomes
/// `A K^{1−2β} ∫ cos^{1−2β} θ dθ = 1`, free of endpoint singularities.
pub fn similarity_profile<T: Real>(alpha: T, n_samples: usize) -> Result<SimilarityProfile<T>> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "the similarity profile needs α > 0, got {alpha}"
        )));
    }
    if n_samples < 2 {
        return Err(Error::Usage(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let two = T::lit(2.0);
    let beta = T::one() / (two + two * alpha);
    let a_coef = (two * alpha / (T::one() + alpha)).powf(beta);
    let p = T::one() - two * beta;
    let tol = T::lit(1e-13);
    // ∫₀^φ sin^p, with the square-root-type endpoint behaviour at 0 handled
    // by dyadic splitting.
    let from_end = |phi: T| -> Result<T> {
        if phi <= T::zero() {
            return Ok(T::zero());
        }
        quad::integrate_from_zero(|x: T| x.sin().powf(p), phi, tol)
            .value()
            .ok_or_else(|| Error::Numeric("profile quadrature failed".into()))
    };
    let half_pi = T::FRAC_PI_2();
    let total = two * from_end(half_pi)?;
    let k = (T::one() / (a_coef * total)).powf(T::one() / p);

    let denom = T::from_usize_lossy(n_samples - 1);
    let mut xi = Vec::with_capacity(n_samples);
    let mut f = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let x = if j == n_samples - 1 {
            k
        } else {
            -k + two * k * T::from_usize_lossy(j) / denom
        };
        // F(ξ) = (1/I)∫_{−π/2}^{θ} cos^p, θ = asin(ξ/K), measured from the
        // nearer end.
        let th = (x / k).max(-T::one()).min(T::one()).asin();
        let cum = if th <= T::zero() {
            from_end(th + half_pi)?
        } else {
            total - from_end(half_pi - th)?
        };
        xi.push(x);
        f.push(cum / total);
    }
    Ok(SimilarityProfile {
        alpha,
        a_coef,
        k,
        xi,
        f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `q = 1`: exponential decay of the conjugate solution.
    Exponential,
    /// `q > 1`: algebraic decay in `t`.
    PowerDecay,
    /// `0 < q < 1`: extinction at a finite time `T`.
    FiniteExtinction,
}

/// Predicted rates of the conjugate solution for `Ψ(s) = s^q/q`.
///
/// Exponents refer to `t` for `PowerDecay`, to `T − t` for
/// `FiniteExtinction`, and are exponential rates for `Exponential`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction<T> {
    pub q: T,
    pub regime: Regime,
    /// Exponent of the interface half-width.
    pub interface_exponent: T,
    /// Exponent of the largest physical gradient `1/min w`.
    pub gradient_exponent: T,
    /// `q/(q+1)`: `u ∼ d^{q/(q+1)}` at distance `d` from an interface.
    pub endpoint_exponent: T,
    /// `1/(q+1)`.
    pub gamma_interface_blowup: T,
    /// `π²` in the exponential regime.
    pub lambda: Option<T>,
}

pub fn rate_predictions<T: Real>(q: T) -> Result<RatePrediction<T>> {
    if !(q > T::zero()) || !q.is_finite() {
        return Err(Error::Domain(format!("rate predictions need q > 0, got {q}")));
    }
    let one = T::one();
    let endpoint_exponent = q / (q + one);
    let gamma_interface_blowup = one / (q + one);
    let (regime, interface_exponent, gradient_exponent, lambda) = if q == one {
        let lam = T::PI() * T::PI();
        (Regime::Exponential, -lam, lam, Some(lam))
    } else if q > one {
        let e = one / (q - one);
        (Regime::PowerDecay, -e, e, None)
    } else {
        let e = one / (one - q);
        (Regime::FiniteExtinction, e, -e, None)
    };
    Ok(RatePrediction {
        q,
        regime,
        interface_exponent,
        gradient_exponent,
        endpoint_exponent,
        gamma_interface_blowup,
        lambda,
    })
}
