//! Constitutive flux laws `Φ`, their conjugates `Ψ(s) = −Φ(1/s)`, integral
//! classification, and the pressure transform.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{self, Integral};
use crate::regression::linear_fit;
use crate::scalar::Real;

/// Scalar map on `s > 0` supplied by the caller for custom laws.
pub type ScalarMap<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum Family<T> {
    /// `Φ(s) = s^m / m`, or `log s` when `m = 0`.
    Power { m: T },
    /// `Φ′(s) = (1 + s²)^{−(1+α)}`, normalized so that `Φ(0) = 0`.
    CurvatureModel { alpha: T },
    Custom {
        phi: ScalarMap<T>,
        phi_prime: ScalarMap<T>,
    },
    /// `Ψ(s) = −Φ(1/s)` for the wrapped `Φ`.
    Conjugate(Arc<FluxLaw<T>>),
}

impl<T: Real> fmt::Debug for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Power { m } => f.debug_struct("Power").field("m", m).finish(),
            Family::CurvatureModel { alpha } => f
                .debug_struct("CurvatureModel")
                .field("alpha", alpha)
                .finish(),
            Family::Custom { .. } => f.write_str("Custom"),
            Family::Conjugate(inner) => f.debug_tuple("Conjugate").field(inner).finish(),
        }
    }
}

/// A flux law. Immutable once built; cloning is cheap.
#[derive(Clone)]
pub struct FluxLaw<T> {
    family: Family<T>,
    description: String,
}

impl<T: Real> fmt::Debug for FluxLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxLaw")
            .field("family", &self.family)
            .field("description", &self.description)
            .finish()
    }
}

/// Three-valued verdict for the integral criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Holds,
    Fails,
    /// Quadrature could not decide.
    Indeterminate,
}

impl Criterion {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Criterion::Holds
        } else {
            Criterion::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Criterion::Holds
    }

    fn from_integral<T: Real>(i: Integral<T>) -> Self {
        match i {
            Integral::Finite(_) => Criterion::Holds,
            Integral::Divergent => Criterion::Fails,
            Integral::Indeterminate => Criterion::Indeterminate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification<T> {
    /// `Φ(∞)` finite; the law admits Type II solutions.
    pub flux_bounded_at_infinity: Criterion,
    /// `∫₀ Φ′(s)/s ds < ∞`: finite interfaces for the Cauchy problem.
    pub finite_interfaces_type_i: Criterion,
    /// `∫₀ Φ′(s)·s ds < ∞`: existence with finite mass.
    pub finite_mass_existence: Criterion,
    /// Exponent `q` of the conjugate law `Ψ(s) ≈ s^q/q` governing the
    /// conjugate problem, when the flux is bounded at infinity.
    pub asymptotic_q: Option<T>,
}

fn positive<T: Real>(s: T) -> Result<()> {
    if s > T::zero() && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "flux laws are defined for s > 0, got {s:e}"
        )))
    }
}

/// `∫₀^θ cos^{n}(φ) dφ` by the reduction formula.
fn cos_power_integral<T: Real>(n: u32, theta: T) -> T {
    match n {
        0 => theta,
        1 => theta.sin(),
        _ => {
            let nf = T::from_u32(n).unwrap();
            theta.cos().powi(n as i32 - 1) * theta.sin() / nf
                + (nf - T::one()) / nf * cos_power_integral(n - 2, theta)
        }
    }
}

impl<T: Real> FluxLaw<T> {
    pub fn power(m: T) -> Self {
        Self {
            family: Family::Power { m },
            description: format!("power m={m}"),
        }
    }

    /// The conjugate-side power law `Ψ(s) = s^q/q`. Same as `power(q)`.
    pub fn conjugate_power(q: T) -> Self {
        Self::power(q)
    }

    pub fn curvature(alpha: T) -> Self {
        Self {
            family: Family::CurvatureModel { alpha },
            description: format!("curvature alpha={alpha}"),
        }
    }

    /// A law given by explicit `Φ` and `Φ′`. The derivative must be supplied;
    /// positivity of `Φ′` is checked on every evaluation.
    pub fn custom(
        description: impl Into<String>,
        phi: impl Fn(T) -> T + Send + Sync + 'static,
        phi_prime: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            family: Family::Custom {
                phi: Arc::new(phi),
                phi_prime: Arc::new(phi_prime),
            },
            description: description.into(),
        }
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    /// `Φ(s)` without domain checks. Used in solver inner loops.
    pub(crate) fn phi_raw(&self, s: T) -> T {
        match &self.family {
            Family::Power { m } => {
                if *m == T::zero() {
                    s.ln()
                } else {
                    s.powf(*m) / *m
                }
            }
            Family::CurvatureModel { alpha } => curvature_phi(*alpha, s),
            Family::Custom { phi, .. } => phi(s),
            Family::Conjugate(inner) => match inner.family {
                Family::CurvatureModel { alpha } => conjugate_curvature_psi(alpha, s),
                _ => -inner.phi_raw(s.recip()),
            },
        }
    }

    /// `Φ(s)` up to an additive constant, chosen so that values near the
    /// bottom of the range keep full relative precision. Differences of this
    /// function equal differences of `Φ`.
    pub(crate) fn phi_shifted_raw(&self, s: T) -> T {
        match &self.family {
            Family::Conjugate(inner) => match inner.family {
                Family::CurvatureModel { alpha } => sin_power_integral(alpha + alpha, s.atan()),
                _ => self.phi_raw(s),
            },
            _ => self.phi_raw(s),
        }
    }

    /// `Φ′(s)` without domain checks.
    pub(crate) fn phi_prime_raw(&self, s: T) -> T {
        match &self.family {
            Family::Power { m } => s.powf(*m - T::one()),
            Family::CurvatureModel { alpha } => {
                (T::one() + s * s).powf(-(T::one() + *alpha))
            }
            Family::Custom { phi_prime, .. } => phi_prime(s),
            Family::Conjugate(inner) => inner.phi_prime_raw(s.recip()) / (s * s),
        }
    }

    /// `Φ(s)` for `s > 0`.
    pub fn flux(&self, s: T) -> Result<T> {
        positive(s)?;
        let v = self.phi_raw(s);
        if v.is_nan() {
            return Err(Error::InvalidLaw(format!(
                "{}: flux is NaN at s = {s:e}",
                self.description
            )));
        }
        Ok(v)
    }

    /// The diffusivity `Φ′(s) > 0`.
    pub fn diffusivity(&self, s: T) -> Result<T> {
        positive(s)?;
        let d = self.phi_prime_raw(s);
        if d > T::zero() {
            Ok(d)
        } else {
            Err(Error::InvalidLaw(format!(
                "{}: diffusivity must be positive, got {d:e} at s = {s:e}",
                self.description
            )))
        }
    }

    /// The conjugate law `Ψ(s) = −Φ(1/s)`, `Ψ′(s) = Φ′(1/s)/s²`.
    ///
    /// Power laws stay in the family (`m ↦ −m`, including `log ↦ log`), and
    /// conjugating a conjugate returns the original law, so the map is an
    /// exact involution.
    pub fn conjugate(&self) -> Self {
        match &self.family {
            Family::Power { m } => Self {
                family: Family::Power { m: -*m },
                description: format!("conjugate of {}", self.description),
            },
            Family::Conjugate(inner) => (**inner).clone(),
            _ => Self {
                family: Family::Conjugate(Arc::new(self.clone())),
                description: format!("conjugate of {}", self.description),
            },
        }
    }

    /// Exponent `q` such that `Φ′(s) ≈ s^{q−1}` as `s → 0`. For a conjugate
    /// law `Ψ` this is the exponent that sets the conjugate-problem regime.
    pub fn exponent_near_zero(&self) -> Option<T> {
        match &self.family {
            Family::Power { m } => Some(*m),
            Family::CurvatureModel { .. } => Some(T::one()),
            Family::Conjugate(inner) => match inner.family {
                // Ψ′(s) = s^{2α}(1+s²)^{−(1+α)} near zero.
                Family::CurvatureModel { alpha } => Some(T::one() + alpha + alpha),
                _ => self.fitted_exponent(T::lit(1e-6), T::lit(1e-4)),
            },
            Family::Custom { .. } => self.fitted_exponent(T::lit(1e-6), T::lit(1e-4)),
        }
    }

    /// Least-squares slope of `log Φ′` against `log s` over `[lo, hi]`, plus one.
    fn fitted_exponent(&self, lo: T, hi: T) -> Option<T> {
        let n = 31;
        let (llo, lhi) = (lo.ln(), hi.ln());
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for k in 0..n {
            let ls = llo + (lhi - llo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1);
            let d = self.phi_prime_raw(ls.exp());
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            xs.push(ls);
            ys.push(d.ln());
        }
        linear_fit(&xs, &ys).ok().map(|fit| fit.slope + T::one())
    }

    /// Closed-form classification for the built-in families, quadrature with
    /// divergence detection otherwise.
    pub fn classify(&self) -> Classification<T> {
        match &self.family {
            Family::Power { m } => {
                let m = *m;
                Classification {
                    flux_bounded_at_infinity: Criterion::from_bool(m < T::zero()),
                    finite_interfaces_type_i: Criterion::from_bool(m > T::one()),
                    finite_mass_existence: Criterion::from_bool(m > -T::one()),
                    asymptotic_q: (m < T::zero()).then_some(-m),
                }
            }
            Family::CurvatureModel { alpha } => {
                let bounded = *alpha > T::lit(-0.5);
                Classification {
                    flux_bounded_at_infinity: Criterion::from_bool(bounded),
                    finite_interfaces_type_i: Criterion::Fails,
                    finite_mass_existence: Criterion::Holds,
                    asymptotic_q: bounded.then(|| T::one() + *alpha + *alpha),
                }
            }
            _ => self.classify_by_quadrature(),
        }
    }

    fn classify_by_quadrature(&self) -> Classification<T> {
        let tol = T::lit(quad::DEFAULT_TOL);
        let d = |s: T| self.phi_prime_raw(s);
        let bounded = Criterion::from_integral(quad::integrate_to_infinity(d, T::one(), tol));
        let interfaces = Criterion::from_integral(quad::integrate_from_zero(
            |s: T| self.phi_prime_raw(s) / s,
            T::one(),
            tol,
        ));
        let mass = Criterion::from_integral(quad::integrate_from_zero(
            |s: T| self.phi_prime_raw(s) * s,
            T::one(),
            tol,
        ));
        let asymptotic_q = if bounded.holds() {
            self.fitted_exponent(T::lit(1e2), T::lit(1e4))
                .map(|m| -m)
                .filter(|q| *q > T::zero())
        } else {
            None
        };
        Classification {
            flux_bounded_at_infinity: bounded,
            finite_interfaces_type_i: interfaces,
            finite_mass_existence: mass,
            asymptotic_q,
        }
    }

    /// Pressure `p(v) = ∫ₐᵛ Φ′(s)/s ds`. The base point `a = 0` is allowed
    /// only when the integral converges there.
    pub fn pressure(&self, v: T, a: T) -> Result<T> {
        positive(v)?;
        if a < T::zero() || !a.is_finite() {
            return Err(Error::Domain(format!(
                "pressure base point must be finite and nonnegative, got {a:e}"
            )));
        }
        if v == a {
            return Ok(T::zero());
        }
        if let Family::Power { m } = self.family {
            let k = m - T::one();
            if a == T::zero() {
                if m > T::one() {
                    return Ok(v.powf(k) / k);
                }
                return Err(Error::Domain(format!(
                    "pressure from a = 0 diverges for power m = {m}"
                )));
            }
            return Ok(if k == T::zero() {
                (v / a).ln()
            } else {
                (v.powf(k) - a.powf(k)) / k
            });
        }
        let tol = T::lit(quad::DEFAULT_TOL);
        let integrand = |s: T| self.phi_prime_raw(s) / s;
        if a == T::zero() {
            return match quad::integrate_from_zero(integrand, v, tol) {
                Integral::Finite(p) => Ok(p),
                Integral::Divergent => Err(Error::Domain(
                    "pressure from a = 0 diverges: ∫₀ Φ′(s)/s ds is infinite".into(),
                )),
                Integral::Indeterminate => Err(Error::Numeric(
                    "pressure quadrature near zero is indeterminate".into(),
                )),
            };
        }
        quad::integrate(integrand, a, v, tol)
            .ok_or_else(|| Error::Numeric("pressure quadrature did not converge".into()))
    }

    /// True when `Φ′` is unbounded as `s → 0` (needs regularization near zero).
    pub fn singular_at_zero(&self) -> bool {
        match self.exponent_near_zero() {
            Some(q) => q < T::one(),
            None => true,
        }
    }
}

fn integer_exponent<T: Real>(two_alpha: T) -> Option<u32> {
    let rounded = two_alpha.round();
    (two_alpha >= T::zero()
        && (two_alpha - rounded).abs() < T::epsilon()
        && rounded < T::lit(64.0))
    .then(|| rounded.to_u32().unwrap_or(0))
}

/// `∫₀^x sin^{2α}φ dφ` for `0 ≤ x ≤ π/2`, accurate in relative terms as
/// `x → 0` (the reduction formula cancels there, so small arguments use a
/// single Gauss-Kronrod panel on the smooth integrand).
fn sin_power_integral<T: Real>(two_alpha: T, x: T) -> T {
    let integrand = |phi: T| phi.sin().powf(two_alpha);
    if let Some(n) = integer_exponent(two_alpha) {
        if x < T::lit(0.25) {
            return quad::integrate(integrand, T::zero(), x, T::zero()).unwrap_or(T::nan());
        }
        // ∫ sin^n = −sin^{n−1}cos/n + (n−1)/n ∫ sin^{n−2}
        fn reduce<T: Real>(n: u32, x: T) -> T {
            match n {
                0 => x,
                1 => {
                    let s = (x * T::lit(0.5)).sin();
                    T::lit(2.0) * s * s
                }
                _ => {
                    let nf = T::from_u32(n).unwrap();
                    -x.sin().powi(n as i32 - 1) * x.cos() / nf
                        + (nf - T::one()) / nf * reduce(n - 2, x)
                }
            }
        }
        return reduce(n, x);
    }
    // Fractional powers vanish or blow up non-smoothly at 0; split dyadically.
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(16.0));
    quad::integrate_from_zero(integrand, x, tol)
        .value()
        .unwrap_or(T::nan())
}

/// `Ψ(s) = −Φ(1/s)` for the curvature law, written as
/// `−Φ(∞) + ∫₀^{atan s} sin^{2α}φ dφ` so that differences of `Ψ` at small
/// arguments keep full relative precision.
fn conjugate_curvature_psi<T: Real>(alpha: T, s: T) -> T {
    let two_alpha = alpha + alpha;
    let phi_inf = curvature_phi(alpha, T::infinity());
    -phi_inf + sin_power_integral(two_alpha, s.atan())
}

/// `∫₀ˢ (1+σ²)^{−(1+α)} dσ = ∫₀^{atan s} cos^{2α}θ dθ`.
fn curvature_phi<T: Real>(alpha: T, s: T) -> T {
    let two_alpha = alpha + alpha;
    let theta = s.atan();
    if let Some(n) = integer_exponent(two_alpha) {
        return cos_power_integral(n, theta);
    }
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(16.0));
    let half_pi = T::FRAC_PI_2();
    if theta <= half_pi * T::lit(0.5) {
        return quad::integrate(|th: T| th.cos().powf(two_alpha), T::zero(), theta, tol)
            .unwrap_or(T::nan());
    }
    // cos^{2α} is non-smooth at π/2: take the complement from that end.
    sin_power_integral(two_alpha, half_pi) - sin_power_integral(two_alpha, half_pi - theta)
}

/// `Φ(s)` of `law` at `s > 0`.
pub fn eval_flux<T: Real>(law: &FluxLaw<T>, s: T) -> Result<T> {
    law.flux(s)
}

/// `Φ′(s)` of `law` at `s > 0`.
pub fn eval_diffusivity<T: Real>(law: &FluxLaw<T>, s: T) -> Result<T> {
    law.diffusivity(s)
}
