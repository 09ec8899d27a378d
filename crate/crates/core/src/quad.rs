//! Adaptive quadrature with divergence detection for improper integrals.
//!
//! Finite intervals use recursive Gauss-Kronrod (7/15). Integrals reaching
//! `0` or `∞` are split into dyadic pieces; the ratio of consecutive pieces
//! decides convergence, divergence, or an explicit indeterminate verdict.

// Nodes and weights are kept at full published precision.
#![allow(clippy::excessive_precision)]

use crate::scalar::Real;

/// Absolute tolerance used by flux classification and pressure.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Partial sums beyond this magnitude are declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

const MAX_DEPTH: u32 = 48;
const MAX_DYADIC_PIECES: usize = 200;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an improper integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integral<T> {
    Finite(T),
    Divergent,
    Indeterminate,
}

impl<T: Real> Integral<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Integral::Finite(_))
    }

    pub fn value(&self) -> Option<T> {
        match *self {
            Integral::Finite(v) => Some(v),
            _ => None,
        }
    }
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half_len * T::lit(x);
        let pair = f(center - dx) + f(center + dx);
        kronrod += T::lit(wk) * pair;
        if j % 2 == 1 {
            gauss += T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * half_len, ((kronrod - gauss) * half_len).abs())
}

fn adapt<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, depth: u32) -> Option<T> {
    let (value, err) = gk15(f, a, b);
    if !value.is_finite() {
        return None;
    }
    let floor = T::epsilon() * T::lit(50.0) * value.abs();
    if err <= tol.max(floor) {
        return Some(value);
    }
    if depth >= MAX_DEPTH {
        return None;
    }
    let mid = T::lit(0.5) * (a + b);
    if mid <= a || mid >= b {
        return Some(value);
    }
    let half_tol = T::lit(0.5) * tol;
    Some(adapt(f, a, mid, half_tol, depth + 1)? + adapt(f, mid, b, half_tol, depth + 1)?)
}

/// Integrates `f` over a finite interval to absolute tolerance `tol`.
/// Returns `None` when subdivision does not converge or the integrand
/// produces non-finite values.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Option<T> {
    if a == b {
        return Some(T::zero());
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    adapt(&f, a, b, tol, 0)
}

/// Dyadic accumulation shared by the two improper integrators. `piece(k)`
/// integrates the `k`-th dyadic interval, ordered toward the singular end.
///
/// For a power-law integrand consecutive pieces have a constant ratio, so a
/// stable ratio below `0.95` licenses geometric extrapolation of the tail and
/// a stable ratio of at least one means divergence. Ratios in between never
/// settle within the piece budget and come back as `Indeterminate`.
fn dyadic<T: Real, P: FnMut(usize) -> Option<T>>(mut piece: P, tol: T) -> Integral<T> {
    let bound = T::lit(DIVERGENCE_BOUND);
    let stable = T::lit(1e-6);
    let mut sum = T::zero();
    let mut prev_piece: Option<T> = None;
    let mut prev_ratio: Option<T> = None;
    let mut stable_run = 0usize;
    for k in 0..MAX_DYADIC_PIECES {
        let Some(p) = piece(k) else {
            return Integral::Indeterminate;
        };
        let p = p.abs();
        sum += p;
        if !sum.is_finite() || sum > bound {
            return Integral::Divergent;
        }
        let Some(q) = prev_piece else {
            prev_piece = Some(p);
            continue;
        };
        prev_piece = Some(p);
        if q == T::zero() {
            if p == T::zero() && k >= 4 {
                return Integral::Finite(sum);
            }
            continue;
        }
        let ratio = p / q;
        if ratio < T::lit(0.95) && k >= 4 {
            let tail = p * ratio / (T::one() - ratio);
            if tail <= tol {
                return Integral::Finite(sum + tail);
            }
        }
        match prev_ratio {
            Some(r) if (ratio - r).abs() <= stable * r.max(T::one()) => stable_run += 1,
            _ => stable_run = 0,
        }
        prev_ratio = Some(ratio);
        if stable_run >= 6 {
            if ratio < T::lit(0.95) {
                return Integral::Finite(sum + p * ratio / (T::one() - ratio));
            }
            if ratio >= T::one() - T::lit(1e-7) {
                return Integral::Divergent;
            }
        }
    }
    Integral::Indeterminate
}

/// `∫₀ᵇ f(s) ds` for integrands that may be singular at `0`. Assumes `f`
/// keeps one sign near zero (true for every flux-law integrand).
pub fn integrate_from_zero<T: Real, F: Fn(T) -> T>(f: F, b: T, tol: T) -> Integral<T> {
    let n = T::lit(MAX_DYADIC_PIECES as f64);
    let piece_tol = tol / n;
    let two = T::lit(2.0);
    let sign = f(b * T::lit(0.5)).signum();
    let res = dyadic(
        |k| {
            let hi = b / two.powi(k as i32);
            let lo = hi / two;
            integrate(&f, lo, hi, piece_tol)
        },
        tol,
    );
    match res {
        Integral::Finite(v) => Integral::Finite(v * sign),
        other => other,
    }
}

/// `∫ₐ^∞ f(s) ds` with `a > 0`.
pub fn integrate_to_infinity<T: Real, F: Fn(T) -> T>(f: F, a: T, tol: T) -> Integral<T> {
    let n = T::lit(MAX_DYADIC_PIECES as f64);
    let piece_tol = tol / n;
    let two = T::lit(2.0);
    let sign = f(a * T::lit(1.5)).signum();
    let res = dyadic(
        |k| {
            let lo = a * two.powi(k as i32);
            let hi = lo * two;
            integrate(&f, lo, hi, piece_tol)
        },
        tol,
    );
    match res {
        Integral::Finite(v) => Integral::Finite(v * sign),
        other => other,
    }
}
