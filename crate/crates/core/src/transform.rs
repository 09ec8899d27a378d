//! Passage between a physical monotone profile `u(x)` and the conjugate
//! description `x(u)`.
//!
//! Inversion is piecewise linear by default, which keeps pointwise order
//! between profiles intact. A monotone cubic (Fritsch-Carlson) is available
//! where smoothness matters more than exact order preservation.

use crate::conjsolver::{ConjGrid, ConjugateState};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Decrease between neighbouring nodes that `reconstruct` still accepts.
/// Solver output is monotone only up to its Newton tolerance.
pub const RECONSTRUCT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
    MonotoneCubic,
}

/// Monotone piecewise-cubic Hermite interpolant through nondecreasing data.
///
/// Slopes start from the three-point parabolic estimate, which is exact for
/// quadratics, and are limited so that every piece stays monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic<T> {
    knots: Vec<(T, T)>,
    slopes: Vec<T>,
}

impl<T: Real> MonotoneCubic<T> {
    /// `knots` must be strictly increasing in the first coordinate and
    /// nondecreasing in the second.
    pub fn new(knots: Vec<(T, T)>) -> Result<Self> {
        let n = knots.len();
        if n < 2 {
            return Err(Error::InvalidData("interpolation needs at least 2 knots".into()));
        }
        if knots.windows(2).any(|p| !(p[1].0 > p[0].0) || p[1].1 < p[0].1) {
            return Err(Error::InvalidData(
                "monotone cubic needs increasing abscissae and nondecreasing values".into(),
            ));
        }
        let h: Vec<T> = knots.windows(2).map(|p| p[1].0 - p[0].0).collect();
        let delta: Vec<T> = knots
            .windows(2)
            .zip(&h)
            .map(|(p, &hk)| (p[1].1 - p[0].1) / hk)
            .collect();
        let mut d = vec![T::zero(); n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                d[i] = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
            }
            let end = |h0: T, h1: T, d0: T, d1: T| {
                let e = ((h0 + h0 + h1) * d0 - h0 * d1) / (h0 + h1);
                e.max(T::zero())
            };
            d[0] = end(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        let nine = T::lit(9.0);
        for k in 0..n - 1 {
            if delta[k] == T::zero() {
                d[k] = T::zero();
                d[k + 1] = T::zero();
                continue;
            }
            let a = d[k] / delta[k];
            let b = d[k + 1] / delta[k];
            let r = a * a + b * b;
            if r > nine {
                let tau = T::lit(3.0) / r.sqrt();
                d[k] = tau * a * delta[k];
                d[k + 1] = tau * b * delta[k];
            }
        }
        Ok(Self { knots, slopes: d })
    }

    fn piece(&self, k: usize, t: T) -> T {
        let (x0, y0) = self.knots[k];
        let (x1, y1) = self.knots[k + 1];
        let h = x1 - x0;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * self.slopes[k] + h01 * y1 + h11 * h * self.slopes[k + 1]
    }

    /// Value at `x`, clamped to the end values outside the knots.
    pub fn eval(&self, x: T) -> T {
        let n = self.knots.len();
        if x <= self.knots[0].0 {
            return self.knots[0].1;
        }
        if x >= self.knots[n - 1].0 {
            return self.knots[n - 1].1;
        }
        let k = self.knots.partition_point(|p| p.0 <= x).clamp(1, n - 1) - 1;
        let t = (x - self.knots[k].0) / (self.knots[k + 1].0 - self.knots[k].0);
        self.piece(k, t)
    }

    /// Smallest abscissa where the interpolant reaches `y`, clamped to the
    /// knot range.
    pub fn inverse(&self, y: T) -> T {
        let n = self.knots.len();
        if y <= self.knots[0].1 {
            return self.knots[0].0;
        }
        if y >= self.knots[n - 1].1 {
            return self.knots[n - 1].0;
        }
        let k = self.knots.partition_point(|p| p.1 < y).clamp(1, n - 1) - 1;
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..80 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.piece(k, mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = T::lit(0.5) * (lo + hi);
        self.knots[k].0 + t * (self.knots[k + 1].0 - self.knots[k].0)
    }
}

/// Strictly increasing samples `(x_j, u_j)` of a profile rising from
/// `u(a) = 0` to `u(b) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneProfile<T> {
    samples: Vec<(T, T)>,
}

impl<T: Real> MonotoneProfile<T> {
    /// Endpoint `u` values within `1e−12` of 0 and 1 are snapped to them.
    pub fn new(mut samples: Vec<(T, T)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidData(format!(
                "a profile needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|&(x, u)| !x.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidData("profile samples must be finite".into()));
        }
        let snap = T::lit(1e-12);
        let last = samples.len() - 1;
        if samples[0].1.abs() > snap || (samples[last].1 - T::one()).abs() > snap {
            return Err(Error::InvalidData(format!(
                "profile must rise from u = 0 to u = 1, got {} to {}",
                samples[0].1, samples[last].1
            )));
        }
        samples[0].1 = T::zero();
        samples[last].1 = T::one();
        for (j, p) in samples.windows(2).enumerate() {
            if p[1].0 <= p[0].0 {
                return Err(Error::InvalidData(format!(
                    "profile x values must increase strictly (samples {j} and {})",
                    j + 1
                )));
            }
            if p[1].1 <= p[0].1 {
                return Err(Error::InvalidData(format!(
                    "inadmissible data: u is flat or decreasing on [{}, {}]; the conjugate construction needs u′ ≥ c > 0",
                    p[0].0, p[1].0
                )));
            }
        }
        Ok(Self { samples })
    }

    /// Samples `u0` at `n + 1` equally spaced points of `[a, b]`.
    pub fn from_fn<F: Fn(T) -> T>(a: T, b: T, n: usize, u0: F) -> Result<Self> {
        if !(a < b) || n == 0 {
            return Err(Error::InvalidData(format!(
                "need a < b and at least one interval, got [{a}, {b}] with n = {n}"
            )));
        }
        let n_t = T::from_usize_lossy(n);
        let samples = (0..=n)
            .map(|j| {
                let x = if j == n {
                    b
                } else {
                    a + (b - a) * T::from_usize_lossy(j) / n_t
                };
                (x, u0(x))
            })
            .collect();
        Self::new(samples)
    }

    /// Builds the profile whose inverse is `x0`, sampled at `n + 1`
    /// equally spaced `u` values.
    pub fn from_inverse<F: Fn(T) -> T>(n: usize, x0: F) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidData("need at least one interval".into()));
        }
        let n_t = T::from_usize_lossy(n);
        let samples = (0..=n)
            .map(|j| {
                let u = if j == n {
                    T::one()
                } else {
                    T::from_usize_lossy(j) / n_t
                };
                (x0(u), u)
            })
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    /// `(a, b)`.
    pub fn endpoints(&self) -> (T, T) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Smallest divided difference of `u`, the discrete `c` in `u₀′ ≥ c`.
    pub fn min_slope(&self) -> T {
        self.samples
            .windows(2)
            .map(|p| (p[1].1 - p[0].1) / (p[1].0 - p[0].0))
            .fold(T::infinity(), T::min)
    }

    /// Piecewise-linear `u(x)`, clamped to 0 and 1 outside `[a, b]`.
    pub fn u_at(&self, x: T) -> T {
        interp_clamped(&self.samples, x, |p| p.0, |p| p.1)
    }

    /// Piecewise-linear inverse `x = h(u)` for `u ∈ [0, 1]`.
    pub fn x_at(&self, u: T) -> T {
        interp_clamped(&self.samples, u, |p| p.1, |p| p.0)
    }

    /// The `c` with `u(c) = 1/2`.
    pub fn center(&self) -> T {
        self.x_at(T::lit(0.5))
    }
}

/// Linear interpolation through points sorted by `key`, returning the end
/// values outside the sampled range.
fn interp_clamped<P, T: Real>(pts: &[P], at: T, key: impl Fn(&P) -> T, val: impl Fn(&P) -> T) -> T {
    let n = pts.len();
    if at <= key(&pts[0]) {
        return val(&pts[0]);
    }
    if at >= key(&pts[n - 1]) {
        return val(&pts[n - 1]);
    }
    let j = pts.partition_point(|p| key(p) <= at).clamp(1, n - 1);
    let (k0, k1) = (key(&pts[j - 1]), key(&pts[j]));
    let (v0, v1) = (val(&pts[j - 1]), val(&pts[j]));
    if k1 == k0 {
        return v1;
    }
    v0 + (at - k0) * (v1 - v0) / (k1 - k0)
}

/// Physical profile `u(x, t)` sampled at the conjugate nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFrame<T> {
    pub t: T,
    /// `(x, u)` sorted by `x`, nondecreasing in `u`.
    pub pairs: Vec<(T, T)>,
    pub l: T,
    pub r: T,
    pub center_c: T,
}

impl<T: Real> SolutionFrame<T> {
    pub fn new(t: T, pairs: Vec<(T, T)>, l: T, r: T, center_c: T) -> Self {
        Self {
            t,
            pairs,
            l,
            r,
            center_c,
        }
    }

    /// `u` at `x`: 0 left of the samples, the last sample value right of them.
    pub fn u_at(&self, x: T) -> T {
        if self.pairs.is_empty() {
            return T::zero();
        }
        if x < self.pairs[0].0 {
            return T::zero();
        }
        interp_clamped(&self.pairs, x, |p| p.0, |p| p.1)
    }

    pub fn width(&self) -> T {
        self.r - self.l
    }

    /// Copy with every `x` (interfaces and centre included) moved by `dx`.
    pub fn shifted(&self, dx: T) -> Self {
        Self {
            t: self.t,
            pairs: self.pairs.iter().map(|&(x, u)| (x + dx, u)).collect(),
            l: self.l + dx,
            r: self.r + dx,
            center_c: self.center_c + dx,
        }
    }
}

/// Conjugate initial state `x_i = h(u_i)` from a physical profile, with the
/// inverse `h` interpolated piecewise linearly.
pub fn conj_initial_data<T: Real>(
    profile: &MonotoneProfile<T>,
    grid: &ConjGrid<T>,
) -> Result<ConjugateState<T>> {
    conj_initial_data_with(profile, grid, Interpolation::Linear)
}

pub fn conj_initial_data_with<T: Real>(
    profile: &MonotoneProfile<T>,
    grid: &ConjGrid<T>,
    interp: Interpolation,
) -> Result<ConjugateState<T>> {
    let x: Vec<T> = match interp {
        Interpolation::Linear => grid.nodes().into_iter().map(|u| profile.x_at(u)).collect(),
        Interpolation::MonotoneCubic => {
            let inverse = MonotoneCubic::new(profile.samples().iter().map(|&(x, u)| (u, x)).collect())?;
            grid.nodes().into_iter().map(|u| inverse.eval(u)).collect()
        }
    };
    crate::conjsolver::state_from_samples(T::zero(), x)
}

/// Physical frame of a conjugate state: pairs `(x_i, u_i)`, interfaces
/// `(x_0, x_N)` and the centre where `u = 1/2`.
pub fn reconstruct<T: Real>(state: &ConjugateState<T>) -> Result<SolutionFrame<T>> {
    let defect = state.monotonicity_defect();
    if defect > T::lit(RECONSTRUCT_TOL) {
        return Err(Error::Integrity(format!(
            "state at t = {} is not monotone (decrease {:e}); cannot invert",
            state.t, defect
        )));
    }
    let n = state.n_cells();
    let h = state.h();
    let pairs: Vec<(T, T)> = state
        .x
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let u = if i == n { T::one() } else { T::from_usize_lossy(i) * h };
            (x, u)
        })
        .collect();
    let (l, r) = state.interfaces();
    let center_c = interp_clamped(&pairs, T::lit(0.5), |p| p.1, |p| p.0);
    Ok(SolutionFrame::new(state.t, pairs, l, r, center_c))
}

/// `v = 1/w` at the interior face midpoints in `x`. The two boundary faces
/// are left out since `v` is unbounded at the interfaces.
pub fn gradient_profile<T: Real>(state: &ConjugateState<T>) -> Result<Vec<(T, T)>> {
    let w = state.w_faces();
    let n = w.len();
    let h = state.h();
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    #[allow(clippy::needless_range_loop)]
    for i in 1..n.saturating_sub(1) {
        if !(w[i] > T::zero()) {
            return Err(Error::Singularity {
                face: i,
                u: ((T::from_usize_lossy(i) + T::lit(0.5)) * h).to_f64_lossy(),
            });
        }
        let x_mid = (state.x[i] + state.x[i + 1]) * T::lit(0.5);
        out.push((x_mid, T::one() / w[i]));
    }
    Ok(out)
}

/// Largest `|u_j − u_roundtrip(x_j)|` over the profile samples after passing
/// through the conjugate grid and back, interpolating with the monotone
/// cubic on both legs.
///
/// With linear interpolation the residual is only first order wherever `u₀`
/// has a square-root or steeper onset at an interface, because `u(x)` is not
/// smooth there even though `x(u)` is.
pub fn roundtrip_residual<T: Real>(profile: &MonotoneProfile<T>, grid: &ConjGrid<T>) -> Result<T> {
    roundtrip_residual_with(profile, grid, Interpolation::MonotoneCubic)
}

pub fn roundtrip_residual_with<T: Real>(
    profile: &MonotoneProfile<T>,
    grid: &ConjGrid<T>,
    interp: Interpolation,
) -> Result<T> {
    let state = conj_initial_data_with(profile, grid, interp)?;
    let frame = reconstruct(&state)?;
    let worst = match interp {
        Interpolation::Linear => profile
            .samples()
            .iter()
            .map(|&(x, u)| (u - frame.u_at(x)).abs())
            .fold(T::zero(), T::max),
        Interpolation::MonotoneCubic => {
            // x(u) is smooth in u even where u(x) is not, so interpolate it
            // and invert.
            let curve = MonotoneCubic::new(frame.pairs.iter().map(|&(x, u)| (u, x)).collect())?;
            profile
                .samples()
                .iter()
                .map(|&(x, u)| (u - curve.inverse(x)).abs())
                .fold(T::zero(), T::max)
        }
    };
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_inversion() {
        let p = MonotoneProfile::from_fn(-1.0, 1.0, 50, |x: f64| (x + 1.0) / 2.0).unwrap();
        let g = ConjGrid::new(16).unwrap();
        let s = conj_initial_data(&p, &g).unwrap();
        for (x, u) in s.x.iter().zip(g.nodes()) {
            assert!((x - (2.0 * u - 1.0)).abs() < 1e-14);
        }
        for w in s.w_faces() {
            assert!((w - 2.0).abs() < 1e-12);
        }
        assert!(roundtrip_residual(&p, &g).unwrap() <= 1e-12);
        assert!(roundtrip_residual_with(&p, &g, Interpolation::Linear).unwrap() <= 1e-12);
        assert!((p.min_slope() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn arccos_profile_inverts_to_cosine() {
        let p = MonotoneProfile::from_fn(-1.0, 1.0, 20000, |x: f64| (-x).acos() / PI).unwrap();
        let g = ConjGrid::new(8).unwrap();
        let s = conj_initial_data(&p, &g).unwrap();
        for (x, u) in s.x.iter().zip(g.nodes()) {
            assert!((x + (PI * u).cos()).abs() < 1e-4, "u={u}: {x}");
        }
    }

    #[test]
    fn monotone_cubic_reproduces_quadratics() {
        let knots: Vec<(f64, f64)> = (0..6).map(|i| {
            let x = i as f64 * 0.2;
            (x, x * x)
        }).collect();
        let c = MonotoneCubic::new(knots).unwrap();
        for k in 0..50 {
            let x = k as f64 / 50.0;
            assert!((c.eval(x) - x * x).abs() < 1e-14, "{x}");
            if x > 0.0 {
                assert!((c.inverse(x * x) - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monotone_cubic_stays_monotone_on_steps() {
        let knots = vec![(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 1.0), (4.0, 5.0)];
        let c = MonotoneCubic::new(knots).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = c.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn flat_segment_rejected() {
        let r = MonotoneProfile::new(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.5), (3.0, 1.0)]);
        assert!(matches!(r, Err(Error::InvalidData(m)) if m.contains("inadmissible")));
        assert!(MonotoneProfile::new(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn reconstruct_linear_state() {
        let g = ConjGrid::new(10).unwrap();
        let s = crate::conjsolver::init_from_x0(&g, |u: f64| 2.0 * u - 1.0).unwrap();
        let f = reconstruct(&s).unwrap();
        assert_eq!((f.l, f.r), (-1.0, 1.0));
        assert!(f.center_c.abs() < 1e-15);
        for &(x, u) in &f.pairs {
            assert!((u - (x + 1.0) / 2.0).abs() < 1e-15);
            assert!(x >= f.l && x <= f.r);
        }
        let moved = f.shifted(0.5);
        assert_eq!((moved.l, moved.r, moved.center_c), (-0.5, 1.5, 0.5));
    }

    #[test]
    fn reconstruct_rejects_decrease() {
        let s = ConjugateState { t: 0.0, x: vec![0.0, 0.5, 0.4, 1.0] };
        assert!(matches!(reconstruct(&s), Err(Error::Integrity(_))));
    }

    #[test]
    fn gradient_is_reciprocal_of_w() {
        let g = ConjGrid::new(10).unwrap();
        let s = crate::conjsolver::init_from_x0(&g, |u: f64| 2.0 * u - 1.0).unwrap();
        let v = gradient_profile(&s).unwrap();
        assert_eq!(v.len(), 8);
        for &(_, vi) in &v {
            assert!((vi - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_reports_interior_singularity() {
        let s = ConjugateState { t: 0.0, x: vec![0.0, 0.25, 0.25, 0.75, 1.0] };
        assert!(matches!(gradient_profile(&s), Err(Error::Singularity { face: 1, .. })));
    }
}
