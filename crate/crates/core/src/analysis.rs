//! Rate fitting, extinction-time estimation, comparison checks and error
//! norms used to compare solver output against the predicted asymptotics.

use crate::conjsolver::Trajectory;
use crate::error::{Error, Result};
use crate::regression::linear_fit;
use crate::scalar::Real;
use crate::transform::{gradient_profile, SolutionFrame};

/// Fewest samples a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 8;
/// Samples dropped at the end of extinction runs, where the peak is
/// dominated by the threshold and the regularization.
pub const EXTINCTION_TAIL_DROP: usize = 3;
/// Fraction of the log-time range covered by the default window.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// `y = A t^p` (or `A (T−t)^p` with an origin).
    Power,
    /// `y = A e^{p t}`.
    Exponential,
}

impl FitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitKind::Power => "power",
            FitKind::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit<T> {
    pub kind: FitKind,
    pub exponent: T,
    pub amplitude: T,
    /// Range of the original time variable actually used.
    pub window: (T, T),
    /// RMS of the residual in `log y`.
    pub rms_residual: T,
    pub target: Option<T>,
    /// Extinction time when the fit is in `T − t`.
    pub origin: Option<T>,
    pub n_points: usize,
}

impl<T: Real> RateFit<T> {
    pub fn with_target(mut self, target: T) -> Self {
        self.target = Some(target);
        self
    }

    /// `|exponent − target| / |target|`, or the absolute gap for a zero target.
    pub fn relative_error(&self) -> Option<T> {
        self.target.map(|t| {
            let gap = (self.exponent - t).abs();
            if t == T::zero() {
                gap
            } else {
                gap / t.abs()
            }
        })
    }

    pub fn within(&self, tol: T) -> bool {
        self.relative_error().is_some_and(|e| e <= tol)
    }
}

fn select<T: Real>(series: &[(T, T)], window: Option<(T, T)>) -> Vec<(T, T)> {
    match window {
        Some((a, b)) => series
            .iter()
            .copied()
            .filter(|&(t, _)| t >= a && t <= b)
            .collect(),
        None => series.to_vec(),
    }
}

fn check_positive<T: Real>(pts: &[(T, T)]) -> Result<()> {
    if let Some(&(t, y)) = pts.iter().find(|&&(_, y)| !(y > T::zero()) || !y.is_finite()) {
        return Err(Error::Domain(format!(
            "rate fits need positive values; got {y:e} at t = {t:e}"
        )));
    }
    Ok(())
}

fn enough<T>(pts: &[T]) -> Result<()> {
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: pts.len(),
        });
    }
    Ok(())
}

/// Final `fraction` of `[lo, hi]` measured in `log`, as a window on the
/// original variable. Requires `0 < lo < hi`.
fn log_tail<T: Real>(lo: T, hi: T, fraction: T) -> (T, T) {
    let a = lo.ln();
    let b = hi.ln();
    ((a + (T::one() - fraction) * (b - a)).exp(), hi)
}

/// Default power-law window: the final 40% of the positive time range in
/// `log t`.
pub fn default_power_window<T: Real>(series: &[(T, T)]) -> Option<(T, T)> {
    let first = series.iter().map(|p| p.0).find(|&t| t > T::zero())?;
    let last = series.last()?.0;
    if last <= first {
        return None;
    }
    Some(log_tail(first, last, T::lit(DEFAULT_WINDOW_FRACTION)))
}

/// Least-squares slope of `log y` against `log t`. Samples with `t ≤ 0` are
/// skipped. `window = None` fits every sample.
pub fn fit_power<T: Real>(series: &[(T, T)], window: Option<(T, T)>) -> Result<RateFit<T>> {
    let pts: Vec<(T, T)> = select(series, window)
        .into_iter()
        .filter(|&(t, _)| t > T::zero())
        .collect();
    check_positive(&pts)?;
    enough(&pts)?;
    let xs: Vec<T> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<T> = pts.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        kind: FitKind::Power,
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        window: (pts[0].0, pts[pts.len() - 1].0),
        rms_residual: fit.rms_residual,
        target: None,
        origin: None,
        n_points: pts.len(),
    })
}

/// Power fit in `T − t` for samples with `t < T`.
pub fn fit_power_to_origin<T: Real>(
    series: &[(T, T)],
    origin: T,
    window: Option<(T, T)>,
) -> Result<RateFit<T>> {
    let pts: Vec<(T, T)> = select(series, window)
        .into_iter()
        .filter(|&(t, _)| t < origin)
        .collect();
    check_positive(&pts)?;
    enough(&pts)?;
    let xs: Vec<T> = pts.iter().map(|p| (origin - p.0).ln()).collect();
    let ys: Vec<T> = pts.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        kind: FitKind::Power,
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        window: (pts[0].0, pts[pts.len() - 1].0),
        rms_residual: fit.rms_residual,
        target: None,
        origin: Some(origin),
        n_points: pts.len(),
    })
}

/// Least-squares slope of `log y` against `t`.
pub fn fit_exponential<T: Real>(series: &[(T, T)], window: Option<(T, T)>) -> Result<RateFit<T>> {
    let pts = select(series, window);
    check_positive(&pts)?;
    enough(&pts)?;
    let xs: Vec<T> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<T> = pts.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        kind: FitKind::Exponential,
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        window: (pts[0].0, pts[pts.len() - 1].0),
        rms_residual: fit.rms_residual,
        target: None,
        origin: None,
        n_points: pts.len(),
    })
}

/// Extinction time from a decaying peak series `(t, max w)`.
///
/// Near extinction `max w ≈ A (T−t)^{1/(1−q)}`, so `y = (max w)^{1−q}` is
/// linear in `t` with root `T`. The fit uses the final decade of `y`, after
/// dropping the last few samples when the series is long enough.
pub fn extinction_time_from_peaks<T: Real>(series: &[(T, T)], q: T) -> Result<T> {
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::NotApplicable(format!(
            "finite-time extinction needs 0 < q < 1, got q = {q}"
        )));
    }
    let mut pts: Vec<(T, T)> = series
        .iter()
        .filter(|&&(_, w)| w > T::zero() && w.is_finite())
        .map(|&(t, w)| (t, w.powf(T::one() - q)))
        .collect();
    if pts.len() >= MIN_FIT_POINTS + EXTINCTION_TAIL_DROP {
        pts.truncate(pts.len() - EXTINCTION_TAIL_DROP);
    }
    enough(&pts)?;
    let y_end = pts[pts.len() - 1].1;
    if !(y_end < pts[0].1) {
        return Err(Error::NotApplicable(
            "peak series is not decaying; no extinction to estimate".into(),
        ));
    }
    let decade_start = pts
        .iter()
        .rposition(|p| p.1 > T::lit(10.0) * y_end)
        .map_or(0, |i| i + 1);
    let start = decade_start.min(pts.len() - MIN_FIT_POINTS);
    let tail = &pts[start..];
    let xs: Vec<T> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<T> = tail.iter().map(|p| p.1).collect();
    let fit = linear_fit(&xs, &ys)?;
    if !(fit.slope < T::zero()) {
        return Err(Error::NotApplicable(
            "peak series tail is not decreasing; no extinction to estimate".into(),
        ));
    }
    Ok(-fit.intercept / fit.slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionEstimate<T> {
    pub t_est: T,
    /// Fit of the half-width `(r − l)/2` against `T_est − t`.
    pub half_width_fit: RateFit<T>,
}

/// Estimates the extinction time of a `0 < q < 1` trajectory and fits the
/// `(T−t)` exponent of its half-width. The default fit window is the final
/// 40% of the `log(T−t)` range after dropping the last three samples.
pub fn estimate_extinction<T: Real>(
    traj: &Trajectory<T>,
    q: T,
    window: Option<(T, T)>,
) -> Result<ExtinctionEstimate<T>> {
    let t_est = extinction_time_from_peaks(&traj.peak_series, q)?;
    let mut half: Vec<(T, T)> = traj
        .half_width_series()
        .into_iter()
        .filter(|&(t, m)| t > T::zero() && t < t_est && m > T::zero())
        .collect();
    if half.len() >= MIN_FIT_POINTS + EXTINCTION_TAIL_DROP {
        half.truncate(half.len() - EXTINCTION_TAIL_DROP);
    }
    enough(&half)?;
    let window = match window {
        Some(w) => w,
        None => {
            // log(T−t) runs from its largest value at the first sample to its
            // smallest at the last; keep the part nearest extinction.
            let far = t_est - half[0].0;
            let near = t_est - half[half.len() - 1].0;
            let frac = T::lit(DEFAULT_WINDOW_FRACTION);
            let d_start = (near.ln() + frac * (far.ln() - near.ln())).exp();
            (t_est - d_start, half[half.len() - 1].0)
        }
    };
    let fit = fit_power_to_origin(&half, t_est, Some(window))?
        .with_target(T::one() / (T::one() - q));
    Ok(ExtinctionEstimate {
        t_est,
        half_width_fit: fit,
    })
}

/// Largest ordering violation `max (x_B − x_A)⁺` over nodes and the output
/// times the two trajectories share.
pub fn check_ordering<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<T> {
    if a.n_cells != b.n_cells {
        return Err(Error::Usage(format!(
            "trajectories use different grids ({} and {} cells)",
            a.n_cells, b.n_cells
        )));
    }
    let mut worst = T::zero();
    let mut shared = 0usize;
    for sa in &a.states {
        if let Some(sb) = b.states.iter().find(|s| s.t == sa.t) {
            shared += 1;
            for (xa, xb) in sa.x.iter().zip(&sb.x) {
                worst = worst.max(*xb - *xa);
            }
        }
    }
    if shared == 0 {
        return Err(Error::Usage(
            "trajectories share no output times".into(),
        ));
    }
    Ok(worst)
}

/// `(t, max u_x)` for every state with `t > 0`, the maximum taken over
/// interior faces.
pub fn max_gradient_series<T: Real>(traj: &Trajectory<T>) -> Result<Vec<(T, T)>> {
    traj.states
        .iter()
        .filter(|s| s.t > T::zero())
        .map(|s| {
            let v = gradient_profile(s)?;
            Ok((s.t, v.iter().map(|p| p.1).fold(T::zero(), T::max)))
        })
        .collect()
}

/// `(L∞, L¹)` distance between a frame's samples and `reference`, with the
/// `L¹` part integrated by the trapezoid rule in `x`.
pub fn error_norms<T: Real, F: Fn(T) -> T>(frame: &SolutionFrame<T>, reference: F) -> (T, T) {
    let errs: Vec<(T, T)> = frame
        .pairs
        .iter()
        .map(|&(x, u)| (x, (u - reference(x)).abs()))
        .collect();
    let linf = errs.iter().fold(T::zero(), |m, e| m.max(e.1));
    let l1 = errs.windows(2).fold(T::zero(), |acc, p| {
        acc + (p[1].0 - p[0].0) * (p[0].1 + p[1].1) * T::lit(0.5)
    });
    (linf, l1)
}
