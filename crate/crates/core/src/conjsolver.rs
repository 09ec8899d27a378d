//! Integrated conjugate problem `x_t = (Ψ(x_u))_u` on `0 < u < 1` with zero
//! flux at both ends.
//!
//! Nodes `u_i = i·h` carry `x_i`; faces `i+1/2` carry `w = (x_{i+1} − x_i)/h`.
//! The boundary nodes own half cells, so `x_0` and `x_N` are the interfaces
//! `l(t)` and `r(t)` and move only through the flux of their single face.
//! Time stepping is implicit Euler with a damped Newton solve of the
//! tridiagonal system.

use std::fmt;

use crate::analysis;
use crate::error::{Error, Result};
use crate::flux::FluxLaw;
use crate::scalar::Real;
use crate::tridiag::Tridiagonal;

/// Smallest admissible time step before a solve is declared stalled.
pub const DT_UNDERFLOW: f64 = 1e-14;
const MAX_DAMPING_HALVINGS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjGrid<T> {
    n_cells: usize,
    h: T,
}

impl<T: Real> ConjGrid<T> {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::Config(format!(
                "conjugate grid needs at least 2 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            n_cells,
            h: T::one() / T::from_usize_lossy(n_cells),
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// `u_i = i·h`, with the last node pinned to exactly one.
    pub fn node(&self, i: usize) -> T {
        if i == self.n_cells {
            T::one()
        } else {
            T::from_usize_lossy(i) * self.h
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..=self.n_cells).map(|i| self.node(i)).collect()
    }

    /// Face midpoints `u_{i+1/2}`.
    pub fn face_centers(&self) -> Vec<T> {
        (0..self.n_cells)
            .map(|i| (T::from_usize_lossy(i) + T::lit(0.5)) * self.h)
            .collect()
    }
}

/// Sampled conjugate solution `x(u_i, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateState<T> {
    pub t: T,
    pub x: Vec<T>,
}

impl<T: Real> ConjugateState<T> {
    pub fn n_cells(&self) -> usize {
        self.x.len() - 1
    }

    pub fn h(&self) -> T {
        T::one() / T::from_usize_lossy(self.n_cells())
    }

    /// `w_{i+1/2} = (x_{i+1} − x_i)/h`.
    pub fn w_faces(&self) -> Vec<T> {
        let h = self.h();
        self.x.windows(2).map(|p| (p[1] - p[0]) / h).collect()
    }

    pub fn max_face_w(&self) -> T {
        let h = self.h();
        self.x
            .windows(2)
            .map(|p| (p[1] - p[0]) / h)
            .fold(T::zero(), T::max)
    }

    /// `(l, r) = (x_0, x_N)`.
    pub fn interfaces(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// `x_N − x_0`, which telescopes to `Σ w h`.
    pub fn mass(&self) -> T {
        let (l, r) = self.interfaces();
        r - l
    }

    /// Largest decrease between neighbouring nodes (zero when monotone).
    pub fn monotonicity_defect(&self) -> T {
        self.x
            .windows(2)
            .map(|p| p[0] - p[1])
            .fold(T::zero(), T::max)
    }
}

/// Interfaces of a conjugate state.
pub fn interfaces<T: Real>(state: &ConjugateState<T>) -> (T, T) {
    state.interfaces()
}

/// Width `r − l` of a conjugate state.
pub fn mass<T: Real>(state: &ConjugateState<T>) -> T {
    state.mass()
}

/// Time-stepping and Newton controls shared by both solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings<T> {
    pub dt_init: T,
    pub dt_max: T,
    /// Regularization `ε` of the flux near zero argument.
    pub epsilon: T,
    pub newton_tol: T,
    pub newton_max_iter: usize,
    /// Strictly increasing, positive.
    pub output_times: Vec<T>,
    /// Extinction is declared once the largest face value drops to this level.
    pub extinction_threshold: T,
    /// Optional cap on the relative change of the peak value per step; when
    /// exceeded, the next step is shortened proportionally.
    pub max_relative_change: Option<T>,
}

impl<T: Real> SolverSettings<T> {
    /// Defaults: `dt_init = 1e−5`, `dt_max = 1e−3`, `ε = 1e−8`,
    /// `newton_tol = 1e−10`, 50 Newton iterations, threshold `1e−6`.
    pub fn new(output_times: Vec<T>) -> Self {
        Self {
            dt_init: T::lit(1e-5),
            dt_max: T::lit(1e-3),
            epsilon: T::lit(1e-8),
            newton_tol: T::lit(1e-10),
            newton_max_iter: 50,
            output_times,
            extinction_threshold: T::lit(1e-6),
            max_relative_change: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v:e}")))
            }
        };
        pos("dt_init", self.dt_init)?;
        pos("dt_max", self.dt_max)?;
        pos("newton_tol", self.newton_tol)?;
        pos("extinction_threshold", self.extinction_threshold)?;
        if let Some(c) = self.max_relative_change {
            pos("max_relative_change", c)?;
        }
        if !(self.epsilon >= T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be nonnegative, got {:e}",
                self.epsilon
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be at least 1".into()));
        }
        if self.output_times.is_empty() {
            return Err(Error::Config("at least one output time is required".into()));
        }
        if self.output_times[0] <= T::zero() {
            return Err(Error::Config("output times must be positive".into()));
        }
        if self.output_times.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config(
                "output times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Conjugate-problem configuration: the law `Ψ` plus solver settings.
#[derive(Debug, Clone)]
pub struct SolveConfig<T: Real> {
    pub law: FluxLaw<T>,
    pub settings: SolverSettings<T>,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(law: FluxLaw<T>, settings: SolverSettings<T>) -> Self {
        Self { law, settings }
    }
}

/// `Ψ_ε(s) = Ψ(s+ε) − Ψ(ε)`, extended to `s < 0` as an odd function so that
/// Newton iterates that overshoot past zero stay well defined.
#[derive(Debug)]
pub struct RegularizedFlux<'a, T: Real> {
    law: &'a FluxLaw<T>,
    epsilon: T,
    base: T,
}

impl<'a, T: Real> RegularizedFlux<'a, T> {
    pub fn new(law: &'a FluxLaw<T>, epsilon: T) -> Result<Self> {
        let base = if epsilon > T::zero() {
            law.phi_shifted_raw(epsilon)
        } else {
            // Ψ(0+) by continuity; finite only for admissible laws.
            law.phi_shifted_raw(T::min_positive_value())
        };
        let d = law.phi_prime_raw(epsilon.max(T::min_positive_value()));
        if !base.is_finite() || !d.is_finite() {
            return Err(Error::Config(format!(
                "{}: flux or diffusivity is not finite at ε = {:e}; use ε > 0",
                law.description(),
                epsilon
            )));
        }
        Ok(Self { law, epsilon, base })
    }

    #[inline]
    pub fn value(&self, s: T) -> T {
        let a = s.abs();
        let v = self.law.phi_shifted_raw(a + self.epsilon) - self.base;
        if s < T::zero() {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn derivative(&self, s: T) -> T {
        self.law.phi_prime_raw(s.abs() + self.epsilon)
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Builds the initial state from `x0` sampled at the grid nodes.
pub fn init_from_x0<T: Real, F: Fn(T) -> T>(grid: &ConjGrid<T>, x0: F) -> Result<ConjugateState<T>> {
    let x: Vec<T> = grid.nodes().into_iter().map(x0).collect();
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!(
            "initial data is not finite at node {i}"
        )));
    }
    state_from_samples(T::zero(), x)
}

/// Wraps node samples as a state after checking monotonicity.
pub fn state_from_samples<T: Real>(t: T, x: Vec<T>) -> Result<ConjugateState<T>> {
    if x.len() < 3 {
        return Err(Error::InvalidData(format!(
            "a conjugate state needs at least 3 nodes, got {}",
            x.len()
        )));
    }
    if let Some(i) = x.windows(2).position(|p| p[1] < p[0]) {
        return Err(Error::InvalidData(format!(
            "initial data decreases between nodes {i} and {}",
            i + 1
        )));
    }
    Ok(ConjugateState { t, x })
}

struct System<'a, T: Real> {
    flux: RegularizedFlux<'a, T>,
    x_old: &'a [T],
    /// `dt/V_i`, with `V_i = h` inside and `h/2` at the two boundary nodes.
    coef_inner: T,
    coef_bnd: T,
    h: T,
}

impl<T: Real> System<'_, T> {
    fn coef(&self, i: usize, n: usize) -> T {
        if i == 0 || i == n - 1 {
            self.coef_bnd
        } else {
            self.coef_inner
        }
    }

    fn residual(&self, x: &[T], out: &mut [T]) {
        let n = x.len();
        let mut left = T::zero();
        for i in 0..n {
            let right = if i + 1 < n {
                self.flux.value((x[i + 1] - x[i]) / self.h)
            } else {
                T::zero()
            };
            out[i] = x[i] - self.x_old[i] - self.coef(i, n) * (right - left);
            left = right;
        }
    }

    fn jacobian(&self, x: &[T], jac: &mut Tridiagonal<T>) {
        let n = x.len();
        let mut d_left = T::zero();
        for i in 0..n {
            let d_right = if i + 1 < n {
                self.flux.derivative((x[i + 1] - x[i]) / self.h) / self.h
            } else {
                T::zero()
            };
            let c = self.coef(i, n);
            jac.diag[i] = T::one() + c * (d_left + d_right);
            if i + 1 < n {
                jac.upper[i] = -c * d_right;
            }
            if i > 0 {
                jac.lower[i - 1] = -c * d_left;
            }
            d_left = d_right;
        }
    }
}

/// Damped Newton on a tridiagonal residual. The update is halved until the
/// max-norm residual decreases.
pub(crate) fn damped_newton<T: Real>(
    x: &mut Vec<T>,
    tol: T,
    max_iter: usize,
    residual: impl Fn(&[T], &mut [T]),
    jacobian: impl Fn(&[T], &mut Tridiagonal<T>),
) -> Result<()> {
    let n = x.len();
    let mut r = vec![T::zero(); n];
    let mut r_try = vec![T::zero(); n];
    let mut x_try = vec![T::zero(); n];
    let mut jac = Tridiagonal::zeros(n);
    residual(x, &mut r);
    let mut norm = max_abs(&r);
    for _ in 0..max_iter {
        if norm <= tol {
            return Ok(());
        }
        if !norm.is_finite() {
            break;
        }
        jacobian(x, &mut jac);
        let mut delta: Vec<T> = r.iter().map(|&v| -v).collect();
        jac.solve_in_place(&mut delta)?;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..=MAX_DAMPING_HALVINGS {
            for i in 0..n {
                x_try[i] = x[i] + lambda * delta[i];
            }
            residual(&x_try, &mut r_try);
            let trial = max_abs(&r_try);
            if trial < norm {
                std::mem::swap(x, &mut x_try);
                std::mem::swap(&mut r, &mut r_try);
                norm = trial;
                accepted = true;
                break;
            }
            lambda *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if norm <= tol {
        Ok(())
    } else {
        Err(Error::StepFailure {
            iterations: max_iter,
            residual: norm.to_f64_lossy(),
        })
    }
}

fn implicit_step<T: Real>(
    state: &ConjugateState<T>,
    dt: T,
    flux: RegularizedFlux<'_, T>,
    settings: &SolverSettings<T>,
) -> Result<ConjugateState<T>> {
    let h = state.h();
    let sys = System {
        flux,
        x_old: &state.x,
        coef_inner: dt / h,
        coef_bnd: T::lit(2.0) * dt / h,
        h,
    };
    let mut x = state.x.clone();
    damped_newton(
        &mut x,
        settings.newton_tol,
        settings.newton_max_iter,
        |x, out| sys.residual(x, out),
        |x, jac| sys.jacobian(x, jac),
    )?;
    let next = ConjugateState { t: state.t + dt, x };
    let defect = next.monotonicity_defect();
    if defect > T::lit(10.0) * settings.newton_tol {
        return Err(Error::Integrity(format!(
            "monotonicity lost at t = {:e}: nodes decrease by {:e}",
            next.t.to_f64_lossy(),
            defect.to_f64_lossy()
        )));
    }
    Ok(next)
}

/// Discrete right-hand side `(F_{i+1/2} − F_{i−1/2})/V_i` of the scheme at
/// every node, with zero flux beyond the boundary nodes.
pub fn flux_divergence<T: Real>(state: &ConjugateState<T>, law: &FluxLaw<T>, epsilon: T) -> Result<Vec<T>> {
    let flux = RegularizedFlux::new(law, epsilon)?;
    let h = state.h();
    let n = state.x.len();
    let faces: Vec<T> = state.w_faces().into_iter().map(|w| flux.value(w)).collect();
    Ok((0..n)
        .map(|i| {
            let right = if i + 1 < n { faces[i] } else { T::zero() };
            let left = if i > 0 { faces[i - 1] } else { T::zero() };
            let vol = if i == 0 || i == n - 1 { h * T::lit(0.5) } else { h };
            (right - left) / vol
        })
        .collect())
}

/// One implicit Euler step of size `dt`.
pub fn step<T: Real>(
    state: &ConjugateState<T>,
    dt: T,
    cfg: &SolveConfig<T>,
) -> Result<ConjugateState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Usage(format!("time step must be positive, got {dt:e}")));
    }
    if dt > cfg.settings.dt_max * (T::one() + T::lit(1e-12)) {
        return Err(Error::Usage(format!(
            "time step {dt:e} exceeds dt_max {:e}",
            cfg.settings.dt_max
        )));
    }
    let flux = RegularizedFlux::new(&cfg.law, cfg.settings.epsilon)?;
    implicit_step(state, dt, flux, &cfg.settings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extinction<T> {
    /// Refined extinction time.
    pub t_est: T,
    /// Time of the last accepted step whose peak exceeded the threshold.
    pub t_last_above: T,
    /// Time at which the threshold was crossed.
    pub t_detected: T,
}

/// Output of a conjugate solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub n_cells: usize,
    /// Initial state followed by the states at each reached output time.
    /// When extinction occurs the extinct state is the last entry.
    pub states: Vec<ConjugateState<T>>,
    /// `(t, l, r)` at every accepted step.
    pub interface_series: Vec<(T, T, T)>,
    /// `(t, r − l)` at every accepted step.
    pub mass_series: Vec<(T, T)>,
    /// `(t, max_i w_{i+1/2})` at every accepted step.
    pub peak_series: Vec<(T, T)>,
    pub extinction: Option<Extinction<T>>,
}

impl<T: Real> Trajectory<T> {
    fn start(state: &ConjugateState<T>) -> Self {
        let (l, r) = state.interfaces();
        Self {
            n_cells: state.n_cells(),
            states: vec![state.clone()],
            interface_series: vec![(state.t, l, r)],
            mass_series: vec![(state.t, r - l)],
            peak_series: vec![(state.t, state.max_face_w())],
            extinction: None,
        }
    }

    fn record(&mut self, state: &ConjugateState<T>) {
        let (l, r) = state.interfaces();
        self.interface_series.push((state.t, l, r));
        self.mass_series.push((state.t, r - l));
        self.peak_series.push((state.t, state.max_face_w()));
    }

    pub fn final_state(&self) -> &ConjugateState<T> {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Half-width `(r − l)/2` at every accepted step.
    pub fn half_width_series(&self) -> Vec<(T, T)> {
        self.mass_series
            .iter()
            .map(|&(t, m)| (t, m * T::lit(0.5)))
            .collect()
    }

    /// State recorded at output time `t`, if any.
    pub fn state_at(&self, t: T) -> Option<&ConjugateState<T>> {
        self.states.iter().find(|s| s.t == t)
    }
}

/// A failed solve, carrying whatever was computed before the failure.
#[derive(Debug, Clone)]
pub struct SolveError<T> {
    pub error: Error,
    pub partial: Option<Box<Trajectory<T>>>,
}

impl<T> From<Error> for SolveError<T> {
    fn from(error: Error) -> Self {
        Self {
            error,
            partial: None,
        }
    }
}

impl<T> fmt::Display for SolveError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: fmt::Debug> std::error::Error for SolveError<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Rejects laws `Ψ` whose source `Φ` has unbounded flux at infinity.
pub fn check_admissible<T: Real>(law: &FluxLaw<T>) -> Result<()> {
    let source = law.conjugate();
    let class = source.classify();
    if class.flux_bounded_at_infinity.holds() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{}: the conjugate problem needs Ψ(0) = −Φ(∞) finite, i.e. a source flux bounded at infinity",
            law.description()
        )))
    }
}

/// Solves from `x0` sampled on `grid`.
pub fn solve<T: Real, F: Fn(T) -> T>(
    grid: &ConjGrid<T>,
    x0: F,
    cfg: &SolveConfig<T>,
) -> Result<Trajectory<T>, SolveError<T>> {
    let state = init_from_x0(grid, x0)?;
    solve_from(state, cfg)
}

/// Solves from an explicit initial state.
///
/// Steps adaptively: a failed Newton solve halves `dt`, an accepted step
/// grows it by 1.2 up to `dt_max`. Steps are truncated to land exactly on
/// output times. Integration stops at the last output time or at extinction.
pub fn solve_from<T: Real>(
    initial: ConjugateState<T>,
    cfg: &SolveConfig<T>,
) -> Result<Trajectory<T>, SolveError<T>> {
    let settings = &cfg.settings;
    settings.validate()?;
    check_admissible(&cfg.law)?;
    let h = initial.h();
    if let Some(i) = initial.x.windows(2).position(|p| p[1] <= p[0]) {
        return Err(Error::InvalidData(format!(
            "initial data is flat or decreasing on face {i} (u ≈ {:.4}); the construction needs u₀′ bounded",
            ((T::from_usize_lossy(i) + T::lit(0.5)) * h).to_f64_lossy()
        ))
        .into());
    }
    RegularizedFlux::new(&cfg.law, settings.epsilon)?;

    let mut traj = Trajectory::start(&initial);
    let mut state = initial;
    let mut dt = settings.dt_init.min(settings.dt_max);
    let underflow = T::lit(DT_UNDERFLOW);
    let growth = T::lit(1.2);
    let threshold = settings.extinction_threshold;
    let mut last_above = state.t;

    for &target in &settings.output_times {
        while state.t < target {
            let remaining = target - state.t;
            let lands = dt >= remaining;
            let trial_dt = if lands { remaining } else { dt };
            let flux = RegularizedFlux::new(&cfg.law, settings.epsilon)?;
            match implicit_step(&state, trial_dt, flux, settings) {
                Ok(mut next) => {
                    if lands {
                        next.t = target;
                    }
                    let peak_old = state.max_face_w();
                    let peak_new = next.max_face_w();
                    if peak_new > threshold {
                        last_above = next.t;
                    }
                    state = next;
                    traj.record(&state);
                    if peak_new <= threshold {
                        let t_est = estimate_extinction_time(&traj, &cfg.law, last_above);
                        traj.extinction = Some(Extinction {
                            t_est,
                            t_last_above: last_above,
                            t_detected: state.t,
                        });
                        traj.states.push(state);
                        return Ok(traj);
                    }
                    if !lands || trial_dt >= dt {
                        dt = (dt * growth).min(settings.dt_max);
                    }
                    if let Some(cap) = settings.max_relative_change {
                        let change = (peak_new - peak_old).abs() / peak_old.max(T::min_positive_value());
                        if change > cap {
                            let shrink = (cap / change).max(T::lit(0.2));
                            dt = (trial_dt * shrink).min(settings.dt_max);
                        }
                    }
                }
                Err(Error::StepFailure { .. }) => {
                    dt = trial_dt * T::lit(0.5);
                    if dt < underflow {
                        return Err(SolveError {
                            error: Error::Stall {
                                t: state.t.to_f64_lossy(),
                            },
                            partial: Some(Box::new(traj)),
                        });
                    }
                }
                Err(e) => {
                    return Err(SolveError {
                        error: e,
                        partial: Some(Box::new(traj)),
                    })
                }
            }
        }
        traj.states.push(state.clone());
    }
    Ok(traj)
}

/// Refines the extinction time from the tail of the peak series when the law
/// is fast-diffusive near zero; falls back to the last time above threshold.
fn estimate_extinction_time<T: Real>(traj: &Trajectory<T>, law: &FluxLaw<T>, fallback: T) -> T {
    match law.exponent_near_zero() {
        Some(q) if q > T::zero() && q < T::one() => {
            analysis::extinction_time_from_peaks(&traj.peak_series, q).unwrap_or(fallback)
        }
        _ => fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(q: f64, times: Vec<f64>) -> SolveConfig<f64> {
        SolveConfig::new(FluxLaw::power(q), SolverSettings::new(times))
    }

    #[test]
    fn symmetric_cos_data() {
        let grid = ConjGrid::<f64>::new(4).unwrap();
        let s = init_from_x0(&grid, |u| -(PI * u).cos()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [-1.0, -h, 0.0, h, 1.0];
        for (a, b) in s.x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s.interfaces(), (-1.0, 1.0));
        assert!((s.mass() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linear_data_faces() {
        let grid = ConjGrid::<f64>::new(10).unwrap();
        let s = init_from_x0(&grid, |u| 2.0 * u - 1.0).unwrap();
        for w in s.w_faces() {
            assert!((w - 2.0).abs() < 1e-12);
        }
        assert_eq!(interfaces(&s), (-1.0, 1.0));
    }

    #[test]
    fn asymmetric_poly_data_is_monotone() {
        let grid = ConjGrid::<f64>::new(8).unwrap();
        let f = |u: f64| 2.0 * u.powi(4) - 0.5 * u.powi(6) - 1.0;
        let s = init_from_x0(&grid, f).unwrap();
        for (i, x) in s.x.iter().enumerate() {
            assert!((x - f(i as f64 / 8.0)).abs() < 1e-15);
        }
        assert_eq!(s.monotonicity_defect(), 0.0);
    }

    #[test]
    fn decreasing_data_rejected() {
        let grid = ConjGrid::<f64>::new(8).unwrap();
        assert!(matches!(
            init_from_x0(&grid, |u| -u),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn constant_state_is_steady() {
        let c = cfg(3.0, vec![1.0]);
        let s = ConjugateState { t: 0.0, x: vec![0.3; 9] };
        let next = step(&s, 1e-3, &c).unwrap();
        assert_eq!(next.x, s.x);
        assert_eq!(mass(&next), 0.0);
    }

    #[test]
    fn linear_state_has_no_interior_divergence() {
        for q in [0.5f64, 1.0, 3.0] {
            let law = FluxLaw::power(q);
            let grid = ConjGrid::new(16).unwrap();
            let s = init_from_x0(&grid, |u| 2.0 * u - 1.0).unwrap();
            let div = flux_divergence(&s, &law, 1e-8).unwrap();
            for d in &div[1..16] {
                assert!(d.abs() < 1e-10, "q={q}: {d}");
            }
            // The end nodes see the outgoing flux Ψ(2) and move inward.
            assert!(div[0] > 0.0 && div[16] < 0.0);
            let next = step(&s, 1e-3, &cfg(q, vec![1.0])).unwrap();
            assert!(next.x[0] > s.x[0] && next.x[16] < s.x[16]);
            assert!(next.mass() < s.mass());
        }
    }

    #[test]
    fn heat_single_step_matches_closed_form() {
        let n = 200;
        let dt = 1e-4;
        let grid = ConjGrid::new(n).unwrap();
        let s = init_from_x0(&grid, |u: f64| -(PI * u).cos()).unwrap();
        let next = step(&s, dt, &cfg(1.0, vec![1.0])).unwrap();
        let h = 1.0 / n as f64;
        let decay = (-PI * PI * dt).exp();
        let err = grid
            .nodes()
            .iter()
            .zip(&next.x)
            .map(|(u, x)| (x + decay * (PI * u).cos()).abs())
            .fold(0.0, f64::max);
        // One step: local error O(dt²) + dt·O(h²).
        assert!(err < 5.0 * (dt * dt * PI.powi(4) + dt * h * h * PI.powi(4)), "{err}");
    }

    #[test]
    fn step_rejects_oversized_dt() {
        let grid = ConjGrid::new(8).unwrap();
        let s = init_from_x0(&grid, |u: f64| u).unwrap();
        assert!(matches!(
            step(&s, 1.0, &cfg(1.0, vec![1.0])),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn inadmissible_law_rejected() {
        let grid = ConjGrid::new(8).unwrap();
        // Ψ = power(-1) comes from Φ = power(1), unbounded at infinity.
        let err = solve(&grid, |u: f64| u, &cfg(-1.0, vec![0.1])).unwrap_err();
        assert!(matches!(err.error, Error::Config(_)));
    }

    #[test]
    fn flat_data_rejected_for_solve() {
        let grid = ConjGrid::new(8).unwrap();
        let err = solve(&grid, |u: f64| if u < 0.5 { 0.0 } else { u }, &cfg(1.0, vec![0.1]))
            .unwrap_err();
        assert!(matches!(err.error, Error::InvalidData(_)));
    }

    #[test]
    fn config_validation() {
        let mut s = SolverSettings::<f64>::new(vec![0.2, 0.1]);
        assert!(s.validate().is_err());
        s.output_times = vec![0.1, 0.2];
        assert!(s.validate().is_ok());
        s.newton_tol = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn solve_lands_on_output_times() {
        let grid = ConjGrid::new(32).unwrap();
        let times = vec![0.01, 0.025, 0.05];
        let traj = solve(&grid, |u: f64| -(PI * u).cos(), &cfg(1.0, times.clone())).unwrap();
        let got: Vec<f64> = traj.states.iter().skip(1).map(|s| s.t).collect();
        assert_eq!(got, times);
        assert!(traj.extinction.is_none());
        assert!(traj.interface_series.windows(2).all(|p| p[1].0 > p[0].0));
    }

    #[test]
    fn fast_diffusion_goes_extinct() {
        let grid = ConjGrid::new(64).unwrap();
        let mut c = cfg(0.5, vec![5.0]);
        c.settings.dt_max = 1e-3;
        let traj = solve(&grid, |u: f64| -(PI * u).cos(), &c).unwrap();
        let ext = traj.extinction.expect("q < 1 must go extinct");
        assert!(ext.t_est > 0.0 && ext.t_est < 5.0);
        let last = traj.final_state();
        assert!(last.mass() <= c.settings.extinction_threshold);
    }

    #[test]
    fn works_in_single_precision() {
        let grid = ConjGrid::<f32>::new(32).unwrap();
        let mut settings = SolverSettings::new(vec![0.05f32]);
        settings.newton_tol = 1e-5;
        let c = SolveConfig::new(FluxLaw::power(1.0f32), settings);
        let traj = solve(&grid, |u: f32| -(std::f32::consts::PI * u).cos(), &c).unwrap();
        let (_, r) = traj.final_state().interfaces();
        let exact = (-std::f32::consts::PI.powi(2) * 0.05).exp();
        assert!((r - exact).abs() < 5e-3, "{r} vs {exact}");
    }
}
