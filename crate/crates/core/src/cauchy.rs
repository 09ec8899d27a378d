//! Filtration equation `v_t = (Φ(v))_xx` on a truncated line with zero flux
//! at both ends.
//!
//! Cell averages `v_i` live on a uniform grid; fluxes between neighbours are
//! `(Φ(v_{i+1}) − Φ(v_i))/h`. Implicit Euler with damped Newton, as in the
//! conjugate solver. Since the residual sums to the mass defect, each
//! converged step conserves mass to rounding.

use crate::conjsolver::{damped_newton, RegularizedFlux, SolverSettings, DT_UNDERFLOW};
use crate::error::{Error, Result};
use crate::flux::{Family, FluxLaw};
use crate::scalar::Real;
use crate::transform::SolutionFrame;
use crate::tridiag::Tridiagonal;

/// Values at or below this count as outside the numerical support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid<T> {
    pub x_min: T,
    pub x_max: T,
    pub n_cells: usize,
}

impl<T: Real> LineGrid<T> {
    pub fn new(x_min: T, x_max: T, n_cells: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(format!(
                "line grid needs x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < 2 {
            return Err(Error::Config(format!(
                "line grid needs at least 2 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    pub fn h(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize_lossy(self.n_cells)
    }

    pub fn center(&self, i: usize) -> T {
        self.x_min + (T::from_usize_lossy(i) + T::lit(0.5)) * self.h()
    }

    pub fn edge(&self, i: usize) -> T {
        if i == self.n_cells {
            self.x_max
        } else {
            self.x_min + T::from_usize_lossy(i) * self.h()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineState<T> {
    pub t: T,
    pub v: Vec<T>,
}

impl<T: Real> LineState<T> {
    /// Samples `v0` at cell centres.
    pub fn from_fn<F: Fn(T) -> T>(grid: &LineGrid<T>, v0: F) -> Result<Self> {
        Self::new(T::zero(), (0..grid.n_cells).map(|i| v0(grid.center(i))).collect())
    }

    /// Cell averages from a cumulative profile: `v_i = (U(x_{i+1}) − U(x_i))/h`.
    pub fn from_cumulative<F: Fn(T) -> T>(grid: &LineGrid<T>, u0: F) -> Result<Self> {
        let h = grid.h();
        Self::new(
            T::zero(),
            (0..grid.n_cells)
                .map(|i| (u0(grid.edge(i + 1)) - u0(grid.edge(i))) / h)
                .collect(),
        )
    }

    pub fn new(t: T, v: Vec<T>) -> Result<Self> {
        if let Some(i) = v.iter().position(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(Error::Domain(format!(
                "cell {i} holds {}; initial data must be finite and nonnegative",
                v[i]
            )));
        }
        Ok(Self { t, v })
    }

    pub fn mass(&self, h: T) -> T {
        self.v.iter().fold(T::zero(), |a, &x| a + x) * h
    }

    pub fn sup(&self) -> T {
        self.v.iter().copied().fold(T::zero(), T::max)
    }

    /// Outer cell edges of the cells with `v > threshold`.
    pub fn support(&self, grid: &LineGrid<T>, threshold: T) -> Option<(T, T)> {
        let first = self.v.iter().position(|&x| x > threshold)?;
        let last = self.v.iter().rposition(|&x| x > threshold)?;
        Some((grid.edge(first), grid.edge(last + 1)))
    }
}

/// `Σ |a_i − b_i| h`.
pub fn l1_distance<T: Real>(a: &LineState<T>, b: &LineState<T>, h: T) -> T {
    a.v.iter()
        .zip(&b.v)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs())
        * h
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineTrajectory<T> {
    pub grid: LineGrid<T>,
    /// Initial state followed by the states at each output time.
    pub states: Vec<LineState<T>>,
    /// `(t, max v)` at every accepted step.
    pub sup_series: Vec<(T, T)>,
    /// `(t, Σ v h)` at every accepted step.
    pub mass_series: Vec<(T, T)>,
    /// Raised when the final support reaches the outer fifth of the domain.
    pub truncation_warning: Option<String>,
}

/// Rejects power laws with `m ≤ −1`, for which no solution exists.
pub fn check_line_admissible<T: Real>(law: &FluxLaw<T>) -> Result<()> {
    match law.family() {
        Family::Power { m } if *m <= -T::one() => Err(Error::Config(format!(
            "{}: the line problem has no solution for m ≤ −1",
            law.description()
        ))),
        Family::Power { .. } | Family::CurvatureModel { .. } => Ok(()),
        _ => {
            if law.classify().finite_mass_existence.holds() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{}: ∫₀ Φ′(s)·s ds must be finite for the line problem",
                    law.description()
                )))
            }
        }
    }
}

/// Regularization used by the line solver: `δ` when `Φ` is singular or
/// unbounded at zero, none otherwise.
fn line_delta<T: Real>(law: &FluxLaw<T>, delta: T) -> T {
    if law.phi_raw(T::zero()).is_finite() && law.phi_prime_raw(T::zero()).is_finite() {
        T::zero()
    } else {
        delta
    }
}

fn line_step<T: Real>(
    prev: &LineState<T>,
    dt: T,
    h: T,
    flux: &RegularizedFlux<'_, T>,
    settings: &SolverSettings<T>,
) -> Result<LineState<T>> {
    let c = dt / (h * h);
    let old = &prev.v;
    let n = old.len();
    let residual = |v: &[T], out: &mut [T]| {
        let mut left = T::zero();
        for i in 0..n {
            let right = if i + 1 < n {
                flux.value(v[i + 1]) - flux.value(v[i])
            } else {
                T::zero()
            };
            out[i] = v[i] - old[i] - c * (right - left);
            left = right;
        }
    };
    let jacobian = |v: &[T], jac: &mut Tridiagonal<T>| {
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let d = flux.derivative(v[i]);
            let neighbours = T::from_usize_lossy(usize::from(i > 0) + usize::from(i + 1 < n));
            jac.diag[i] = T::one() + c * neighbours * d;
            if i + 1 < n {
                jac.lower[i] = -c * d;
            }
            if i > 0 {
                jac.upper[i - 1] = -c * d;
            }
        }
    };
    let mut v = old.clone();
    damped_newton(
        &mut v,
        settings.newton_tol,
        settings.newton_max_iter,
        residual,
        jacobian,
    )?;
    Ok(LineState { t: prev.t + dt, v })
}

/// Evolves `v0` to each output time with the same adaptive stepping as the
/// conjugate solver. `settings.epsilon` serves as the regularization `δ`.
pub fn solve_line<T: Real>(
    grid: &LineGrid<T>,
    v0: &LineState<T>,
    law: &FluxLaw<T>,
    settings: &SolverSettings<T>,
) -> Result<LineTrajectory<T>> {
    settings.validate()?;
    check_line_admissible(law)?;
    if v0.v.len() != grid.n_cells {
        return Err(Error::Usage(format!(
            "initial data has {} cells, grid has {}",
            v0.v.len(),
            grid.n_cells
        )));
    }
    LineState::new(v0.t, v0.v.clone())?;
    let delta = line_delta(law, settings.epsilon);
    let flux = RegularizedFlux::new(law, delta)?;
    let h = grid.h();

    let mut state = v0.clone();
    let mut traj = LineTrajectory {
        grid: *grid,
        states: vec![state.clone()],
        sup_series: vec![(state.t, state.sup())],
        mass_series: vec![(state.t, state.mass(h))],
        truncation_warning: None,
    };
    let mut dt = settings.dt_init.min(settings.dt_max);
    for &target in &settings.output_times {
        while state.t < target {
            let remaining = target - state.t;
            let lands = dt >= remaining;
            let trial = if lands { remaining } else { dt };
            match line_step(&state, trial, h, &flux, settings) {
                Ok(mut next) => {
                    if lands {
                        next.t = target;
                    }
                    state = next;
                    traj.sup_series.push((state.t, state.sup()));
                    traj.mass_series.push((state.t, state.mass(h)));
                    if !lands || trial >= dt {
                        dt = (dt * T::lit(1.2)).min(settings.dt_max);
                    }
                }
                Err(Error::StepFailure { .. }) => {
                    dt = trial * T::lit(0.5);
                    if dt < T::lit(DT_UNDERFLOW) {
                        return Err(Error::Stall {
                            t: state.t.to_f64_lossy(),
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        traj.states.push(state.clone());
    }
    traj.truncation_warning = truncation_warning(grid, &state);
    Ok(traj)
}

fn truncation_warning<T: Real>(grid: &LineGrid<T>, state: &LineState<T>) -> Option<String> {
    let (a, b) = state.support(grid, T::lit(SUPPORT_THRESHOLD))?;
    let margin = (grid.x_max - grid.x_min) * T::lit(0.1);
    if a < grid.x_min + margin || b > grid.x_max - margin {
        Some(format!(
            "support [{a:.4}, {b:.4}] at t = {} reaches the outer tenth of [{}, {}]; zero-flux truncation may distort the solution",
            state.t, grid.x_min, grid.x_max
        ))
    } else {
        None
    }
}

/// Cumulative mass `u(x) = ∫_{x_min}^x v` at the cell edges. Interfaces are
/// the outer edges of the numerical support, and `center_c` is where `u`
/// reaches half the total mass.
pub fn integrate_to_u<T: Real>(grid: &LineGrid<T>, state: &LineState<T>) -> SolutionFrame<T> {
    let h = grid.h();
    let mut pairs = Vec::with_capacity(state.v.len() + 1);
    let mut acc = T::zero();
    pairs.push((grid.x_min, acc));
    for (i, &v) in state.v.iter().enumerate() {
        acc += v * h;
        pairs.push((grid.edge(i + 1), acc));
    }
    let (l, r) = state
        .support(grid, T::lit(SUPPORT_THRESHOLD))
        .unwrap_or((grid.x_min, grid.x_max));
    let half = acc * T::lit(0.5);
    let j = pairs.partition_point(|p| p.1 < half).clamp(1, pairs.len() - 1);
    let (x0, u0) = pairs[j - 1];
    let (x1, u1) = pairs[j];
    let center_c = if u1 > u0 {
        x0 + (half - u0) * (x1 - x0) / (u1 - u0)
    } else {
        x0
    };
    SolutionFrame::new(state.t, pairs, l, r, center_c)
}

/// `max_t |mass(t) − mass(0)| / mass(0)`; zero for a massless trajectory.
pub fn check_mass_conservation<T: Real>(traj: &LineTrajectory<T>) -> T {
    let m0 = traj.mass_series[0].1;
    if m0 == T::zero() {
        return T::zero();
    }
    traj.mass_series
        .iter()
        .map(|&(_, m)| (m - m0).abs() / m0)
        .fold(T::zero(), T::max)
}
