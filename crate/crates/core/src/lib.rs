//! Degenerate nonlinear diffusion `u_t = (Φ(u_x))_x` and its relatives.
//!
//! Free-boundary solutions with vertical fronts are computed through the
//! conjugate problem `x_t = (Ψ(x_u))_u` on the fixed interval `0 < u < 1`,
//! where `Ψ(s) = −Φ(1/s)`. Dispersive solutions of the filtration equation
//! `v_t = (Φ(v))_xx` are computed on a truncated line.
//!
//! The numerical core is generic over [`Real`] (`f32` and `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

// Comparisons written as `!(x > 0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cauchy;
pub mod conjsolver;
pub mod error;
pub mod flux;
pub mod quad;
pub mod regression;
pub mod scalar;
pub mod selfsim;
pub mod transform;
pub mod tridiag;

pub use analysis::{
    check_ordering, error_norms, estimate_extinction, extinction_time_from_peaks, fit_exponential,
    fit_power, fit_power_to_origin, max_gradient_series, ExtinctionEstimate, FitKind, RateFit,
};
pub use cauchy::{
    check_mass_conservation, integrate_to_u, solve_line, LineGrid, LineState, LineTrajectory,
};
pub use conjsolver::{
    init_from_x0, solve, solve_from, step, ConjGrid, ConjugateState, SolveConfig, SolveError,
    SolverSettings, Trajectory,
};
pub use error::{Error, Result};
pub use flux::{eval_diffusivity, eval_flux, Classification, Criterion, Family, FluxLaw};
pub use scalar::Real;
pub use selfsim::{
    eigenprofile, heat_reference, rate_predictions, similarity_profile, EigenProfile,
    RatePrediction, Regime, SimilarityProfile,
};
pub use transform::{
    conj_initial_data, gradient_profile, reconstruct, roundtrip_residual, MonotoneProfile,
    SolutionFrame,
};

pub type FluxLaw64 = FluxLaw<f64>;
pub type FluxLaw32 = FluxLaw<f32>;
pub type ConjGrid64 = ConjGrid<f64>;
pub type ConjugateState64 = ConjugateState<f64>;
pub type SolverSettings64 = SolverSettings<f64>;
pub type SolveConfig64 = SolveConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type LineGrid64 = LineGrid<f64>;
pub type LineState64 = LineState<f64>;
pub type LineTrajectory64 = LineTrajectory<f64>;
pub type MonotoneProfile64 = MonotoneProfile<f64>;
pub type SolutionFrame64 = SolutionFrame<f64>;
pub type EigenProfile64 = EigenProfile<f64>;
pub type RateFit64 = RateFit<f64>;
