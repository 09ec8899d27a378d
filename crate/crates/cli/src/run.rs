//! Executes a resolved [`RunConfig`] and writes its artifacts.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use steepfront::analysis::max_gradient_series;
use steepfront::cauchy::SUPPORT_THRESHOLD;
use steepfront::conjsolver::init_from_x0;
use steepfront::transform::{conj_initial_data_with, Interpolation};
use steepfront::{
    eigenprofile, estimate_extinction, fit_exponential, fit_power, fit_power_to_origin,
    integrate_to_u, rate_predictions, reconstruct, similarity_profile, solve_from, solve_line,
    ConjGrid, Error, LineGrid, LineState, LineTrajectory, MonotoneProfile, SolveConfig,
    SolveError, Trajectory,
};

use crate::config::{DataSpec, LawSpec, Mode, RunConfig};
use crate::output::{self, num, RateRecord};
use crate::plot::{self, Curve};

/// Why a run did not complete.
#[derive(Debug)]
pub enum Failure {
    /// Bad input; exit status 2.
    Validation(String),
    /// The time step collapsed; exit status 3. Partial output is on disk.
    Stall(String),
    /// Anything else, such as I/O; exit status 1.
    Other(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Stall(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Stall(m) => write!(f, "solver stalled: {m}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Stall { .. } | Error::StepFailure { .. } => Failure::Stall(e.to_string()),
            Error::Config(_)
            | Error::InvalidData(_)
            | Error::Domain(_)
            | Error::InvalidLaw(_)
            | Error::Usage(_) => Failure::Validation(e.to_string()),
            other => Failure::Other(other.into()),
        }
    }
}

/// Human-readable result of a run.
#[derive(Debug, Default)]
pub struct Summary {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    /// Last profile written, kept for overlay plots.
    last_frame: Option<Frame>,
}

/// `(t, (x, u) pairs, (l, r))`.
type Frame = (f64, Vec<(f64, f64)>, (f64, f64));

impl Summary {
    fn absorb(&mut self, prefix: &str, other: Summary) {
        self.lines
            .extend(other.lines.into_iter().map(|l| format!("[{prefix}] {l}")));
        self.warnings
            .extend(other.warnings.into_iter().map(|l| format!("[{prefix}] {l}")));
    }
}

/// Progress messages on stderr, silenced by `--quiet`.
#[derive(Debug, Clone, Copy)]
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn execute(cfg: &RunConfig, out: &Path, log: Log) -> Result<Summary, Failure> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let result = match cfg.mode {
        Mode::TypeII => type_ii(cfg, out, log, false),
        Mode::Rates => type_ii(cfg, out, log, true),
        Mode::TypeI => type_i(cfg, out, log),
        Mode::Coexist => coexist(cfg, out, log),
        Mode::Profile => profile(cfg, out, log),
    };
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(f) => format!("failed (exit {}): {f}", f.exit_code()),
    };
    let empty = Summary::default();
    let warnings = match &result {
        Ok(s) => &s.warnings,
        Err(_) => &empty.warnings,
    };
    write_manifest(cfg, out, &status, warnings)?;
    result
}

fn write_manifest(cfg: &RunConfig, out: &Path, status: &str, warnings: &[String]) -> Result<(), Failure> {
    let mut text = format!(
        "# steepfront {}\n# status: {status}\n",
        env!("CARGO_PKG_VERSION")
    );
    match cfg.mode {
        Mode::TypeII | Mode::Rates => text.push_str(&format!(
            "# grid: conjugate, {} cells on u in [0, 1], h = {}\n",
            cfg.n_cells,
            num(1.0 / cfg.n_cells as f64)
        )),
        Mode::TypeI => text.push_str(&line_grid_note(cfg)),
        Mode::Coexist => {
            text.push_str(&format!(
                "# grid: conjugate, {} cells on u in [0, 1]\n",
                cfg.n_cells
            ));
            text.push_str(&line_grid_note(cfg));
        }
        Mode::Profile => text.push_str(&format!("# samples: {}\n", cfg.profile_samples)),
    }
    for w in warnings {
        text.push_str(&format!("# warning: {w}\n"));
    }
    text.push_str(&cfg.to_config_string());
    fs::write(out.join("manifest.cfg"), text)?;
    Ok(())
}

fn line_grid_note(cfg: &RunConfig) -> String {
    let (a, b) = cfg.x_range;
    format!(
        "# grid: line, {} cells on x in [{}, {}], h = {}\n",
        cfg.n_cells,
        num(a),
        num(b),
        num((b - a) / cfg.n_cells as f64)
    )
}

/// Fit window over the output times: the last decade when the run spans
/// one, otherwise the whole range.
fn fit_window(times: &[f64]) -> (f64, f64) {
    let first = times[0];
    let last = times[times.len() - 1];
    if last >= 10.0 * first {
        (last / 10.0, last)
    } else {
        (first, last)
    }
}

fn rate_line(r: &RateRecord) -> String {
    let f = &r.fit;
    let target = f.target.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into());
    let err = f
        .relative_error()
        .map(|e| format!("{:.2}%", 100.0 * e))
        .unwrap_or_else(|| "-".into());
    let origin = f
        .origin
        .map(|t| format!(", T_est = {t:.6}"))
        .unwrap_or_default();
    format!(
        "{} ({}): exponent {:.4} vs target {target}, rel err {err} (tol {:.0}%){origin} {}",
        r.quantity,
        f.kind.as_str(),
        f.exponent,
        100.0 * r.tolerance,
        if r.pass() { "PASS" } else { "FAIL" }
    )
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Validation(msg.into()))
    }
}

fn profile_plots(
    out: &Path,
    frames: &[Frame],
    title: &str,
) -> Result<Vec<PathBuf>, Failure> {
    let mut paths = Vec::new();
    for (k, (t, pairs, (l, r))) in frames.iter().enumerate() {
        let path = out.join(format!("profile_{k:03}.svg"));
        plot::profile_plot(
            &path,
            &format!("{title}, t = {t}"),
            &[Curve {
                label: format!("t = {t}"),
                points: pairs,
            }],
            &[*l, *r],
        )?;
        paths.push(path);
    }
    Ok(paths)
}

fn write_profiles(out: &Path, frames: &[Frame]) -> Result<(), Failure> {
    let rows: Vec<Vec<f64>> = frames
        .iter()
        .flat_map(|(t, pairs, _)| pairs.iter().map(move |&(x, u)| vec![*t, x, u]))
        .collect();
    output::write_table(&out.join("profiles.csv"), &output::PROFILES_HEADER, &rows)?;
    Ok(())
}

fn solve_type_ii(cfg: &RunConfig) -> Result<(Trajectory<f64>, Option<Error>), Failure> {
    let grid = ConjGrid::new(cfg.n_cells)?;
    let initial = match &cfg.data {
        DataSpec::Preset(p) => init_from_x0(&grid, |u| p.x0(u))?,
        DataSpec::Table(pairs) => conj_initial_data_with(
            &MonotoneProfile::new(pairs.clone())?,
            &grid,
            Interpolation::MonotoneCubic,
        )?,
    };
    let sc = SolveConfig::new(cfg.law.phi().conjugate(), cfg.settings.clone());
    match solve_from(initial, &sc) {
        Ok(t) => Ok((t, None)),
        Err(SolveError {
            error,
            partial: Some(partial),
        }) if matches!(error, Error::Stall { .. } | Error::StepFailure { .. }) => {
            Ok((*partial, Some(error)))
        }
        Err(e) => Err(e.error.into()),
    }
}

fn type_ii(cfg: &RunConfig, out: &Path, log: Log, extra_rates: bool) -> Result<Summary, Failure> {
    let q = cfg.law.q();
    log.say(format!(
        "TypeII run: {}, q = {q}, {} cells",
        cfg.law.describe(),
        cfg.n_cells
    ));
    let (traj, stall) = solve_type_ii(cfg)?;
    let mut summary = Summary::default();

    let mut frames = Vec::new();
    for state in &traj.states {
        match reconstruct(state) {
            Ok(f) => frames.push((state.t, f.pairs, (f.l, f.r))),
            Err(e) => summary
                .warnings
                .push(format!("no profile at t = {}: {e}", state.t)),
        }
    }
    write_profiles(out, &frames)?;
    let rows: Vec<Vec<f64>> = traj
        .interface_series
        .iter()
        .zip(&traj.mass_series)
        .map(|(&(t, l, r), &(_, m))| vec![t, l, r, m])
        .collect();
    output::write_table(&out.join("interfaces.csv"), &output::INTERFACES_HEADER, &rows)?;
    if cfg.plots {
        profile_plots(out, &frames, &format!("TypeII, q = {q}"))?;
    }

    if let Some(err) = stall {
        output::write_rates(&out.join("rates.csv"), &[])?;
        return Err(Failure::Stall(format!(
            "{err}; partial output up to t = {} written",
            traj.final_state().t
        )));
    }

    let (l, r) = traj.final_state().interfaces();
    summary.lines.push(format!(
        "final t = {}, interfaces [{l:.6}, {r:.6}], mass {:.6e}",
        traj.final_state().t,
        r - l
    ));
    if let Some(ext) = traj.extinction {
        summary
            .lines
            .push(format!("extinction detected, T_est = {:.6}", ext.t_est));
    }

    summary.last_frame = frames.last().cloned();
    let records = type_ii_rates(cfg, &traj, q, extra_rates, &mut summary.warnings);
    output::write_rates(&out.join("rates.csv"), &records)?;
    summary.lines.extend(records.iter().map(rate_line));

    if extra_rates {
        let p = rate_predictions(q)?;
        let regime = format!("{:?}", p.regime);
        let mut rows = vec![
            ("q".to_string(), num(p.q)),
            ("regime".to_string(), regime),
            ("interface_exponent".to_string(), num(p.interface_exponent)),
            ("gradient_exponent".to_string(), num(p.gradient_exponent)),
            ("endpoint_exponent".to_string(), num(p.endpoint_exponent)),
            ("gamma_interface_blowup".to_string(), num(p.gamma_interface_blowup)),
        ];
        if let Some(lam) = p.lambda {
            rows.push(("lambda".to_string(), num(lam)));
        }
        let mut w = csv::Writer::from_path(out.join("predictions.csv"))
            .context("cannot create predictions.csv")?;
        w.write_record(["quantity", "value"]).context("write")?;
        for (k, v) in rows {
            w.write_record([k, v]).context("write")?;
        }
        w.flush()?;
    }
    Ok(summary)
}

fn type_ii_rates(
    cfg: &RunConfig,
    traj: &Trajectory<f64>,
    q: f64,
    extra: bool,
    warnings: &mut Vec<String>,
) -> Vec<RateRecord> {
    let times = &cfg.settings.output_times;
    let window = fit_window(times);
    let mut records = Vec::new();
    let mut push = |name: &str, fit: steepfront::Result<steepfront::RateFit64>, target: f64, tol: f64| {
        match fit {
            Ok(f) => records.push(RateRecord::new(name, f.with_target(target), tol)),
            Err(e) => warnings.push(format!("{name}: no fit ({e})")),
        }
    };
    let hw = traj.half_width_series();
    let grad = || max_gradient_series(traj);
    if (q - 1.0).abs() < 1e-12 {
        push("half_width", fit_exponential(&hw, Some((times[0], times[times.len() - 1]))), -PI * PI, 0.03);
        if extra {
            let g = grad().and_then(|g| fit_exponential(&g, None));
            push("max_gradient", g, PI * PI, 0.05);
        }
    } else if q > 1.0 {
        let e = 1.0 / (q - 1.0);
        push("half_width", fit_power(&hw, Some(window)), -e, 0.05);
        if extra {
            let g = grad().and_then(|g| fit_power(&g, Some(window)));
            push("max_gradient", g, e, 0.05);
        }
    } else if traj.extinction.is_none() {
        warnings.push(format!(
            "q = {q} < 1 but no extinction before t = {}; extend output.times to fit the (T−t) rates",
            times[times.len() - 1]
        ));
    } else {
        let e = 1.0 / (1.0 - q);
        match estimate_extinction(traj, q, None) {
            Ok(est) => {
                records.push(RateRecord::new("half_width", est.half_width_fit, 0.07));
                if extra {
                    let g = grad().and_then(|g| {
                        let g: Vec<_> = g.into_iter().filter(|p| p.0 < est.t_est).collect();
                        fit_power_to_origin(&g, est.t_est, None)
                    });
                    match g {
                        Ok(f) => records.push(RateRecord::new("max_gradient", f.with_target(-e), 0.07)),
                        Err(err) => warnings.push(format!("max_gradient: no fit ({err})")),
                    }
                }
            }
            Err(err) => warnings.push(format!("half_width: no extinction fit ({err})")),
        }
    }
    records
}

fn solve_type_i(cfg: &RunConfig) -> Result<(LineGrid<f64>, LineTrajectory<f64>), Failure> {
    let (a, b) = cfg.x_range;
    let grid = LineGrid::new(a, b, cfg.n_cells)?;
    let profile = cfg.data.profile()?;
    let (pa, pb) = profile.endpoints();
    ensure(
        pa >= a && pb <= b,
        format!("initial profile spans [{pa}, {pb}], outside grid.x_min/grid.x_max [{a}, {b}]"),
    )?;
    let v0 = LineState::from_cumulative(&grid, |x| profile.u_at(x))?;
    let traj = solve_line(&grid, &v0, &cfg.law.phi(), &cfg.settings)?;
    Ok((grid, traj))
}

fn type_i(cfg: &RunConfig, out: &Path, log: Log) -> Result<Summary, Failure> {
    log.say(format!(
        "TypeI run: {}, {} cells on [{}, {}]",
        cfg.law.describe(),
        cfg.n_cells,
        cfg.x_range.0,
        cfg.x_range.1
    ));
    let (grid, traj) = solve_type_i(cfg)?;
    let mut summary = Summary::default();
    if let Some(w) = &traj.truncation_warning {
        summary.warnings.push(w.clone());
    }
    let h = grid.h();
    let frames: Vec<_> = traj
        .states
        .iter()
        .map(|s| {
            let f = integrate_to_u(&grid, s);
            let lr = s
                .support(&grid, SUPPORT_THRESHOLD)
                .unwrap_or((grid.x_min, grid.x_max));
            (s.t, f.pairs, lr)
        })
        .collect();
    write_profiles(out, &frames)?;
    let rows: Vec<Vec<f64>> = frames
        .iter()
        .zip(&traj.states)
        .map(|((t, _, (l, r)), s)| vec![*t, *l, *r, s.mass(h)])
        .collect();
    output::write_table(&out.join("interfaces.csv"), &output::INTERFACES_HEADER, &rows)?;
    if cfg.plots {
        profile_plots(out, &frames, &format!("TypeI, {}", cfg.law.describe()))?;
    }

    let drift = steepfront::check_mass_conservation(&traj);
    summary
        .lines
        .push(format!("relative mass drift {drift:.2e}"));
    let m0 = cfg.law.phi().exponent_near_zero().unwrap_or(1.0);
    let target = -1.0 / (m0 + 1.0);
    let mut records = Vec::new();
    let sup: Vec<_> = traj.sup_series.iter().copied().filter(|p| p.0 > 0.0).collect();
    match fit_power(&sup, Some(fit_window(&cfg.settings.output_times))) {
        Ok(f) => {
            if traj.truncation_warning.is_some() {
                summary.warnings.push(
                    "sup_norm fit uses data affected by the domain truncation; widen grid.x_min/grid.x_max".into(),
                );
            }
            records.push(RateRecord::new("sup_norm", f.with_target(target), 0.05))
        }
        Err(e) => summary.warnings.push(format!("sup_norm: no fit ({e})")),
    }
    output::write_rates(&out.join("rates.csv"), &records)?;
    summary.lines.extend(records.iter().map(rate_line));
    summary.last_frame = frames.last().cloned();
    Ok(summary)
}

fn coexist(cfg: &RunConfig, out: &Path, log: Log) -> Result<Summary, Failure> {
    let dir2 = out.join("type_ii");
    let dir1 = out.join("type_i");
    fs::create_dir_all(&dir2)?;
    fs::create_dir_all(&dir1)?;
    let s2 = type_ii(cfg, &dir2, log, false)?;
    let s1 = type_i(cfg, &dir1, log)?;
    if let (true, Some(f2), Some(f1)) = (cfg.plots, &s2.last_frame, &s1.last_frame) {
        plot::profile_plot(
            &out.join("coexist.svg"),
            &format!("coexisting solutions, {}, t = {}", cfg.law.describe(), f2.0),
            &[
                Curve {
                    label: format!("Type II, t = {}", f2.0),
                    points: &f2.1,
                },
                Curve {
                    label: format!("Type I, t = {}", f1.0),
                    points: &f1.1,
                },
            ],
            &[f2.2 .0, f2.2 .1],
        )?;
    }
    let mut summary = Summary::default();
    summary.absorb("TypeII", s2);
    summary.absorb("TypeI", s1);
    Ok(summary)
}

fn profile(cfg: &RunConfig, out: &Path, log: Log) -> Result<Summary, Failure> {
    let mut summary = Summary::default();
    let n = cfg.profile_samples;
    let mut checks: Vec<(String, f64, f64)> = Vec::new();
    match cfg.law {
        LawSpec::Power { .. } => {
            let q = cfg.law.q();
            log.say(format!("eigenprofile for q = {q}, {n} samples"));
            let p = eigenprofile(q, n)?;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let m = p.f[n - 1 - j];
                    vec![p.u[j], p.f[j], m, (p.f[j] - m).abs()]
                })
                .collect();
            output::write_table(
                &out.join("eigenprofile.csv"),
                &["u", "f", "f_mirror", "defect"],
                &rows,
            )?;
            checks.push(("symmetry_defect".into(), p.symmetry_defect(), 1e-9));
            if let Some(res) = p.residual() {
                checks.push(("plug_in_residual".into(), res / p.max(), 1e-5));
            }
            // The endpoint exponent needs resolution near u = 0.
            let fine = eigenprofile(q, 4001)?;
            let pts: Vec<_> = fine
                .u
                .iter()
                .zip(&fine.f)
                .filter(|(u, _)| **u >= 1e-3 && **u <= 1e-2)
                .map(|(u, f)| (*u, *f))
                .collect();
            let fit = fit_power(&pts, None)?.with_target(1.0 / q);
            checks.push((
                "endpoint_exponent_rel_error".into(),
                fit.relative_error().unwrap_or(f64::NAN),
                0.05,
            ));
            summary.lines.push(format!(
                "q = {q}: mu = {:.6}, max f = {:.6}, g'(0) = {:.6}",
                p.mu,
                p.max(),
                p.slope0
            ));
            if cfg.plots {
                let pts: Vec<_> = p.u.iter().copied().zip(p.f.iter().copied()).collect();
                plot::xy_plot(
                    &out.join("eigenprofile.svg"),
                    &format!("eigenprofile f_q, q = {q}"),
                    ("u", "f"),
                    &[Curve {
                        label: "f".into(),
                        points: &pts,
                    }],
                )?;
            }
        }
        LawSpec::Curvature { alpha } => {
            log.say(format!("similarity profile for alpha = {alpha}, {n} samples"));
            let p = similarity_profile(alpha, n)?;
            let rows: Vec<Vec<f64>> = p
                .xi
                .iter()
                .zip(&p.f)
                .map(|(&x, &f)| vec![x, f, p.slope(x)])
                .collect();
            output::write_table(&out.join("similarity.csv"), &["xi", "F", "slope"], &rows)?;
            checks.push(("F(-K)".into(), p.f[0].abs(), 1e-12));
            checks.push(("1-F(K)".into(), (1.0 - p.f[n - 1]).abs(), 1e-12));
            let drops = p.f.windows(2).filter(|w| w[1] < w[0]).count();
            checks.push(("monotonicity_violations".into(), drops as f64, 0.0));
            summary
                .lines
                .push(format!("alpha = {alpha}: K = {:.6}, A = {:.6}", p.k, p.a_coef));
            if cfg.plots {
                let pts: Vec<_> = p.xi.iter().copied().zip(p.f.iter().copied()).collect();
                plot::xy_plot(
                    &out.join("similarity.svg"),
                    &format!("self-similar profile, alpha = {alpha}"),
                    ("xi", "F"),
                    &[Curve {
                        label: "F".into(),
                        points: &pts,
                    }],
                )?;
            }
        }
    }
    let mut w = csv::Writer::from_path(out.join("checks.csv")).context("cannot create checks.csv")?;
    w.write_record(["check", "value", "tolerance", "pass"]).context("write")?;
    for (name, v, tol) in &checks {
        let pass = *v <= *tol;
        w.write_record([name.clone(), num(*v), num(*tol), pass.to_string()])
            .context("write")?;
        summary.lines.push(format!(
            "{name} = {v:.3e} (tol {tol:.0e}) {}",
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    w.flush()?;
    Ok(summary)
}
