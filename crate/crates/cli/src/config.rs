//! Flat `key = value` run configuration.
//!
//! Keys use dotted section names (`law.q`, `solver.dt_max`). Lines starting
//! with `#` are comments. Parsing collects every problem it finds, so a
//! single `validate` call reports all of them with line numbers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use steepfront::{FluxLaw, MonotoneProfile, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TypeII,
    TypeI,
    Coexist,
    Profile,
    Rates,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "typeii" => Some(Mode::TypeII),
            "typei" => Some(Mode::TypeI),
            "coexist" => Some(Mode::Coexist),
            "profile" => Some(Mode::Profile),
            "rates" => Some(Mode::Rates),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TypeII => "TypeII",
            Mode::TypeI => "TypeI",
            Mode::Coexist => "Coexist",
            Mode::Profile => "Profile",
            Mode::Rates => "Rates",
        }
    }
}

/// The flux law `Φ` of the physical equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawSpec {
    /// `Φ(s) = s^m/m`. `from_q` records that the user wrote `law.q`, which
    /// stands for `m = −q`.
    Power { m: f64, from_q: bool },
    /// `Φ′(s) = (1+s²)^{−(1+α)}`.
    Curvature { alpha: f64 },
}

impl LawSpec {
    pub fn phi(&self) -> FluxLaw<f64> {
        match *self {
            LawSpec::Power { m, .. } => FluxLaw::power(m),
            LawSpec::Curvature { alpha } => FluxLaw::curvature(alpha),
        }
    }

    /// Exponent `q` of the conjugate law near zero.
    pub fn q(&self) -> f64 {
        match *self {
            LawSpec::Power { m, .. } => -m,
            LawSpec::Curvature { alpha } => 1.0 + 2.0 * alpha,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            LawSpec::Power { m, from_q: true } => format!("power law with q={}", -m),
            LawSpec::Power { m, .. } => format!("power law with m={m}"),
            LawSpec::Curvature { alpha } => format!("curvature law with alpha={alpha}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    SymmetricCos,
    AsymmetricPoly,
}

impl Preset {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "symmetric-cos" => Some(Preset::SymmetricCos),
            "asymmetric-poly" => Some(Preset::AsymmetricPoly),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::SymmetricCos => "symmetric-cos",
            Preset::AsymmetricPoly => "asymmetric-poly",
        }
    }

    /// Initial position `x₀(u)` of the level `u`.
    pub fn x0(self, u: f64) -> f64 {
        match self {
            Preset::SymmetricCos => -(std::f64::consts::PI * u).cos(),
            Preset::AsymmetricPoly => 2.0 * u.powi(4) - 0.5 * u.powi(6) - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Preset(Preset),
    /// `(x, u)` knots of a monotone profile rising from 0 to 1.
    Table(Vec<(f64, f64)>),
}

impl DataSpec {
    /// The initial physical profile, sampled finely for presets.
    pub fn profile(&self) -> steepfront::Result<MonotoneProfile<f64>> {
        match self {
            DataSpec::Preset(p) => MonotoneProfile::from_inverse(4000, |u| p.x0(u)),
            DataSpec::Table(pairs) => MonotoneProfile::new(pairs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub law: LawSpec,
    pub data: DataSpec,
    pub n_cells: usize,
    pub x_range: (f64, f64),
    pub settings: SolverSettings<f64>,
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
    pub profile_samples: usize,
}

pub const DEFAULT_N_CELLS: usize = 400;
pub const DEFAULT_X_RANGE: (f64, f64) = (-8.0, 8.0);
pub const DEFAULT_TIMES: [f64; 4] = [0.05, 0.1, 0.2, 0.3];
pub const DEFAULT_PROFILE_SAMPLES: usize = 401;

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "law.family",
    "law.m",
    "law.q",
    "law.alpha",
    "data.preset",
    "data.table",
    "grid.n_cells",
    "grid.x_min",
    "grid.x_max",
    "solver.dt_init",
    "solver.dt_max",
    "solver.epsilon",
    "solver.newton_tol",
    "solver.newton_max_iter",
    "solver.extinction_threshold",
    "solver.max_relative_change",
    "output.times",
    "output.dir",
    "output.plots",
    "profile.samples",
];

/// One problem found in a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found while parsing and validating a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub issues: Vec<Issue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} problem(s)", self.source_name, self.issues.len())?;
        for issue in &self.issues {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Entry {
    line: usize,
    value: String,
}

struct Parser {
    entries: BTreeMap<String, Entry>,
    issues: Vec<Issue>,
}

impl Parser {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(Issue {
            line,
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|e| (e.line, e.value.as_str()))
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let (line, v) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                let msg = format!("{key}: expected a finite number, got '{v}'");
                self.issue(Some(line), msg);
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        let (line, v) = self.raw(key)?;
        match v.parse::<usize>() {
            Ok(x) => Some(x),
            Err(_) => {
                let msg = format!("{key}: expected a non-negative integer, got '{v}'");
                self.issue(Some(line), msg);
                None
            }
        }
    }

    fn flag(&mut self, key: &str) -> Option<bool> {
        let (line, v) = self.raw(key)?;
        match v {
            "true" | "yes" | "on" => Some(true),
            "false" | "no" | "off" => Some(false),
            _ => {
                let msg = format!("{key}: expected true or false, got '{v}'");
                self.issue(Some(line), msg);
                None
            }
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

pub fn parse_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        source_name: name.clone(),
        issues: vec![Issue {
            line: None,
            message: format!("cannot read config: {e}"),
        }],
    })?;
    parse_str(&text, &name)
}

pub fn parse_str(text: &str, source_name: &str) -> Result<RunConfig, ConfigError> {
    let mut p = Parser {
        entries: BTreeMap::new(),
        issues: Vec::new(),
    };
    let mut unknown = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            p.issue(Some(line), format!("expected `key = value`, got '{content}'"));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            p.issue(Some(line), "missing key before '='");
            continue;
        }
        if !KNOWN_KEYS.contains(&k) {
            unknown.push(format!("{k} (line {line})"));
            continue;
        }
        if let Some(prev) = p.entries.get(k) {
            let msg = format!("key '{k}' given twice (first on line {})", prev.line);
            p.issue(Some(line), msg);
            continue;
        }
        p.entries.insert(
            k.to_string(),
            Entry {
                line,
                value: v.to_string(),
            },
        );
    }
    if !unknown.is_empty() {
        p.issue(None, format!("unknown keys: {}", unknown.join(", ")));
    }

    let mode = match p.raw("mode") {
        None => {
            p.issue(
                None,
                "mode is required (one of TypeII, TypeI, Coexist, Profile, Rates)",
            );
            None
        }
        Some((line, v)) => {
            let parsed = Mode::parse(v);
            if parsed.is_none() {
                let msg = format!(
                    "mode: unknown mode '{v}' (expected TypeII, TypeI, Coexist, Profile or Rates)"
                );
                p.issue(Some(line), msg);
            }
            parsed
        }
    };

    let law = parse_law(&mut p);
    let data = parse_data(&mut p);

    let n_cells = p.count("grid.n_cells").unwrap_or(DEFAULT_N_CELLS);
    if n_cells < 4 {
        let line = p.line_of("grid.n_cells");
        p.issue(line, format!("grid.n_cells must be at least 4, got {n_cells}"));
    }
    let x_min = p.number("grid.x_min").unwrap_or(DEFAULT_X_RANGE.0);
    let x_max = p.number("grid.x_max").unwrap_or(DEFAULT_X_RANGE.1);
    if x_min >= x_max {
        let line = p.line_of("grid.x_max").or(p.line_of("grid.x_min"));
        p.issue(line, format!("grid.x_min ({x_min}) must be below grid.x_max ({x_max})"));
    }

    let times = match p.raw("output.times") {
        None => DEFAULT_TIMES.to_vec(),
        Some((line, v)) => {
            let mut out = Vec::new();
            let mut bad = Vec::new();
            for item in split_list(v) {
                match item.parse::<f64>() {
                    Ok(t) if t.is_finite() => out.push(t),
                    _ => bad.push(item.to_string()),
                }
            }
            if !bad.is_empty() {
                p.issue(
                    Some(line),
                    format!("output.times: not numbers: {}", bad.join(", ")),
                );
            } else if out.is_empty() {
                p.issue(Some(line), "output.times: at least one time is required");
            } else if out[0] <= 0.0 || out.windows(2).any(|w| w[1] <= w[0]) {
                p.issue(
                    Some(line),
                    "output.times must be positive and strictly increasing",
                );
            }
            out
        }
    };

    let mut settings = SolverSettings::new(times);
    if let Some(v) = p.number("solver.dt_init") {
        settings.dt_init = v;
    }
    if let Some(v) = p.number("solver.dt_max") {
        settings.dt_max = v;
    }
    if let Some(v) = p.number("solver.epsilon") {
        settings.epsilon = v;
    }
    if let Some(v) = p.number("solver.newton_tol") {
        settings.newton_tol = v;
    }
    if let Some(v) = p.count("solver.newton_max_iter") {
        settings.newton_max_iter = v;
    }
    if let Some(v) = p.number("solver.extinction_threshold") {
        settings.extinction_threshold = v;
    }
    if let Some(v) = p.number("solver.max_relative_change") {
        settings.max_relative_change = Some(v);
    }
    if settings.output_times.windows(2).all(|w| w[1] > w[0]) {
        if let Err(e) = settings.validate() {
            p.issue(None, format!("solver settings: {e}"));
        }
    }

    let out_dir = p.raw("output.dir").map(|(_, v)| PathBuf::from(v));
    let plots = p.flag("output.plots").unwrap_or(true);
    let profile_samples = p.count("profile.samples").unwrap_or(DEFAULT_PROFILE_SAMPLES);
    if profile_samples < 5 {
        let line = p.line_of("profile.samples");
        p.issue(line, format!("profile.samples must be at least 5, got {profile_samples}"));
    }

    if let (Some(mode), Some(law)) = (mode, law) {
        check_mode_law(&mut p, mode, law);
    }

    match (mode, law, data) {
        (Some(mode), Some(law), Some(data)) if p.issues.is_empty() => Ok(RunConfig {
            mode,
            law,
            data,
            n_cells,
            x_range: (x_min, x_max),
            settings,
            out_dir,
            plots,
            profile_samples,
        }),
        _ => Err(ConfigError {
            source_name: source_name.to_string(),
            issues: p.issues,
        }),
    }
}

fn parse_law(p: &mut Parser) -> Option<LawSpec> {
    let family = p.raw("law.family").map(|(l, v)| (l, v.to_ascii_lowercase()));
    let given: Vec<&str> = ["law.m", "law.q", "law.alpha"]
        .into_iter()
        .filter(|k| p.entries.contains_key(*k))
        .collect();
    let fam_line = family.as_ref().map(|f| f.0);
    if given.len() != 1 {
        let msg = if given.is_empty() {
            "the law needs exactly one parameter: law.m or law.q (power) or law.alpha (curvature)"
                .to_string()
        } else {
            format!("the law needs exactly one parameter, got {}", given.join(", "))
        };
        p.issue(fam_line, msg);
        return None;
    }
    let key = given[0];
    let line = p.line_of(key);
    let value = p.number(key)?;
    let fam = match &family {
        Some((_, f)) => f.as_str(),
        None if key == "law.alpha" => "curvature",
        None => "power",
    };
    match (fam, key) {
        ("power", "law.m") => Some(LawSpec::Power {
            m: value,
            from_q: false,
        }),
        ("power", "law.q") => {
            if value > 0.0 {
                Some(LawSpec::Power {
                    m: -value,
                    from_q: true,
                })
            } else {
                p.issue(
                    line,
                    format!(
                        "law.q = {value}: the conjugate exponent must satisfy q > 0 (Φ′(s) ≈ s^(−q−1) at infinity)"
                    ),
                );
                None
            }
        }
        ("curvature", "law.alpha") => {
            if value > -0.5 {
                Some(LawSpec::Curvature { alpha: value })
            } else {
                p.issue(
                    line,
                    format!("law.alpha = {value}: the curvature law needs alpha > −1/2"),
                );
                None
            }
        }
        ("power" | "curvature", _) => {
            p.issue(
                line,
                format!("{key} is not a parameter of the {fam} family"),
            );
            None
        }
        _ => {
            p.issue(
                fam_line,
                format!("law.family: unknown family '{fam}' (expected power or curvature)"),
            );
            None
        }
    }
}

fn parse_data(p: &mut Parser) -> Option<DataSpec> {
    let preset = p.raw("data.preset").map(|(l, v)| (l, v.to_string()));
    let table = p.raw("data.table").map(|(l, v)| (l, v.to_string()));
    match (preset, table) {
        (Some(_), Some((line, _))) => {
            p.issue(Some(line), "give either data.preset or data.table, not both");
            None
        }
        (None, None) => Some(DataSpec::Preset(Preset::SymmetricCos)),
        (Some((line, v)), None) => match Preset::parse(&v) {
            Some(pr) => Some(DataSpec::Preset(pr)),
            None => {
                let msg = format!(
                    "data.preset: unknown preset '{v}' (expected symmetric-cos or asymmetric-poly)"
                );
                p.issue(Some(line), msg);
                None
            }
        },
        (None, Some((line, v))) => {
            let mut pairs = Vec::new();
            for item in split_list(&v) {
                let parsed = item.split_once(':').and_then(|(x, u)| {
                    Some((x.trim().parse::<f64>().ok()?, u.trim().parse::<f64>().ok()?))
                });
                match parsed {
                    Some(pair) => pairs.push(pair),
                    None => {
                        let msg = format!("data.table: expected `x:u` pairs, got '{item}'");
                        p.issue(Some(line), msg);
                        return None;
                    }
                }
            }
            if let Err(e) = MonotoneProfile::new(pairs.clone()) {
                p.issue(Some(line), format!("data.table: {e}"));
                return None;
            }
            Some(DataSpec::Table(pairs))
        }
    }
}

fn check_mode_law(p: &mut Parser, mode: Mode, law: LawSpec) {
    let line = p
        .line_of("law.m")
        .or(p.line_of("law.q"))
        .or(p.line_of("law.alpha"));
    let class = law.phi().classify();
    let needs_type_ii = matches!(mode, Mode::TypeII | Mode::Rates | Mode::Coexist);
    let needs_type_i = matches!(mode, Mode::TypeI | Mode::Coexist);
    if needs_type_ii && !class.flux_bounded_at_infinity.holds() {
        p.issue(
            line,
            format!(
                "{} needs Φ(∞) finite, but the {} has unbounded flux (a power law needs m < 0, i.e. q > 0)",
                mode.as_str(),
                law.describe()
            ),
        );
    }
    if needs_type_i && !class.finite_mass_existence.holds() {
        p.issue(
            line,
            format!(
                "{} with the {}: finite-mass solutions of the Cauchy problem do not exist (needs m > −1)",
                mode.as_str(),
                law.describe()
            ),
        );
    }
    if mode == Mode::Profile {
        if let LawSpec::Power { .. } = law {
            let q = law.q();
            if q.is_nan() || q <= 0.0 || q == 1.0 {
                p.issue(
                    line,
                    format!("Profile needs q > 0 and q ≠ 1 for the eigenprofile, got q = {q}"),
                );
            }
        } else if law.q() <= 1.0 {
            p.issue(line, "Profile with the curvature law needs alpha > 0");
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

impl RunConfig {
    /// The resolved config in the input format, every key explicit.
    pub fn to_config_string(&self) -> String {
        let mut lines = vec![format!("mode = {}", self.mode.as_str())];
        match self.law {
            LawSpec::Power { m, from_q: true } => {
                lines.push("law.family = power".into());
                lines.push(format!("law.q = {}", fmt_num(-m)));
            }
            LawSpec::Power { m, .. } => {
                lines.push("law.family = power".into());
                lines.push(format!("law.m = {}", fmt_num(m)));
            }
            LawSpec::Curvature { alpha } => {
                lines.push("law.family = curvature".into());
                lines.push(format!("law.alpha = {}", fmt_num(alpha)));
            }
        }
        match &self.data {
            DataSpec::Preset(p) => lines.push(format!("data.preset = {}", p.as_str())),
            DataSpec::Table(pairs) => lines.push(format!(
                "data.table = {}",
                pairs
                    .iter()
                    .map(|(x, u)| format!("{}:{}", fmt_num(*x), fmt_num(*u)))
                    .collect::<Vec<_>>()
                    .join(", ")
            )),
        }
        let s = &self.settings;
        lines.push(format!("grid.n_cells = {}", self.n_cells));
        lines.push(format!("grid.x_min = {}", fmt_num(self.x_range.0)));
        lines.push(format!("grid.x_max = {}", fmt_num(self.x_range.1)));
        lines.push(format!("solver.dt_init = {}", fmt_num(s.dt_init)));
        lines.push(format!("solver.dt_max = {}", fmt_num(s.dt_max)));
        lines.push(format!("solver.epsilon = {}", fmt_num(s.epsilon)));
        lines.push(format!("solver.newton_tol = {}", fmt_num(s.newton_tol)));
        lines.push(format!("solver.newton_max_iter = {}", s.newton_max_iter));
        lines.push(format!(
            "solver.extinction_threshold = {}",
            fmt_num(s.extinction_threshold)
        ));
        if let Some(v) = s.max_relative_change {
            lines.push(format!("solver.max_relative_change = {}", fmt_num(v)));
        }
        lines.push(format!(
            "output.times = {}",
            s.output_times
                .iter()
                .map(|t| fmt_num(*t))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        if let Some(d) = &self.out_dir {
            lines.push(format!("output.dir = {}", d.display()));
        }
        lines.push(format!("output.plots = {}", self.plots));
        lines.push(format!("profile.samples = {}", self.profile_samples));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}
