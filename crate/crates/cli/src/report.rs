//! One-page summary of a finished run directory.

use std::path::Path;

use anyhow::{Context, Result};

use crate::plot;

#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
}

struct RateRow {
    quantity: String,
    kind: String,
    exponent: f64,
    origin: Option<f64>,
    target: Option<f64>,
    rel_error: Option<f64>,
    tolerance: f64,
    pass: bool,
}

fn opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        Ok(Some(s.parse().with_context(|| format!("bad number '{s}'"))?))
    }
}

fn read_rates(path: &Path) -> Result<Vec<RateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no '{name}' column", path.display()))
    };
    let (iq, ik, ie, io, it, ir, itol, ip) = (
        col("quantity")?,
        col("kind")?,
        col("exponent")?,
        col("origin")?,
        col("target")?,
        col("rel_error")?,
        col("tolerance")?,
        col("pass")?,
    );
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(RateRow {
            quantity: rec[iq].to_string(),
            kind: rec[ik].to_string(),
            exponent: rec[ie].parse().context("bad exponent")?,
            origin: opt(&rec[io])?,
            target: opt(&rec[it])?,
            rel_error: opt(&rec[ir])?,
            tolerance: rec[itol].parse().context("bad tolerance")?,
            pass: &rec[ip] == "true",
        });
    }
    Ok(rows)
}

/// `(t, l, r, mass)` rows.
fn read_interfaces(path: &Path) -> Result<Vec<[f64; 4]>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut row = [0.0; 4];
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = rec
                .get(k)
                .context("short row")?
                .parse()
                .context("bad number")?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Summarises `dir`. A run with `type_ii/` and `type_i/` subdirectories is
/// reported part by part.
pub fn report(dir: &Path, plots: bool) -> Report {
    report_dir(dir, plots, false)
}

fn manifest_lines(dir: &Path, rep: &mut Report) {
    let manifest = dir.join("manifest.cfg");
    match std::fs::read_to_string(&manifest) {
        Ok(text) => {
            let pick = |key: &str| {
                text.lines()
                    .filter_map(|l| l.split_once('='))
                    .find(|(k, _)| k.trim() == key)
                    .map(|(_, v)| v.trim().to_string())
            };
            let mode = pick("mode").unwrap_or_else(|| "?".into());
            let law = ["law.q", "law.m", "law.alpha"]
                .iter()
                .find_map(|k| pick(k).map(|v| format!("{k} = {v}")))
                .unwrap_or_else(|| "law ?".into());
            rep.lines.push(format!("run: mode {mode}, {law}"));
            if let Some(status) = text.lines().find_map(|l| l.strip_prefix("# status: ")) {
                rep.lines.push(format!("status: {status}"));
            }
        }
        Err(_) => rep.warnings.push(format!("missing {}", manifest.display())),
    }
}

fn report_dir(dir: &Path, plots: bool, nested: bool) -> Report {
    let mut rep = Report::default();
    let parts: Vec<_> = ["type_ii", "type_i"]
        .iter()
        .map(|p| dir.join(p))
        .filter(|p| p.is_dir())
        .collect();
    if !parts.is_empty() && !dir.join("rates.csv").exists() {
        manifest_lines(dir, &mut rep);
        for part in parts {
            let name = part.file_name().unwrap_or_default().to_string_lossy().to_string();
            let sub = report_dir(&part, plots, true);
            rep.lines.extend(sub.lines.into_iter().map(|l| format!("[{name}] {l}")));
            rep.warnings
                .extend(sub.warnings.into_iter().map(|l| format!("[{name}] {l}")));
        }
        return rep;
    }

    if !nested {
        manifest_lines(dir, &mut rep);
    }

    let rates_path = dir.join("rates.csv");
    let checks = dir.join("checks.csv");
    if rates_path.exists() {
        match read_rates(&rates_path) {
            Ok(rows) if rows.is_empty() => rep.warnings.push("rates.csv has no fits".into()),
            Ok(rows) => {
                for r in rows {
                    let target = r.target.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into());
                    let err = r
                        .rel_error
                        .map(|e| format!("{:.2}%", 100.0 * e))
                        .unwrap_or_else(|| "-".into());
                    rep.lines.push(format!(
                        "{} ({}): fitted {:.4} vs target {target}, rel err {err}, tol {:.0}% {}",
                        r.quantity,
                        r.kind,
                        r.exponent,
                        100.0 * r.tolerance,
                        if r.pass { "PASS" } else { "FAIL" }
                    ));
                    if let Some(t) = r.origin {
                        rep.lines.push(format!("  extinction time T_est = {t:.6}"));
                    }
                }
            }
            Err(e) => rep.warnings.push(format!("cannot read rates.csv: {e:#}")),
        }
    } else if !checks.exists() {
        rep.warnings.push(format!("missing {}", rates_path.display()));
    }

    if checks.exists() {
        if let Ok(mut r) = csv::Reader::from_path(&checks) {
            for rec in r.records().flatten() {
                if rec.len() >= 4 {
                    let pass = if &rec[3] == "true" { "PASS" } else { "FAIL" };
                    rep.lines
                        .push(format!("check {} = {} (tol {}) {pass}", &rec[0], &rec[1], &rec[2]));
                }
            }
        }
    }

    let if_path = dir.join("interfaces.csv");
    if if_path.exists() {
        match read_interfaces(&if_path) {
            Ok(rows) if !rows.is_empty() => {
                let first = rows[0];
                let last = rows[rows.len() - 1];
                rep.lines.push(format!(
                    "mass {:.6e} at t = {} to {:.6e} at t = {}; interfaces [{:.6}, {:.6}] to [{:.6}, {:.6}]",
                    first[3], first[0], last[3], last[0], first[1], first[2], last[1], last[2]
                ));
                if plots {
                    let mass: Vec<_> = rows.iter().map(|r| (r[0], r[3])).collect();
                    let l: Vec<_> = rows.iter().map(|r| (r[0], r[1])).collect();
                    let rr: Vec<_> = rows.iter().map(|r| (r[0], r[2])).collect();
                    let svg = dir.join("report.svg");
                    match plot::report_plot(&svg, &mass, &l, &rr) {
                        Ok(()) => rep.lines.push(format!("plot: {}", svg.display())),
                        Err(e) => rep.warnings.push(format!("no report plot: {e:#}")),
                    }
                }
            }
            Ok(_) => rep.warnings.push("interfaces.csv is empty".into()),
            Err(e) => rep.warnings.push(format!("cannot read interfaces.csv: {e:#}")),
        }
    } else if !checks.exists() {
        rep.warnings.push(format!("missing {}", if_path.display()));
    }
    rep
}
