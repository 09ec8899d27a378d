//! CSV artifacts. Every float is written with 17 significant digits so that
//! identical runs produce identical bytes.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use steepfront::RateFit;

pub const PROFILES_HEADER: [&str; 3] = ["t", "x", "u"];
pub const INTERFACES_HEADER: [&str; 4] = ["t", "l", "r", "mass"];
pub const RATES_HEADER: [&str; 13] = [
    "quantity",
    "kind",
    "exponent",
    "amplitude",
    "window_lo",
    "window_hi",
    "origin",
    "n_points",
    "rms_residual",
    "target",
    "rel_error",
    "tolerance",
    "pass",
];

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

/// Writes `header` and `rows` of floats.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// A fitted rate with the tolerance it is judged against.
#[derive(Debug, Clone)]
pub struct RateRecord {
    pub quantity: String,
    pub fit: RateFit<f64>,
    pub tolerance: f64,
}

impl RateRecord {
    pub fn new(quantity: impl Into<String>, fit: RateFit<f64>, tolerance: f64) -> Self {
        Self {
            quantity: quantity.into(),
            fit,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.fit.within(self.tolerance)
    }
}

pub fn write_rates(path: &Path, records: &[RateRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RATES_HEADER)?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in records {
        let f = &r.fit;
        w.write_record([
            r.quantity.clone(),
            f.kind.as_str().to_string(),
            num(f.exponent),
            num(f.amplitude),
            num(f.window.0),
            num(f.window.1),
            opt(f.origin),
            f.n_points.to_string(),
            num(f.rms_residual),
            opt(f.target),
            opt(f.relative_error()),
            num(r.tolerance),
            r.pass().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
