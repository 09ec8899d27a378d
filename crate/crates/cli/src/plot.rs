//! SVG figures. These are qualitative; the CSV files carry the numbers.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::coord::Shift;
use plotters::prelude::*;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

pub struct Curve<'a> {
    pub label: String,
    pub points: &'a [(f64, f64)],
}

fn color(i: usize) -> RGBColor {
    PALETTE[i % PALETTE.len()]
}

fn bounds<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> Option<((f64, f64), (f64, f64))> {
    let mut b: Option<((f64, f64), (f64, f64))> = None;
    for &(x, y) in pts {
        if !x.is_finite() || !y.is_finite() {
            continue;
        }
        b = Some(match b {
            None => ((x, x), (y, y)),
            Some(((x0, x1), (y0, y1))) => ((x0.min(x), x1.max(x)), (y0.min(y), y1.max(y))),
        });
    }
    b
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("plotting failed: {e}")
}

/// Profiles `u(x)` with vertical interface markers at `markers`.
pub fn profile_plot(path: &Path, title: &str, curves: &[Curve], markers: &[f64]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let all = curves.iter().flat_map(|c| c.points.iter());
    let ((x0, x1), _) = bounds(all).ok_or_else(|| anyhow!("nothing to plot"))?;
    let (x0, x1) = pad((
        markers.iter().copied().fold(x0, f64::min),
        markers.iter().copied().fold(x1, f64::max),
    ));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(x0..x1, -0.05..1.05)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc("x")
        .y_desc("u")
        .draw()
        .map_err(err)?;
    for (i, c) in curves.iter().enumerate() {
        let col = color(i);
        chart
            .draw_series(LineSeries::new(c.points.iter().copied(), col.stroke_width(2)))
            .map_err(err)?
            .label(c.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], col));
    }
    for &m in markers {
        chart
            .draw_series(LineSeries::new(vec![(m, 0.0), (m, 1.0)], BLACK.mix(0.5)))
            .map_err(err)?;
    }
    if curves.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(err)?;
    }
    root.present().map_err(err)?;
    Ok(())
}

/// A plain `y(x)` chart, optionally with a logarithmic `y` axis.
fn xy_panel(
    area: &DrawingArea<SVGBackend, Shift>,
    title: &str,
    labels: (&str, &str),
    curves: &[Curve],
    log_y: bool,
) -> Result<()> {
    let keep = |p: &&(f64, f64)| !log_y || p.1 > 0.0;
    let all = curves.iter().flat_map(|c| c.points.iter().filter(keep));
    let Some((xr, yr)) = bounds(all) else {
        area.titled(&format!("{title} (no data)"), ("sans-serif", 18))
            .map_err(err)?;
        return Ok(());
    };
    let xr = pad(xr);
    let mut builder = ChartBuilder::on(area);
    builder
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(64);
    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart
                .configure_mesh()
                .x_desc(labels.0)
                .y_desc(labels.1)
                .draw()
                .map_err(err)?;
            for (i, c) in curves.iter().enumerate() {
                let col = color(i);
                chart
                    .draw_series(LineSeries::new(
                        c.points.iter().filter(keep).copied(),
                        col.stroke_width(2),
                    ))
                    .map_err(err)?
                    .label(c.label.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], col));
            }
            if curves.len() > 1 {
                chart
                    .configure_series_labels()
                    .background_style(WHITE.mix(0.8))
                    .border_style(BLACK)
                    .draw()
                    .map_err(err)?;
            }
        }};
    }
    if log_y {
        let (lo, hi) = yr;
        let hi = if hi > lo { hi } else { lo * 10.0 };
        draw!(builder
            .build_cartesian_2d(xr.0..xr.1, (lo..hi).log_scale())
            .map_err(err)?);
    } else {
        let yr = pad(yr);
        draw!(builder.build_cartesian_2d(xr.0..xr.1, yr.0..yr.1).map_err(err)?);
    }
    Ok(())
}

pub fn xy_plot(path: &Path, title: &str, labels: (&str, &str), curves: &[Curve]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    xy_panel(&root, title, labels, curves, false)?;
    root.present().map_err(err)?;
    Ok(())
}

/// Two side-by-side panels: mass decay on a log axis and the interface funnel.
pub fn report_plot(path: &Path, mass: &[(f64, f64)], left: &[(f64, f64)], right: &[(f64, f64)]) -> Result<()> {
    let root = SVGBackend::new(path, (1200, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let (a, b) = root.split_horizontally(600);
    xy_panel(
        &a,
        "mass decay",
        ("t", "mass"),
        &[Curve {
            label: "mass".into(),
            points: mass,
        }],
        true,
    )?;
    xy_panel(
        &b,
        "interfaces",
        ("t", "x"),
        &[
            Curve {
                label: "l(t)".into(),
                points: left,
            },
            Curve {
                label: "r(t)".into(),
                points: right,
            },
        ],
        false,
    )?;
    root.present().map_err(err)?;
    Ok(())
}
