//! Static SVG line plots of diagnostic channels.

use std::path::Path;

use plotters::prelude::*;

use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Error, Result};

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Plots one channel against `t`; channels that stay positive use a
/// logarithmic axis. The caption carries the scenario hash and seed.
pub fn plot_channel(series: &DiagnosticsSeries, channel: &str, path: &Path) -> Result<()> {
    let t = series.times();
    let y = series
        .channel(channel)
        .ok_or_else(|| Error::Validation(format!("no channel {channel:?}")))?;
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, v)| v.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    if pts.is_empty() {
        return Err(Error::Validation(format!(
            "channel {channel:?} has no finite values"
        )));
    }
    let t0 = pts.first().map(|p| p.0).unwrap_or(0.0);
    let t1 = pts.last().map(|p| p.0).unwrap_or(1.0).max(t0 + 1e-12);
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let caption = format!(
        "{channel} (config {}, seed {})",
        series.config_hash(),
        series.seed()
    );
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(caption, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(80);
    if lo > 0.0 && hi / lo > 100.0 {
        let mut chart = builder
            .build_cartesian_2d(t0..t1, (lo * 0.9..hi * 1.1).log_scale())
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("t")
            .y_desc(channel)
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(pts, &BLUE))
            .map_err(plot_err)?;
    } else {
        let pad = if hi > lo {
            0.05 * (hi - lo)
        } else {
            0.5 * hi.abs().max(1e-12)
        };
        let mut chart = builder
            .build_cartesian_2d(t0..t1, (lo - pad)..(hi + pad))
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("t")
            .y_desc(channel)
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(pts, &BLUE))
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}
