//! SVG line and scatter plots from the per-cell CSVs.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

/// `(step, mean, std)` rows of a curve CSV.
pub fn read_curve(csv_path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Plot(format!("{}: missing column {name:?}", csv_path.display()))
        })
    };
    let (step, mean, std) = (col("step")?, col("mean")?, col("std")?);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Plot(format!("{}: bad number in row", csv_path.display())))
        };
        rows.push((num(step)?, num(mean)?, num(std)?));
    }
    if rows.is_empty() {
        return Err(Error::Plot(format!("{}: no data rows", csv_path.display())));
    }
    Ok(rows)
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Mean line with a ±1 std band and an optional dashed vertical marker at `marker_x`.
pub fn plot_curve(
    csv_path: &Path,
    out: &Path,
    title: &str,
    y_label: &str,
    marker_x: Option<f64>,
) -> Result<()> {
    let rows = read_curve(csv_path)?;
    let x_min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let mut x_max = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    if let Some(m) = marker_x {
        x_max = x_max.max(m);
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let mut y_min = rows.iter().map(|r| r.1 - r.2).fold(f64::INFINITY, f64::min);
    let mut y_max = rows.iter().map(|r| r.1 + r.2).fold(f64::NEG_INFINITY, f64::max);
    let pad = ((y_max - y_min) * 0.05).max(1e-3);
    y_min -= pad;
    y_max += pad;

    let root = SVGBackend::new(out, (640, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(52)
        .build_cartesian_2d(x_min..x_max, y_min..y_max)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("step")
        .y_desc(y_label)
        .draw()
        .map_err(plot_err)?;

    let band: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.0, r.1 + r.2))
        .chain(rows.iter().rev().map(|r| (r.0, r.1 - r.2)))
        .collect();
    chart
        .draw_series(std::iter::once(Polygon::new(band, BLUE.mix(0.2).filled())))
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(rows.iter().map(|r| (r.0, r.1)), &BLUE))
        .map_err(plot_err)?;
    if let Some(m) = marker_x {
        chart
            .draw_series(DashedLineSeries::new(
                vec![(m, y_min), (m, y_max)],
                6,
                4,
                ShapeStyle::from(&RGBColor(128, 128, 128)).stroke_width(1),
            ))
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Scatter of `x,y,step,category` rows: initial black, precedent red, successor blue.
pub fn plot_scatter(csv_path: &Path, out: &Path, title: &str) -> Result<()> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Plot(format!("{}: missing column {name:?}", csv_path.display()))
        })
    };
    let (xc, yc, cc) = (col("x")?, col("y")?, col("category")?);
    let mut points: Vec<(f64, f64, String)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| {
            record
                .get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Plot(format!("{}: bad number in row", csv_path.display())))
        };
        points.push((num(xc)?, num(yc)?, record.get(cc).unwrap_or("").to_string()));
    }
    if points.is_empty() {
        return Err(Error::Plot(format!("{}: no data rows", csv_path.display())));
    }
    let bounds = |f: fn(&(f64, f64, String)) -> f64| {
        let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.05).max(1e-3);
        (lo - pad)..(hi + pad)
    };
    let root = SVGBackend::new(out, (520, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(30)
        .y_label_area_size(40)
        .build_cartesian_2d(bounds(|p| p.0), bounds(|p| p.1))
        .map_err(plot_err)?;
    chart.configure_mesh().draw().map_err(plot_err)?;
    for (label, color) in [("initial", BLACK), ("precedent", RED), ("successor", BLUE)] {
        chart
            .draw_series(
                points
                    .iter()
                    .filter(|p| p.2 == label)
                    .map(|p| Circle::new((p.0, p.1), 2, color.mix(0.6).filled())),
            )
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}
