//! Minimal SVG plots of run artifacts.

use std::path::Path;

use plotters::prelude::*;

use crate::caf::CafSurface;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const SIZE: (u32, u32) = (800, 500);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .map(|(lo, hi)| if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) })
}

pub fn lines(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_y: bool,
) -> Result<(), String> {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = bounds(pts().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let ys = pts().map(|p| p.1).filter(|&y| !log_y || y > 0.0);
    let (y0, y1) = bounds(ys).unwrap_or((1e-3, 1.0));

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70);

    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart
                .configure_mesh()
                .x_desc(x_label)
                .y_desc(y_label)
                .draw()
                .map_err(err)?;
            for (i, s) in series.iter().enumerate() {
                let color = Palette99::pick(i).to_rgba();
                let data = s
                    .points
                    .iter()
                    .copied()
                    .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0));
                chart
                    .draw_series(LineSeries::new(data, color.stroke_width(2)))
                    .map_err(err)?
                    .label(s.label.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
            }
            if series.len() > 1 {
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
        draw!(builder
            .build_cartesian_2d(x0..x1, (y0..y1).log_scale())
            .map_err(err)?);
    } else {
        draw!(builder.build_cartesian_2d(x0..x1, y0..y1).map_err(err)?);
    }
    root.present().map_err(err)
}

/// Delay × Doppler amplitude map, normalized to the surface maximum.
pub fn heatmap(path: &Path, title: &str, surface: &CafSurface) -> Result<(), String> {
    let grid = &surface.grid;
    let max = surface.amplitudes().iter().cloned().fold(0.0, f64::max);
    let norm = if max > 0.0 { max } else { 1.0 };
    let ts_ms = 1e3 / grid.sample_rate;
    let x0 = grid.lag_seconds(0) * 1e3 - ts_ms / 2.0;
    let x1 = grid.lag_seconds(grid.n_lags() - 1) * 1e3 + ts_ms / 2.0;
    let nd = grid.n_doppler();

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, 0f64..nd as f64)
        .map_err(err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("delay [ms]")
        .y_desc("Doppler bin")
        .draw()
        .map_err(err)?;
    chart
        .draw_series(surface.cells().map(|(li, di, a)| {
            let x = grid.lag_seconds(li) * 1e3;
            let shade = (a / norm).clamp(0.0, 1.0);
            let color = HSLColor(0.66 * (1.0 - shade), 0.9, 0.15 + 0.45 * shade);
            Rectangle::new(
                [(x - ts_ms / 2.0, di as f64), (x + ts_ms / 2.0, di as f64 + 1.0)],
                color.filled(),
            )
        }))
        .map_err(err)?;
    root.present().map_err(err)
}
