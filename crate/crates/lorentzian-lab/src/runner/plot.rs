//! Static SVG figures.

use crate::error::{Error, Result};
use plotters::prelude::*;
use std::path::Path;

fn perr<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> Error + '_ {
    move |e| Error::Io(std::io::Error::other(format!("plotting {}: {e}", path.display())))
}

const PALETTE: [RGBColor; 5] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189), RGBColor(255, 127, 14)];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series], log_y: bool) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, if log_y { 1e-16 } else { 0.0 }, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if log_y {
        (x0, x1, y0 / 2.0, y1 * 2.0)
    } else {
        let pad = 0.05 * (y1 - y0).max(1e-300);
        (x0, x1, y0 - pad, y1 + pad)
    }
}

/// Line plot with markers; `log_y` switches to a logarithmic ordinate.
pub fn line_plot(path: &Path, title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> Result<()> {
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(perr(path))?;
    let (x0, x1, y0, y1) = bounds(series, log_y);
    let mut b = ChartBuilder::on(&root);
    b.caption(title, ("sans-serif", 18)).margin(12).x_label_area_size(40).y_label_area_size(70);
    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart.configure_mesh().x_desc(xlabel).y_desc(ylabel).draw().map_err(perr(path))?;
            for (i, s) in series.iter().enumerate() {
                let col = PALETTE[i % PALETTE.len()];
                let pts: Vec<(f64, f64)> = s.points.iter().cloned().filter(|p| !log_y || p.1 > 0.0).collect();
                chart
                    .draw_series(LineSeries::new(pts.clone(), col.stroke_width(2)))
                    .map_err(perr(path))?
                    .label(s.label)
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], col.stroke_width(2)));
                chart.draw_series(pts.iter().map(|p| Circle::new(*p, 3, col.filled()))).map_err(perr(path))?;
            }
            chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(perr(path))?;
        }};
    }
    if log_y {
        draw!(b.build_cartesian_2d(x0..x1, (y0..y1).log_scale()).map_err(perr(path))?);
    } else {
        draw!(b.build_cartesian_2d(x0..x1, y0..y1).map_err(perr(path))?);
    }
    root.present().map_err(perr(path))?;
    Ok(())
}

/// Heat map of `values[iy][ix]` (log10 colour scale) on `[x0,x1]×[y0,y1]`,
/// with optional polylines drawn on top. Large arrays are block-averaged to
/// at most 160 cells per side.
pub fn heatmap(path: &Path, title: &str, labels: (&str, &str), values: &[Vec<f64>], xr: (f64, f64), yr: (f64, f64), overlays: &[Series]) -> Result<()> {
    let ny = values.len();
    let nx = values.first().map_or(0, |r| r.len());
    if nx == 0 || ny == 0 {
        return Err(crate::error::invalid("empty heat map"));
    }
    let bx = nx.div_ceil(160);
    let by = ny.div_ceil(160);
    let (cx, cy) = (nx.div_ceil(bx), ny.div_ceil(by));
    let mut cells = vec![vec![0.0f64; cx]; cy];
    for (iy, row) in values.iter().enumerate() {
        for (ix, v) in row.iter().enumerate() {
            cells[iy / by][ix / bx] += v.abs() / (bx * by) as f64;
        }
    }
    let vmax = cells.iter().flatten().cloned().fold(0.0, f64::max).max(1e-300);
    let floor = vmax * 1e-8;
    let root = SVGBackend::new(path, (720, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(perr(path))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)
        .map_err(perr(path))?;
    chart.configure_mesh().disable_mesh().x_desc(labels.0).y_desc(labels.1).draw().map_err(perr(path))?;
    let dx = (xr.1 - xr.0) / cx as f64;
    let dy = (yr.1 - yr.0) / cy as f64;
    chart
        .draw_series(cells.iter().enumerate().flat_map(|(iy, row)| {
            row.iter().enumerate().map(move |(ix, v)| {
                let s = ((v.max(floor) / vmax).log10() / 8.0 + 1.0).clamp(0.0, 1.0);
                let col = ramp(s);
                let x = xr.0 + ix as f64 * dx;
                let y = yr.0 + iy as f64 * dy;
                Rectangle::new([(x, y), (x + dx, y + dy)], col.filled())
            })
        }))
        .map_err(perr(path))?;
    for (i, s) in overlays.iter().enumerate() {
        let col = [WHITE, RED, MAGENTA][i % 3];
        chart
            .draw_series(LineSeries::new(s.points.clone(), col.stroke_width(2)))
            .map_err(perr(path))?
            .label(s.label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], col.stroke_width(2)));
    }
    if !overlays.is_empty() {
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(perr(path))?;
    }
    root.present().map_err(perr(path))?;
    Ok(())
}

/// Dark blue → teal → yellow.
fn ramp(s: f64) -> RGBColor {
    let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let x = s * 2.0;
    let i = (x.floor() as usize).min(1);
    let f = x - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    RGBColor(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}
