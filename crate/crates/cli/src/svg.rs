//! Minimal standalone SVG plots: fixed 800×600 canvas, 12pt labels.

use std::fmt::Write as _;
use std::path::Path;

use rankregime_core::metrics::LazinessReport;
use rankregime_core::tensor::EigenSpectrum;

use crate::error::{io, Result};
use crate::report::field_value;
use crate::stats::median;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    /// One circle per run.
    Point,
    /// A larger diamond per setting.
    Median,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub marker: Marker,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn points(label: &str, color_index: usize, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.to_string(),
            color: PALETTE[color_index % PALETTE.len()],
            marker: Marker::Point,
            points,
        }
    }

    pub fn medians(label: &str, color_index: usize, points: Vec<(f64, f64)>) -> Self {
        Series {
            marker: Marker::Median,
            ..Series::points(label, color_index, points)
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Axis range with a 5% margin; an empty range is padded symmetrically.
pub fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, lo + pad)
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders a scatter plot of all series.
pub fn render_xy(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = padded_range(fold(|p| p.0).0, fold(|p| p.0).1);
    let (y0, y1) = padded_range(fold(|p| p.1).0, fold(|p| p.1).1);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-size="14pt" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=TICKS {
        let f = k as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="12pt" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 6.0,
            TOP + ph + 24.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="12pt" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            LEFT - 9.0,
            py + 5.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12pt" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-size="12pt" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for series in series {
        for &(x, y) in series.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let (px, py) = (sx(x), sy(y));
            match series.marker {
                Marker::Point => {
                    let _ = writeln!(
                        s,
                        r#"<circle class="point" cx="{px:.2}" cy="{py:.2}" r="4" fill="{}" fill-opacity="0.55"/>"#,
                        series.color
                    );
                }
                Marker::Median => {
                    let _ = writeln!(
                        s,
                        r#"<path class="median" d="M {px:.2} {:.2} L {:.2} {py:.2} L {px:.2} {:.2} L {:.2} {py:.2} Z" fill="{}" stroke="black"/>"#,
                        py - 7.0,
                        px + 7.0,
                        py + 7.0,
                        px - 7.0,
                        series.color
                    );
                }
            }
        }
    }
    let mut ly = TOP + 10.0;
    let lx = WIDTH - RIGHT + 15.0;
    for series in series.iter().filter(|s| !s.points.is_empty()) {
        let shape = match series.marker {
            Marker::Point => format!(r#"<circle cx="{lx}" cy="{ly}" r="4" fill="{}"/>"#, series.color),
            Marker::Median => format!(
                r#"<rect x="{}" y="{}" width="9" height="9" fill="{}" stroke="black"/>"#,
                lx - 4.5,
                ly - 4.5,
                series.color
            ),
        };
        let _ = writeln!(
            s,
            r#"<g class="legend">{shape}<text x="{}" y="{}" font-size="12pt">{}</text></g>"#,
            lx + 12.0,
            ly + 5.0,
            escape(&series.label)
        );
        ly += 20.0;
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_xy_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], path: &Path) -> Result<()> {
    std::fs::write(path, render_xy(title, x_label, y_label, series)).map_err(|e| io(path, e))
}

/// Per-seed points and per-setting medians of `y_field` against `x_field`.
/// A setting is an `(init_kind, rank_param, norm_control)` combination;
/// colors follow the init kind.
pub fn scatter_series(reports: &[LazinessReport], x_field: &str, y_field: &str) -> Result<Vec<Series>> {
    // Validate field names even when there are no rows.
    if let Some(r) = reports.first() {
        field_value(r, x_field)?;
        field_value(r, y_field)?;
    } else {
        let dummy = LazinessReport::failed(Default::default(), "");
        field_value(&dummy, x_field)?;
        field_value(&dummy, y_field)?;
    }
    let mut kinds: Vec<&str> = Vec::new();
    let mut settings: Vec<(&str, Option<u64>, &str, Vec<(f64, f64)>)> = Vec::new();
    for r in reports {
        let kind = r.meta.init_kind.as_str();
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
        let key = (kind, r.meta.rank_param.map(f64::to_bits), r.meta.norm_control.as_str());
        let (Some(x), Some(y)) = (field_value(r, x_field)?, field_value(r, y_field)?) else {
            continue;
        };
        match settings.iter_mut().find(|s| (s.0, s.1, s.2) == key) {
            Some(s) => s.3.push((x, y)),
            None => settings.push((key.0, key.1, key.2, vec![(x, y)])),
        }
    }
    let mut out = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let mine: Vec<_> = settings.iter().filter(|s| s.0 == *kind).collect();
        let points: Vec<(f64, f64)> = mine.iter().flat_map(|s| s.3.iter().copied()).collect();
        let medians: Vec<(f64, f64)> = mine
            .iter()
            .filter_map(|s| {
                let xs: Vec<f64> = s.3.iter().map(|p| p.0).collect();
                let ys: Vec<f64> = s.3.iter().map(|p| p.1).collect();
                Some((median(&xs)?, median(&ys)?))
            })
            .collect();
        out.push(Series::points(kind, k, points));
        out.push(Series::medians(&format!("{kind} median"), k, medians));
    }
    Ok(out)
}

pub fn emit_svg_scatter(reports: &[LazinessReport], x_field: &str, y_field: &str, path: &Path) -> Result<()> {
    let series = scatter_series(reports, x_field, y_field)?;
    write_xy_svg(&format!("{y_field} vs {x_field}"), x_field, y_field, &series, path)
}

/// `(i/N, |λ_i|/|λ₁|)` for `i = 1..`, eigenvalues in descending modulus.
pub fn spectrum_points(spectrum: &EigenSpectrum, n: usize) -> Vec<(f64, f64)> {
    let lead = spectrum.leading_modulus();
    spectrum
        .moduli()
        .iter()
        .enumerate()
        .map(|(i, m)| ((i + 1) as f64 / n as f64, if lead > 0.0 { m / lead } else { 0.0 }))
        .collect()
}

pub fn write_spectrum_svg(series: &[Series], path: &Path) -> Result<()> {
    write_xy_svg("Eigenvalue spectrum", "i / N", "|λ_i| / |λ_1|", series, path)
}
