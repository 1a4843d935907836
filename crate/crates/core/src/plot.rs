//! Minimal standalone SVG line plots: one stacked panel per series, one
//! polyline per channel.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Trajectory, WeightSeries};

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 160.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 24.0;
const PANEL_GAP: f64 = 36.0;
/// Stroke per channel: thin black, thick gray, then lighter variants.
const STROKES: [(&str, f64); 4] = [("#000000", 1.0), ("#9a9a9a", 3.0), ("#555555", 1.0), ("#c8c8c8", 3.0)];

/// One panel's worth of channels on a shared time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub dt: f64,
    pub channels: Vec<Vec<f64>>,
    /// Samples drawn as gaps when `false`.
    pub valid: Option<Vec<bool>>,
}

impl PlotSeries {
    pub fn from_trajectory(label: impl Into<String>, traj: &Trajectory) -> Self {
        Self {
            label: label.into(),
            dt: traj.dt(),
            channels: (0..traj.dim()).map(|i| traj.channel(i)).collect(),
            valid: None,
        }
    }

    pub fn from_weights(label: impl Into<String>, w: &WeightSeries) -> Self {
        Self {
            label: label.into(),
            dt: w.dt(),
            channels: (0..w.dim()).map(|i| w.channel(i)).collect(),
            valid: Some(w.valid_mask().to_vec()),
        }
    }

    fn len(&self) -> usize {
        self.channels.iter().map(Vec::len).min().unwrap_or(0)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the samples in `window` of every series as an SVG document.
pub fn render_svg(series: &[PlotSeries], window: Range<usize>) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty plot window".into()));
    }
    if let Some(s) = series.iter().find(|s| s.channels.is_empty() || window.end > s.len()) {
        return Err(Error::InvalidArgument(format!(
            "window {}..{} exceeds series '{}' of length {}",
            window.start,
            window.end,
            s.label,
            s.len()
        )));
    }
    let height = MARGIN_TOP + series.len() as f64 * (PANEL_HEIGHT + PANEL_GAP);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, s) in series.iter().enumerate() {
        let top = MARGIN_TOP + p as f64 * (PANEL_HEIGHT + PANEL_GAP);
        let is_valid = |k: usize| s.valid.as_ref().is_none_or(|v| v[k]);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in &s.channels {
            for k in window.clone().filter(|&k| is_valid(k)) {
                lo = lo.min(c[k]);
                hi = hi.max(c[k]);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (-1.0, 1.0);
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            (lo, hi) = (lo - 1.0, hi + 1.0);
        }
        let pad = 0.05 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let x_of = |k: usize| {
            let span = (window.len() - 1).max(1) as f64;
            MARGIN_LEFT + plot_w * (k - window.start) as f64 / span
        };
        let y_of = |v: f64| top + PANEL_HEIGHT * (hi - v) / (hi - lo);
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="#000000" stroke-width="0.5"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{MARGIN_LEFT}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            top - 6.0,
            escape(&s.label)
        );
        let t0 = window.start as f64 * s.dt;
        let t1 = (window.end - 1) as f64 * s.dt;
        let axis_y = top + PANEL_HEIGHT + 14.0;
        let _ = writeln!(
            svg,
            r#"<text x="{MARGIN_LEFT}" y="{axis_y:.1}" font-family="sans-serif" font-size="10">{t0:.4} s</text>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{axis_y:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{t1:.4} s</text>"#,
            WIDTH - MARGIN_RIGHT
        );
        for (v, y) in [
            (hi - pad, top + PANEL_HEIGHT * pad / (hi - lo)),
            (lo + pad, top + PANEL_HEIGHT * (hi - lo - pad) / (hi - lo)),
        ] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 4.0,
                y + 3.0,
                format_tick(v)
            );
        }
        if lo < 0.0 && hi > 0.0 {
            let y0 = y_of(0.0);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT}" y1="{y0:.2}" x2="{:.1}" y2="{y0:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
                WIDTH - MARGIN_RIGHT
            );
        }
        // thick strokes underneath thin ones
        let mut order: Vec<usize> = (0..s.channels.len()).collect();
        order.sort_by(|&a, &b| {
            let wa = STROKES[a % STROKES.len()].1;
            let wb = STROKES[b % STROKES.len()].1;
            wb.total_cmp(&wa).then(a.cmp(&b))
        });
        for c in order {
            let (color, width) = STROKES[c % STROKES.len()];
            let mut runs: Vec<Vec<usize>> = vec![Vec::new()];
            for k in window.clone() {
                if is_valid(k) {
                    runs.last_mut().expect("non-empty").push(k);
                } else if !runs.last().expect("non-empty").is_empty() {
                    runs.push(Vec::new());
                }
            }
            for run in runs.iter().filter(|r| !r.is_empty()) {
                let points: Vec<String> = run
                    .iter()
                    .map(|&k| format!("{:.2},{:.2}", x_of(k), y_of(s.channels[c][k])))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
                    points.join(" ")
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn plot_svg(series: &[PlotSeries], window: Range<usize>, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(series, window)?;
    std::fs::write(path.as_ref(), svg).map_err(|source| Error::File {
        path: path.as_ref().to_path_buf(),
        source,
    })
}
