//! Standalone SVG figures.
//!
//! Coordinates are written with three decimals. The box plot declares its
//! linear x mapping on the root element (`data-x0`, `data-x-scale`) so the
//! drawn geometry can be checked against the summary values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DetectorSummary;
use crate::protocol::RepeatabilityRecord;

/// Pixel x of repeatability 0 in the box plot.
pub const BOX_X0: f64 = 160.0;
/// Pixels per unit of repeatability in the box plot.
pub const BOX_X_SCALE: f64 = 600.0;

const ROW_HEIGHT: f64 = 28.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;

const N_MARKER_FILLS: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn header(out: &mut String, width: f64, height: f64, extra: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}"{extra}>"#
    );
    out.push_str(
        "<style>text{font-family:sans-serif;font-size:11px}.box{fill:#dde6f2;stroke:#224;stroke-width:1}\
         .whisker{stroke:#224;stroke-width:1.2}.median{stroke:#c00;stroke-width:2}.mean{stroke:#000;stroke-width:1.5}\
         .axis{stroke:#444;stroke-width:1}.grid{stroke:#ccc;stroke-width:0.5}.diagonal{stroke:#888;stroke-dasharray:4 3}\
         .point{fill:#2060c0;fill-opacity:0.6}.series{fill:none;stroke-width:1.5}</style>\n",
    );
}

/// Whisker dash pattern by invariance class, read from the name suffix.
fn whisker_dash(detector: &str) -> Option<&'static str> {
    if detector.ends_with("-T") {
        Some("1 3")
    } else if detector.ends_with("-S") {
        Some("6 3 1 3")
    } else if detector.ends_with("-A") {
        Some("6 4")
    } else {
        None
    }
}

/// Box-and-whisker plot with repeatability on x and one row per detector,
/// in input order: box p25 to p75, whiskers p10 to p90, median line, mean
/// cross and one marker per detection budget.
pub fn emit_box_whisker(summaries: &[DetectorSummary]) -> String {
    let px = |v: f64| BOX_X0 + BOX_X_SCALE * v;
    let width = BOX_X0 + BOX_X_SCALE + 40.0;
    let height = TOP + BOTTOM + ROW_HEIGHT * summaries.len() as f64;
    let axis_y = TOP + ROW_HEIGHT * summaries.len() as f64;
    let budgets: BTreeSet<usize> = summaries.iter().flat_map(|s| s.rep_by_n.keys().copied()).collect();
    let fill: BTreeMap<usize, &str> = budgets
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, N_MARKER_FILLS[i % N_MARKER_FILLS.len()]))
        .collect();

    let mut out = String::new();
    header(
        &mut out,
        width,
        height,
        &format!(r#" data-x0="{BOX_X0:.3}" data-x-scale="{BOX_X_SCALE:.3}""#),
    );
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let _ = writeln!(
            out,
            r#"<line class="grid" x1="{x:.3}" y1="{TOP:.3}" x2="{x:.3}" y2="{axis_y:.3}"/><text x="{x:.3}" y="{ty:.3}" text-anchor="middle">{v:.1}</text>"#,
            x = px(v),
            ty = axis_y + 14.0,
        );
    }
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{:.3}" y1="{axis_y:.3}" x2="{:.3}" y2="{axis_y:.3}"/><text x="{:.3}" y="{:.3}" text-anchor="middle">repeatability</text>"#,
        px(0.0),
        px(1.0),
        px(0.5),
        axis_y + 30.0,
    );

    for (row, s) in summaries.iter().enumerate() {
        let cy = TOP + ROW_HEIGHT * (row as f64 + 0.5);
        let (y0, y1) = (cy - ROW_HEIGHT * 0.3, cy + ROW_HEIGHT * 0.3);
        let p = &s.percentiles;
        let dash = whisker_dash(&s.detector)
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(out, r#"<g class="detector" data-detector="{}">"#, escape(&s.detector));
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            BOX_X0 - 8.0,
            cy + 4.0,
            escape(&s.detector)
        );
        for (a, b) in [(p.p10, p.p25), (p.p75, p.p90)] {
            let _ = writeln!(
                out,
                r#"<line class="whisker" x1="{:.3}" y1="{cy:.3}" x2="{:.3}" y2="{cy:.3}"{dash}/>"#,
                px(a),
                px(b)
            );
        }
        for v in [p.p10, p.p90] {
            let _ = writeln!(
                out,
                r##"<line class="whisker-cap" x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="#224"/>"##,
                cy - 5.0,
                cy + 5.0,
                x = px(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<rect class="box" x="{:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}"/>"#,
            px(p.p25),
            px(p.p75) - px(p.p25),
            y1 - y0
        );
        let _ = writeln!(
            out,
            r#"<line class="median" x1="{x:.3}" y1="{y0:.3}" x2="{x:.3}" y2="{y1:.3}"/>"#,
            x = px(p.p50)
        );
        let mx = px(s.mean);
        let _ = writeln!(
            out,
            r#"<path class="mean" data-x="{mx:.3}" d="M{:.3} {:.3}L{:.3} {:.3}M{:.3} {:.3}L{:.3} {:.3}"/>"#,
            mx - 4.0,
            cy - 4.0,
            mx + 4.0,
            cy + 4.0,
            mx - 4.0,
            cy + 4.0,
            mx + 4.0,
            cy - 4.0
        );
        for (n, rep) in &s.rep_by_n {
            let _ = writeln!(
                out,
                r#"<circle class="n-marker" data-n="{n}" cx="{:.3}" cy="{:.3}" r="3" fill="{}"/>"#,
                px(*rep),
                y0 - 2.0,
                fill[n]
            );
        }
        out.push_str("</g>\n");
    }

    let mut lx = BOX_X0;
    for (n, color) in &fill {
        let _ = writeln!(
            out,
            r#"<circle cx="{lx:.3}" cy="12.000" r="3" fill="{color}"/><text x="{:.3}" y="16.000">n={n}</text>"#,
            lx + 6.0
        );
        lx += 70.0;
    }
    out.push_str("</svg>\n");
    out
}

fn reps_at(records: &[RepeatabilityRecord], detector: &str, n: usize) -> BTreeMap<String, f64> {
    records
        .iter()
        .filter(|r| r.detector == detector && r.n == n)
        .map(|r| (r.task.clone(), r.rep))
        .collect()
}

/// Grid of per-task scatter plots at budget `n`: rows are `references`
/// (x axis), columns are `detectors` (y axis), with the diagonal drawn.
pub fn emit_scatter_grid(
    records: &[RepeatabilityRecord],
    references: &[String],
    detectors: &[String],
    n: usize,
) -> Result<String> {
    const PANEL: f64 = 180.0;
    const GAP: f64 = 40.0;
    const LEFT: f64 = 60.0;

    let mut panels = Vec::new();
    for reference in references {
        let xs = reps_at(records, reference, n);
        for detector in detectors {
            let ys = reps_at(records, detector, n);
            let missing: Vec<String> = xs.keys().filter(|t| !ys.contains_key(*t)).cloned().collect();
            if !missing.is_empty() {
                return Err(Error::MismatchedCoverage {
                    detector: detector.clone(),
                    reference: reference.clone(),
                    missing,
                });
            }
            let extra: Vec<String> = ys.keys().filter(|t| !xs.contains_key(*t)).cloned().collect();
            if !extra.is_empty() {
                return Err(Error::MismatchedCoverage {
                    detector: reference.clone(),
                    reference: detector.clone(),
                    missing: extra,
                });
            }
            let points: Vec<(String, f64, f64)> = xs.iter().map(|(t, &x)| (t.clone(), x, ys[t])).collect();
            panels.push((reference, detector, points));
        }
    }

    let cols = detectors.len().max(1) as f64;
    let rows = references.len().max(1) as f64;
    let width = LEFT + cols * (PANEL + GAP);
    let height = GAP + rows * (PANEL + GAP);
    let mut out = String::new();
    header(&mut out, width, height, &format!(r#" data-n="{n}""#));
    for (i, (reference, detector, points)) in panels.iter().enumerate() {
        let (r, c) = (i / detectors.len(), i % detectors.len());
        let ox = LEFT + c as f64 * (PANEL + GAP);
        let oy = GAP + r as f64 * (PANEL + GAP);
        let _ = writeln!(
            out,
            r#"<g class="panel" data-reference="{}" data-detector="{}" data-points="{}" transform="translate({ox:.3} {oy:.3})">"#,
            escape(reference),
            escape(detector),
            points.len()
        );
        let _ = writeln!(
            out,
            r##"<rect x="0" y="0" width="{PANEL:.3}" height="{PANEL:.3}" fill="none" stroke="#444"/><line class="diagonal" x1="0" y1="{PANEL:.3}" x2="{PANEL:.3}" y2="0"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text><text x="-8" y="{:.3}" text-anchor="middle" transform="rotate(-90 -8 {:.3})">{}</text>"#,
            PANEL / 2.0,
            PANEL + 14.0,
            escape(reference),
            PANEL / 2.0,
            PANEL / 2.0,
            escape(detector)
        );
        for (task, x, y) in points {
            let _ = writeln!(
                out,
                r#"<circle class="point" data-task="{}" cx="{:.3}" cy="{:.3}" r="1.5"/>"#,
                escape(task),
                x * PANEL,
                (1.0 - y) * PANEL
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Repeatability as a function of the magnification factor for one detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub detector: String,
    /// `(gamma, rep)` in ascending `gamma`.
    pub points: Vec<(f64, f64)>,
}

impl SweepSeries {
    /// Max minus min repeatability over the sweep.
    pub fn spread(&self) -> f64 {
        let reps = self.points.iter().map(|p| p.1);
        reps.clone().fold(f64::NEG_INFINITY, f64::max) - reps.fold(f64::INFINITY, f64::min)
    }
}

/// Line chart of repeatability against `log2(gamma)`; a series with a
/// single point is drawn as a marker only.
pub fn emit_sweep(series: &[SweepSeries]) -> String {
    const LEFT: f64 = 60.0;
    const PLOT_W: f64 = 520.0;
    const PLOT_H: f64 = 300.0;
    const PLOT_TOP: f64 = 20.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

    let logs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0.log2()))
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let px = |gamma: f64| {
        if !(hi > lo) {
            LEFT + PLOT_W / 2.0
        } else {
            LEFT + PLOT_W * (gamma.log2() - lo) / (hi - lo)
        }
    };
    let py = |rep: f64| PLOT_TOP + PLOT_H * (1.0 - rep);
    let legend_top = PLOT_TOP + PLOT_H + 40.0;
    let width = LEFT + PLOT_W + 30.0;
    let height = legend_top + 16.0 * series.len() as f64 + 10.0;

    let mut out = String::new();
    header(&mut out, width, height, r#" data-x-axis="log2""#);
    let _ = writeln!(
        out,
        r#"<rect class="axis" x="{LEFT:.3}" y="{PLOT_TOP:.3}" width="{PLOT_W:.3}" height="{PLOT_H:.3}" fill="none"/>"#
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            py(v) + 4.0
        );
    }
    let gammas: BTreeSet<u64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0.to_bits()))
        .collect();
    for g in gammas.into_iter().map(f64::from_bits) {
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{g}</text>"#,
            px(g),
            PLOT_TOP + PLOT_H + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">magnification factor (log scale)</text>"#,
        LEFT + PLOT_W / 2.0,
        PLOT_TOP + PLOT_H + 30.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<g class="sweep" data-detector="{}">"#, escape(&s.detector));
        if s.points.len() >= 2 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(g, r)| format!("{:.3},{:.3}", px(g), py(r)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="series" stroke="{color}" points="{}"/>"#,
                pts.join(" ")
            );
        }
        for &(g, r) in &s.points {
            let _ = writeln!(
                out,
                r#"<circle class="marker" data-gamma="{g}" cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#,
                px(g),
                py(r)
            );
        }
        let ly = legend_top + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<circle cx="{LEFT:.3}" cy="{ly:.3}" r="3" fill="{color}"/><text x="{:.3}" y="{:.3}">{}</text>"#,
            LEFT + 8.0,
            ly + 4.0,
            escape(&s.detector)
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
