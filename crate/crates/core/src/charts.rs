//! Static SVG charts. Output is a pure function of the input data.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::data_model::{Dataset, INDICATORS};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Linear map from a data range onto a pixel range. A degenerate data range
/// maps everything to the middle of the pixel range.
#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        Self { lo, hi, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        if self.hi - self.lo <= 0.0 {
            return 0.5 * (self.from + self.to);
        }
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo <= 0.0 {
        let pad = lo.abs().max(1.0) * 0.1;
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="#333333"/>"##
    );
    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="#333333"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(y_label)
    );
}

fn tick(out: &mut String, horizontal: bool, pos: f64, label: &str) {
    if horizontal {
        let y = HEIGHT - MARGIN_BOTTOM;
        let _ = writeln!(
            out,
            r##"<line class="tick" x1="{pos:.2}" y1="{y:.2}" x2="{pos:.2}" y2="{:.2}" stroke="#333333"/><text class="tick-label" x="{pos:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
            y + 5.0,
            y + 18.0
        );
    } else {
        let x = MARGIN_LEFT;
        let _ = writeln!(
            out,
            r##"<line class="tick" x1="{:.2}" y1="{pos:.2}" x2="{x:.2}" y2="{pos:.2}" stroke="#333333"/><text class="tick-label" x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            x - 5.0,
            x - 8.0,
            pos + 4.0
        );
    }
}

fn value_ticks(out: &mut String, scale: &Scale, horizontal: bool) {
    for i in 0..=4 {
        let v = scale.lo + (scale.hi - scale.lo) * i as f64 / 4.0;
        tick(out, horizontal, scale.map(v), &format!("{v:.2}"));
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Per-year mean line over a min/max band for one indicator.
pub fn emit_temporal_chart(dataset: &Dataset, variable: &str) -> Result<String> {
    let name = INDICATORS
        .iter()
        .find(|n| n.eq_ignore_ascii_case(variable))
        .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in dataset.records() {
        let v = r.indicator(name).expect("known indicator");
        by_year.entry(r.year).or_default().push(v);
    }
    // (year, mean, min, max)
    let stats: Vec<(i32, f64, f64, f64)> = by_year
        .iter()
        .map(|(&y, vs)| {
            let mean = vs.iter().sum::<f64>() / vs.len() as f64;
            let min = vs.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (y, mean, min, max)
        })
        .collect();

    let first = stats[0].0 as f64;
    let last = stats[stats.len() - 1].0 as f64;
    let lo = stats.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let hi = stats.iter().map(|s| s.3).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = padded(lo, hi);
    let xs = Scale::new(first, last, MARGIN_LEFT + 16.0, WIDTH - MARGIN_RIGHT - 16.0);
    let ys = Scale::new(lo, hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut out = String::new();
    header(&mut out, &format!("{name}: yearly mean with min/max range"));
    axes(&mut out, "year", name);
    for s in &stats {
        tick(&mut out, true, xs.map(s.0 as f64), &s.0.to_string());
    }
    value_ticks(&mut out, &ys, false);

    let mut band: Vec<String> = stats
        .iter()
        .map(|s| format!("{:.2},{:.2}", xs.map(s.0 as f64), ys.map(s.2)))
        .collect();
    band.extend(
        stats
            .iter()
            .rev()
            .map(|s| format!("{:.2},{:.2}", xs.map(s.0 as f64), ys.map(s.3))),
    );
    let _ = writeln!(
        out,
        r##"<polygon class="band" points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
        band.join(" ")
    );
    let line: Vec<String> = stats
        .iter()
        .map(|s| format!("{:.2},{:.2}", xs.map(s.0 as f64), ys.map(s.1)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline class="mean" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        line.join(" ")
    );
    for s in &stats {
        let _ = writeln!(
            out,
            r##"<circle class="mean-point" cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"><title>{} mean {:.4}</title></circle>"##,
            xs.map(s.0 as f64),
            ys.map(s.1),
            s.0,
            s.1
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Two-dimensional scatter colored by label, with each cluster's mean
/// coordinate drawn as a cross.
pub fn emit_cluster_scatter(projection: &FeatureMatrix, labels: &[usize]) -> Result<String> {
    if projection.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: projection.ncols(),
        });
    }
    if projection.nrows() != labels.len() {
        return Err(Error::LengthMismatch(projection.nrows(), labels.len()));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let xs_data = projection.column(0);
    let ys_data = projection.column(1);
    let range = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        padded(lo, hi)
    };
    let (xlo, xhi) = range(&xs_data);
    let (ylo, yhi) = range(&ys_data);
    let xs = Scale::new(xlo, xhi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let ys = Scale::new(ylo, yhi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut sums: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for ((&x, &y), &l) in xs_data.iter().zip(&ys_data).zip(labels) {
        let e = sums.entry(l).or_insert((0.0, 0.0, 0));
        e.0 += x;
        e.1 += y;
        e.2 += 1;
    }

    let mut out = String::new();
    header(&mut out, "Clusters on the first two principal components");
    axes(
        &mut out,
        projection
            .column_names()
            .first()
            .map_or("pc1", |s| s.as_str()),
        projection
            .column_names()
            .get(1)
            .map_or("pc2", |s| s.as_str()),
    );
    value_ticks(&mut out, &xs, true);
    value_ticks(&mut out, &ys, false);

    for ((&x, &y), &l) in xs_data.iter().zip(&ys_data).zip(labels) {
        let _ = writeln!(
            out,
            r#"<circle class="point cluster-{l}" cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.6"/>"#,
            xs.map(x),
            ys.map(y),
            PALETTE[l % PALETTE.len()]
        );
    }
    for (i, (&l, &(sx, sy, n))) in sums.iter().enumerate() {
        let (cx, cy) = (xs.map(sx / n as f64), ys.map(sy / n as f64));
        let _ = writeln!(
            out,
            r##"<path class="center cluster-{l}" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="#000000" stroke-width="3"/>"##,
            cx - 7.0,
            cy - 7.0,
            cx + 7.0,
            cy + 7.0,
            cx - 7.0,
            cy + 7.0,
            cx + 7.0,
            cy - 7.0
        );
        let ly = MARGIN_TOP + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<circle class="legend" cx="{:.2}" cy="{ly:.2}" r="4" fill="{}"/><text class="legend-label" x="{:.2}" y="{:.2}">cluster {l} (n={n})</text>"#,
            WIDTH - MARGIN_RIGHT - 110.0,
            PALETTE[l % PALETTE.len()],
            WIDTH - MARGIN_RIGHT - 100.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
