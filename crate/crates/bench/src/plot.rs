//! Self-contained SVG renderings of the benchmark tables: log–log error
//! scatters with a fitted slope, and Δ–ε success-rate maps with the 50%
//! boundary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dpm_core::error::{Error, Result};
use dpm_core::metrics::{fit_loglog_slope, threshold_boundary, LogLogFit, ThresholdColumn};

use crate::table::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LogLogScatter,
    ThresholdMap,
}

impl PlotKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "loglog-scatter" => Ok(PlotKind::LogLogScatter),
            "threshold-map" => Ok(PlotKind::ThresholdMap),
            other => Err(Error::InvalidArgument(format!("unknown plot kind '{other}'"))),
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_lo) / (self.x_hi - self.x_lo) * (W - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.y_lo) / (self.y_hi - self.y_lo) * (H - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" ",
            "viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n"
        ),
        W,
        H,
        W,
        H,
        W / 2.0,
        title
    )
}

/// Key ordering helper: f64 as ordered bits for BTreeMap grouping.
fn key(v: f64) -> u64 {
    v.to_bits()
}

/// Per-trial maximum cluster-node `K_x`, keyed by the swept abscissa
/// (Δ when it varies across the table, otherwise SRF).
pub fn scatter_points(table: &ResultTable) -> Vec<(f64, f64)> {
    let deltas: std::collections::BTreeSet<u64> =
        table.rows.iter().map(|r| key(r.delta)).collect();
    let use_delta = deltas.len() > 1;
    let mut per_trial: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for r in &table.rows {
        if !r.in_cluster || !r.k_x.is_finite() || r.status != "success" {
            continue;
        }
        let x = if use_delta { r.delta } else { r.srf };
        let entry = per_trial.entry((key(x), r.trial_id)).or_insert(0.0);
        *entry = entry.max(r.k_x);
    }
    per_trial
        .into_iter()
        .map(|((xb, _), y)| (f64::from_bits(xb), y))
        .filter(|&(_, y)| y > 0.0)
        .collect()
}

/// Median of per-trial maxima per abscissa, used for the slope fit.
pub fn median_points(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(x, y) in points {
        groups.entry(key(x)).or_default().push(y);
    }
    groups
        .into_iter()
        .map(|(xb, mut ys)| {
            ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (f64::from_bits(xb), ys[ys.len() / 2])
        })
        .collect()
}

pub fn slope_annotation(fit: &LogLogFit) -> String {
    format!("slope={:.3} r2={:.3}", fit.slope, fit.r2)
}

fn render_scatter(table: &ResultTable) -> Result<String> {
    let points = scatter_points(table);
    let medians = median_points(&points);
    if medians.len() < 3 {
        return Err(Error::InvalidArgument(
            "too few abscissa values for a log-log scatter".into(),
        ));
    }
    let fit = fit_loglog_slope(&medians)?;

    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &logs {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let pad = 0.3;
    let ax = Axes {
        x_lo: x_lo - pad,
        x_hi: x_hi + pad,
        y_lo: y_lo - pad,
        y_hi: y_hi + pad,
    };

    let mut svg = svg_open("max cluster-node error amplification");
    for &(x, y) in &logs {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.5\"/>\n",
            ax.x(x),
            ax.y(y)
        ));
    }
    // fitted line across the x range
    let yl = fit.intercept + fit.slope * (x_lo - pad);
    let yr = fit.intercept + fit.slope * (x_hi + pad);
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n",
        ax.x(x_lo - pad),
        ax.y(yl),
        ax.x(x_hi + pad),
        ax.y(yr)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\">{}</text>\n",
        MARGIN,
        H - MARGIN / 3.0,
        slope_annotation(&fit)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Trial-level success per (Δ, ε): status success and every node recovered.
pub fn threshold_columns(table: &ResultTable) -> Vec<ThresholdColumn> {
    let mut trial_ok: BTreeMap<(u64, u64, u64), bool> = BTreeMap::new();
    for r in &table.rows {
        let k = (key(r.delta), key(r.eps), r.trial_id);
        let ok = trial_ok.entry(k).or_insert(true);
        *ok &= r.success && r.status == "success";
    }
    let mut rates: BTreeMap<(u64, u64), (usize, usize)> = BTreeMap::new();
    for ((d, e, _), ok) in trial_ok {
        let cell = rates.entry((d, e)).or_insert((0, 0));
        cell.1 += 1;
        if ok {
            cell.0 += 1;
        }
    }
    let mut columns: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for ((d, e), (succ, total)) in rates {
        columns
            .entry(d)
            .or_default()
            .push((f64::from_bits(e), succ as f64 / total as f64));
    }
    columns
        .into_iter()
        .map(|(d, rates)| ThresholdColumn {
            delta: f64::from_bits(d),
            rates,
        })
        .collect()
}

fn render_threshold_map(table: &ResultTable) -> Result<String> {
    let columns = threshold_columns(table);
    if columns.len() < 2 {
        return Err(Error::InvalidArgument(
            "threshold map needs at least 2 delta columns".into(),
        ));
    }
    let boundary = threshold_boundary(&columns)?;

    let xs: Vec<f64> = columns.iter().map(|c| c.delta.log10()).collect();
    let mut ys: Vec<f64> = Vec::new();
    for c in &columns {
        for &(e, _) in &c.rates {
            ys.push(e.log10());
        }
    }
    let (x_lo, x_hi) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let ax = Axes {
        x_lo: x_lo - 0.2,
        x_hi: x_hi + 0.2,
        y_lo: y_lo - 0.2,
        y_hi: y_hi + 0.2,
    };
    let cell_w = (W - 2.0 * MARGIN) / (columns.len() as f64 * 1.5);

    let mut svg = svg_open("success rate over (delta, eps)");
    for c in &columns {
        let cx = ax.x(c.delta.log10());
        let cell_h = (H - 2.0 * MARGIN) / (c.rates.len() as f64 * 1.2);
        for &(e, rate) in &c.rates {
            let cy = ax.y(e.log10());
            let shade = (255.0 * (1.0 - rate)) as u8;
            svg.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({shade},{},255)\"/>\n",
                cx - cell_w / 2.0,
                cy - cell_h / 2.0,
                cell_w,
                cell_h,
                shade
            ));
        }
    }
    let polyline: Vec<String> = boundary
        .crossings
        .iter()
        .map(|&(d, e)| format!("{:.2},{:.2}", ax.x(d.log10()), ax.y(e.log10())))
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n",
        polyline.join(" ")
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\">boundary {}</text>\n",
        MARGIN,
        H - MARGIN / 3.0,
        slope_annotation(&boundary.fit)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders the table to a static SVG file.
pub fn plot(table: &ResultTable, kind: PlotKind, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::InvalidArgument("cannot plot an empty table".into()));
    }
    let svg = match kind {
        PlotKind::LogLogScatter => render_scatter(table)?,
        PlotKind::ThresholdMap => render_threshold_map(table)?,
    };
    fs::write(path, svg)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}
