//! Node matching, error amplification factors, success classification and
//! slope/threshold estimation.

use itertools::Itertools;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{circular_distance, SpikeSignal};

/// Max node count for the exhaustive assignment solve.
const MAX_MATCH_N: usize = 10;

/// Minimal-total-circular-distance bijection between estimated and true
/// nodes. `permutation[i]` is the true-node index matched to estimate `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatching {
    pub permutation: Vec<usize>,
    pub distances: Vec<f64>,
}

pub fn match_nodes(true_nodes: &[f64], est_nodes: &[f64]) -> Result<NodeMatching> {
    let n = true_nodes.len();
    if est_nodes.len() != n || n == 0 {
        return Err(Error::invalid(format!(
            "match_nodes length mismatch: {} vs {}",
            n,
            est_nodes.len()
        )));
    }
    if n > MAX_MATCH_N {
        return Err(Error::invalid(format!(
            "match_nodes supports up to {MAX_MATCH_N} nodes, got {n}"
        )));
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..n).permutations(n) {
        let total: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| circular_distance(est_nodes[i], true_nodes[j]))
            .sum();
        if best.as_ref().map_or(true, |(t, _)| total < *t) {
            best = Some((total, perm));
        }
    }
    let (_, permutation) = best.expect("n >= 1");
    let distances = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| circular_distance(est_nodes[i], true_nodes[j]))
        .collect();
    Ok(NodeMatching {
        permutation,
        distances,
    })
}

/// Per-true-node error amplification factors
/// `K_x = ε⁻¹Ω|x_j − x̃_j|` and `K_α = ε⁻¹|α_j − α̃_j|`, using the optimal
/// matching. Returned in true-node order.
pub fn amplification_factors(
    truth: &SpikeSignal,
    est_nodes: &[f64],
    est_amps: &[Complex64],
    eps: f64,
    omega: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(eps > 0.0) {
        return Err(Error::invalid("amplification factors need eps > 0"));
    }
    if est_amps.len() != est_nodes.len() {
        return Err(Error::invalid("est_nodes/est_amps length mismatch"));
    }
    let matching = match_nodes(truth.nodes(), est_nodes)?;
    let n = truth.n();
    let mut out = vec![(f64::NAN, f64::NAN); n];
    for (i, &j) in matching.permutation.iter().enumerate() {
        let k_x = omega * matching.distances[i] / eps;
        let k_alpha = (truth.amplitudes()[j] - est_amps[i]).norm() / eps;
        out[j] = (k_x, k_alpha);
    }
    Ok(out)
}

/// Per-true-node success flags: matched error strictly below one third of the
/// distance to the nearest true neighbor.
pub fn is_success(truth: &SpikeSignal, est_nodes: &[f64]) -> Result<Vec<bool>> {
    let nodes = truth.nodes();
    if nodes.len() < 2 {
        return Err(Error::invalid("is_success needs at least 2 nodes"));
    }
    let matching = match_nodes(nodes, est_nodes)?;
    let mut err_by_true = vec![f64::NAN; nodes.len()];
    for (i, &j) in matching.permutation.iter().enumerate() {
        err_by_true[j] = matching.distances[i];
    }
    Ok(nodes
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let nearest = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &y)| circular_distance(x, y))
                .fold(f64::INFINITY, f64::min);
            err_by_true[j] < nearest / 3.0
        })
        .collect())
}

/// Ordinary least squares in log10–log10 coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(Error::invalid("need at least 3 points for a slope fit"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive coordinates"));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("degenerate x-range in slope fit"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit {
        slope,
        intercept,
        r2,
    })
}

/// One column of a success-rate grid: a fixed `Δ` with `(ε, success rate)`
/// samples.
#[derive(Debug, Clone)]
pub struct ThresholdColumn {
    pub delta: f64,
    /// `(eps, success_rate)` pairs; any order, rates in `[0, 1]`.
    pub rates: Vec<(f64, f64)>,
}

/// Fitted 50%-success boundary in the `(Δ, ε)` plane.
#[derive(Debug, Clone)]
pub struct ThresholdBoundary {
    /// Slope of `log ε*` vs `log Δ`.
    pub fit: LogLogFit,
    /// One `(Δ, ε*)` crossing per column that had one.
    pub crossings: Vec<(f64, f64)>,
}

/// Locates the 50% success crossing per `Δ` column (log-linear interpolation
/// in `ε`) and fits the `log ε*` vs `log Δ` slope.
pub fn threshold_boundary(columns: &[ThresholdColumn]) -> Result<ThresholdBoundary> {
    let mut crossings = Vec::new();
    for col in columns {
        let mut rates = col.rates.clone();
        rates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Success decays with eps; find the first adjacent pair straddling 1/2.
        let mut crossing = None;
        for w in rates.windows(2) {
            let (e0, r0) = w[0];
            let (e1, r1) = w[1];
            if (r0 - 0.5) * (r1 - 0.5) <= 0.0 && r0 != r1 {
                let f = (r0 - 0.5) / (r0 - r1);
                let log_e = e0.log10() + f * (e1.log10() - e0.log10());
                crossing = Some(10f64.powf(log_e));
                break;
            }
        }
        if let Some(eps_star) = crossing {
            crossings.push((col.delta, eps_star));
        }
    }
    if crossings.len() < 3 {
        return Err(Error::invalid(format!(
            "only {} columns with a 50% crossing; need at least 3",
            crossings.len()
        )));
    }
    let fit = fit_loglog_slope(&crossings)?;
    Ok(ThresholdBoundary { fit, crossings })
}

/// Flat record of one Monte-Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub method: String,
    pub n: usize,
    pub ell: usize,
    pub delta: f64,
    pub omega: f64,
    pub eps: f64,
    pub seed: u64,
    pub n_lambda: usize,
    pub n_bins: usize,
    /// Per true node, in true-node order.
    pub abs_node_err: Vec<f64>,
    pub abs_amp_err: Vec<f64>,
    pub k_x: Vec<f64>,
    pub k_alpha: Vec<f64>,
    pub in_cluster: Vec<bool>,
    pub success: Vec<bool>,
    pub runtime_ns: u64,
    pub status: String,
}
