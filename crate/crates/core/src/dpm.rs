//! Decimated Prony method: per-λ Prony solves over a decimation grid,
//! aliased candidate sets, histogram dealiasing, collision-avoiding λ
//! selection and final node/amplitude recovery.

use num_complex::Complex64;
use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::prony::prony;
use crate::signal::{MomentSequence, SpikeSignal};

/// Uniform grid of decimation parameters spanning
/// `𝒥 = [Ω/(2(2n−1)), Ω/(2n−1)]`, endpoints included.
#[derive(Debug, Clone)]
pub struct DecimationGrid {
    pub omega: f64,
    pub n: usize,
    pub n_lambda: usize,
    pub lambdas: Vec<f64>,
}

pub fn decimation_grid(omega: f64, n: usize, n_lambda: usize) -> Result<DecimationGrid> {
    if !(omega > 0.0) || n < 1 {
        return Err(Error::invalid("omega must be positive and n >= 1"));
    }
    if n_lambda < 2 {
        return Err(Error::invalid("n_lambda must be >= 2"));
    }
    let hi = omega / (2 * n - 1) as f64;
    let lo = hi / 2.0;
    let step = (hi - lo) / (n_lambda - 1) as f64;
    let mut lambdas: Vec<f64> = (0..n_lambda).map(|i| lo + step * i as f64).collect();
    *lambdas.last_mut().unwrap() = hi; // exact right endpoint
    Ok(DecimationGrid {
        omega,
        n,
        n_lambda,
        lambdas,
    })
}

/// Candidate node positions implied by one decimated solve: all
/// `t = (ỹ_{λ,j} + m)/λ` with `m ∈ ℤ` and `|t| ≤ 1/2`, tagged by the
/// originating wrapped-node index `j`.
#[derive(Debug, Clone)]
pub struct AliasedSolutionSet {
    pub lambda: f64,
    pub wrapped_nodes: Vec<f64>,
    pub candidates: Vec<(usize, f64)>,
}

pub fn aliased_solutions(lambda: f64, wrapped_nodes: &[f64]) -> AliasedSolutionSet {
    let mut candidates = Vec::new();
    for (j, &y) in wrapped_nodes.iter().enumerate() {
        let lo = (-lambda / 2.0 - y).ceil() as i64 - 1;
        let hi = (lambda / 2.0 - y).floor() as i64 + 1;
        for m in lo..=hi {
            let t = (y + m as f64) / lambda;
            if t.abs() <= 0.5 {
                candidates.push((j, t));
            }
        }
    }
    AliasedSolutionSet {
        lambda,
        wrapped_nodes: wrapped_nodes.to_vec(),
        candidates,
    }
}

/// Binned counts of all aliased candidates over `[−1/2, 1/2]`, with the set
/// of λ values contributing to each bin and per-bin candidate means.
#[derive(Debug, Clone)]
pub struct DealiasHistogram {
    pub n_bins: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// λ values (as bit patterns, for exact set semantics) that placed at
    /// least one candidate in each bin.
    pub contributors: Vec<BTreeSet<u64>>,
    sums: Vec<f64>,
}

impl DealiasHistogram {
    /// Bin of a candidate: `⌊(t + 1/2)·N_b⌋`, with `t = 1/2` clamped into the
    /// last bin.
    pub fn bin_of(&self, t: f64) -> usize {
        bin_index(t, self.n_bins)
    }

    pub fn contributor_count(&self, bin: usize) -> usize {
        self.contributors[bin].len()
    }

    /// Mean position of all candidates that fell into `bin`.
    pub fn bin_mean(&self, bin: usize) -> Option<f64> {
        if self.counts[bin] == 0 {
            None
        } else {
            Some(self.sums[bin] / self.counts[bin] as f64)
        }
    }
}

fn bin_index(t: f64, n_bins: usize) -> usize {
    let idx = ((t + 0.5) * n_bins as f64).floor() as i64;
    idx.clamp(0, n_bins as i64 - 1) as usize
}

pub fn build_histogram(all_sets: &[AliasedSolutionSet], n_bins: usize) -> Result<DealiasHistogram> {
    if n_bins < 1 {
        return Err(Error::invalid("n_bins must be >= 1"));
    }
    let edges = (0..=n_bins)
        .map(|i| -0.5 + i as f64 / n_bins as f64)
        .collect();
    let mut counts = vec![0usize; n_bins];
    let mut contributors = vec![BTreeSet::new(); n_bins];
    let mut sums = vec![0.0f64; n_bins];
    for set in all_sets {
        for &(_, t) in &set.candidates {
            let b = bin_index(t, n_bins);
            counts[b] += 1;
            sums[b] += t;
            contributors[b].insert(set.lambda.to_bits());
        }
    }
    Ok(DealiasHistogram {
        n_bins,
        edges,
        counts,
        contributors,
        sums,
    })
}

/// The `n` dominant bins. Under noise the candidates of one true node can
/// straddle a bin edge, so dominance is judged on the aggregate count over a
/// ±1-bin window; the reported bin is the heaviest bin inside the winning
/// window (ties broken by larger contributor set, then by lower bin index),
/// and its window is suppressed before the next pick so a single split peak
/// is never selected twice.
pub fn top_bins(hist: &DealiasHistogram, n: usize) -> Result<Vec<usize>> {
    let n_bins = hist.n_bins;
    let nonempty = (0..n_bins).filter(|&b| hist.counts[b] > 0).count();
    if nonempty < n {
        return Err(Error::TooFewBins {
            nonempty,
            needed: n,
        });
    }
    let window = |b: usize| b.saturating_sub(1)..=(b + 1).min(n_bins - 1);
    let mut active = hist.counts.clone();
    let mut picks = Vec::with_capacity(n);
    for _ in 0..n {
        // Best ±1 window by aggregate active count.
        let best = (0..n_bins)
            .filter(|&c| active[c] > 0)
            .max_by(|&a, &b| {
                let score = |c: usize| window(c).map(|i| active[i]).sum::<usize>();
                score(a)
                    .cmp(&score(b))
                    .then(hist.contributor_count(a).cmp(&hist.contributor_count(b)))
                    .then(b.cmp(&a))
            })
            .ok_or(Error::TooFewBins {
                nonempty: picks.len(),
                needed: n,
            })?;
        // Heaviest bin inside the winning window.
        let pick = window(best)
            .filter(|&b| active[b] > 0)
            .max_by(|&a, &b| {
                active[a]
                    .cmp(&active[b])
                    .then(hist.contributor_count(a).cmp(&hist.contributor_count(b)))
                    .then(b.cmp(&a))
            })
            .expect("winning window contains an active bin");
        for b in window(pick) {
            active[b] = 0;
        }
        picks.push(pick);
    }
    Ok(picks)
}

/// Whether a candidate position falls in the ±1-bin window of `bin`.
fn in_window(hist: &DealiasHistogram, t: f64, bin: usize) -> bool {
    let b = hist.bin_of(t);
    b + 1 >= bin && b <= bin + 1
}

/// Source-aware greedy bin selection used by the full pipeline. Works like
/// [`top_bins`], but when a window is picked, every wrapped node `(λ, j)` with
/// a candidate inside it is consumed together with all of its other aliases.
/// A spurious accumulation of aliases therefore cannot outrank the true bin
/// it mirrors: once the true bin is picked, the mirrored candidates vanish.
fn select_bins(all_sets: &[AliasedSolutionSet], hist: &DealiasHistogram, n: usize) -> Result<Vec<usize>> {
    let n_bins = hist.n_bins;
    let nonempty = (0..n_bins).filter(|&b| hist.counts[b] > 0).count();
    if nonempty < n {
        return Err(Error::TooFewBins {
            nonempty,
            needed: n,
        });
    }
    // Flat candidate list: (source = (set index, wrapped-node index), bin).
    let mut cands: Vec<(usize, usize, usize)> = Vec::new();
    for (si, set) in all_sets.iter().enumerate() {
        for &(j, t) in &set.candidates {
            cands.push((si, j, hist.bin_of(t)));
        }
    }
    let mut alive = vec![true; cands.len()];
    let mut active = hist.counts.clone();
    let window = |b: usize| b.saturating_sub(1)..=(b + 1).min(n_bins - 1);
    let mut picks = Vec::with_capacity(n);
    for _ in 0..n {
        let best = (0..n_bins)
            .filter(|&c| active[c] > 0)
            .max_by(|&a, &b| {
                let score = |c: usize| window(c).map(|i| active[i]).sum::<usize>();
                score(a)
                    .cmp(&score(b))
                    .then(hist.contributor_count(a).cmp(&hist.contributor_count(b)))
                    .then(b.cmp(&a))
            })
            .ok_or(Error::TooFewBins {
                nonempty: picks.len(),
                needed: n,
            })?;
        let pick = window(best)
            .filter(|&b| active[b] > 0)
            .max_by(|&a, &b| {
                active[a]
                    .cmp(&active[b])
                    .then(hist.contributor_count(a).cmp(&hist.contributor_count(b)))
                    .then(b.cmp(&a))
            })
            .expect("winning window contains an active bin");
        // Consume every source with an alive candidate inside the picked
        // window, removing all of their aliases from the active counts.
        let mut consumed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (ci, &(si, j, b)) in cands.iter().enumerate() {
            if alive[ci] && b + 1 >= pick && b <= pick + 1 {
                consumed.insert((si, j));
            }
        }
        for (ci, &(si, j, b)) in cands.iter().enumerate() {
            if alive[ci] && consumed.contains(&(si, j)) {
                alive[ci] = false;
                active[b] -= 1;
            }
        }
        picks.push(pick);
    }
    Ok(picks)
}

/// Solves the small real symmetric system `a·x = b` by Gaussian elimination
/// with partial pivoting; `None` when numerically singular.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in col + 1..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Solves the small complex system `a·x = b` by Gaussian elimination with
/// partial pivoting; `None` when numerically singular.
fn solve_small_c(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| {
            a[r][col].norm_sqr().partial_cmp(&a[s][col].norm_sqr()).unwrap()
        })?;
        if a[piv][col].norm_sqr() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let s = a[col][c];
                a[r][c] -= f * s;
            }
            let s = b[col];
            b[r] -= f * s;
        }
    }
    let mut x = vec![Complex64::default(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in col + 1..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Design matrix, amplitude fit, and residual at nodes `x` (normal equations).
struct FitState {
    e: Vec<Vec<Complex64>>, // m × n
    alpha: Vec<Complex64>,
    r: Vec<Complex64>,
    resid: f64,
}

fn fit_at(freqs: &[f64], values: &[Complex64], x: &[f64]) -> Option<FitState> {
    let (m, n) = (freqs.len(), x.len());
    let e: Vec<Vec<Complex64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::from_polar(1.0, TAU * x[j] * freqs[i]))
                .collect()
        })
        .collect();
    let mut gram = vec![vec![Complex64::default(); n]; n];
    let mut rhs = vec![Complex64::default(); n];
    for i in 0..m {
        for j in 0..n {
            for k in 0..n {
                gram[j][k] += e[i][j].conj() * e[i][k];
            }
            rhs[j] += e[i][j].conj() * values[i];
        }
    }
    let alpha = solve_small_c(gram, rhs)?;
    let mut r = vec![Complex64::default(); m];
    let mut resid = 0.0;
    for i in 0..m {
        let mut model = Complex64::default();
        for j in 0..n {
            model += e[i][j] * alpha[j];
        }
        r[i] = values[i] - model;
        resid += r[i].norm_sqr();
    }
    Some(FitState {
        e,
        alpha,
        r,
        resid: resid.sqrt(),
    })
}

/// Local least-squares polish of node estimates against samples
/// `values[i] ≈ Σ_j α_j e^{2πj·x_j·freqs[i]}`: variable-projection
/// Gauss–Newton (projected Jacobian, with backtracking). Returns the refined
/// nodes and the amplitudes of the final linear solve. Used as the final step
/// of the decimated pipeline and available to polish any other estimator's
/// output over its own samples.
pub fn refine_fit(
    freqs: &[f64],
    values: &[Complex64],
    x0: &[f64],
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let n = x0.len();
    let m = freqs.len();
    let mut x = x0.to_vec();
    let mut state =
        fit_at(freqs, values, &x).ok_or_else(|| Error::invalid("refinement fit is singular"))?;
    for _ in 0..40 {
        // J_{ij} = ∂(E α)_i / ∂x_j, projected onto the complement of
        // range(E): the amplitude refit absorbs the in-range component, so
        // the Gauss–Newton model must only see the projected Jacobian.
        let jac: Vec<Vec<Complex64>> = (0..m)
            .map(|i| {
                (0..n)
                    .map(|j| state.alpha[j] * Complex64::new(0.0, TAU * freqs[i]) * state.e[i][j])
                    .collect()
            })
            .collect();
        let mut gram = vec![vec![Complex64::default(); n]; n];
        let mut ej = vec![vec![Complex64::default(); n]; n];
        for i in 0..m {
            for j in 0..n {
                for k in 0..n {
                    gram[j][k] += state.e[i][j].conj() * state.e[i][k];
                    ej[j][k] += state.e[i][j].conj() * jac[i][k];
                }
            }
        }
        // Columns of S solve (EᴴE)·S = EᴴJ; K = J − E·S.
        let mut s_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        let mut singular = false;
        for k in 0..n {
            let col: Vec<Complex64> = (0..n).map(|j| ej[j][k]).collect();
            match solve_small_c(gram.clone(), col) {
                Some(s) => s_cols.push(s),
                None => {
                    singular = true;
                    break;
                }
            }
        }
        if singular {
            break;
        }
        let mut ata = vec![vec![0.0f64; n]; n];
        let mut atb = vec![0.0f64; n];
        for i in 0..m {
            let mut krow = vec![Complex64::default(); n];
            for (k, s_col) in s_cols.iter().enumerate() {
                let mut es = Complex64::default();
                for j in 0..n {
                    es += state.e[i][j] * s_col[j];
                }
                krow[k] = jac[i][k] - es;
            }
            for j in 0..n {
                for k in j..n {
                    ata[j][k] += (krow[j].conj() * krow[k]).re;
                }
                atb[j] += (krow[j].conj() * state.r[i]).re;
            }
        }
        for j in 0..n {
            for k in 0..j {
                ata[j][k] = ata[k][j];
            }
        }
        let dx = match solve_small(ata, atb) {
            Some(dx) => dx,
            None => break,
        };
        let step = dx.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + scale * d).collect();
            if let Some(st) = fit_at(freqs, values, &xt) {
                if st.resid < state.resid {
                    x = xt;
                    state = st;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted || step * scale < 1e-14 {
            break;
        }
    }
    for xi in &mut x {
        *xi = xi.clamp(-0.5, 0.5);
    }
    Ok((x, state.alpha))
}

/// Collision-avoiding set `Λ`: the λ's whose aliased set places a candidate in
/// (the ±1-bin window of) every selected bin.
pub fn collision_set(
    all_sets: &[AliasedSolutionSet],
    bins: &[usize],
    hist: &DealiasHistogram,
) -> Vec<f64> {
    let mut out = Vec::new();
    'outer: for set in all_sets {
        for &bin in bins {
            let hit = set.candidates.iter().any(|&(_, t)| in_window(hist, t, bin));
            if !hit {
                continue 'outer;
            }
        }
        out.push(set.lambda);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Wrapped minimal separation
/// `Δ_λ = min_{s≠k} |arg(e^{2πjλ(x_k−x_s)})|`, in `[0, π]`.
pub fn wrapped_separation(signal: &SpikeSignal, lambda: f64) -> Result<f64> {
    let nodes = signal.nodes();
    if nodes.len() < 2 {
        return Err(Error::invalid("wrapped_separation needs at least 2 nodes"));
    }
    let mut best = PI;
    for (i, &xi) in nodes.iter().enumerate() {
        for &xj in nodes.iter().skip(i + 1) {
            let turns = lambda * (xi - xj);
            let frac = turns - turns.round(); // in [-1/2, 1/2]
            best = best.min((TAU * frac).abs());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpmStatus {
    Success,
    EmptyCollisionSet,
    PronyFailure,
}

/// Per-λ diagnostics retained in the recovery result.
#[derive(Debug, Clone)]
pub struct LambdaDiagnostic {
    pub lambda: f64,
    pub prony_ok: bool,
    pub candidate_count: usize,
}

/// Outcome of one DPM run.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub status: DpmStatus,
    pub est_nodes: Vec<f64>,
    pub est_amplitudes: Vec<Complex64>,
    pub lambda_star: Option<f64>,
    pub collision_set_size: usize,
    pub selected_bins: Vec<usize>,
    pub per_lambda_diagnostics: Option<Vec<LambdaDiagnostic>>,
}

impl RecoveryResult {
    fn failed(status: DpmStatus, diagnostics: Vec<LambdaDiagnostic>) -> Self {
        RecoveryResult {
            status,
            est_nodes: Vec::new(),
            est_amplitudes: Vec::new(),
            lambda_star: None,
            collision_set_size: 0,
            selected_bins: Vec::new(),
            per_lambda_diagnostics: Some(diagnostics),
        }
    }
}

/// Parameters of a DPM run.
#[derive(Debug, Clone, Copy)]
pub struct DpmParams {
    pub omega: f64,
    pub n: usize,
    pub n_lambda: usize,
    pub n_bins: usize,
    /// Finish with a local least-squares polish over the pooled decimated
    /// samples ([`refine_fit`]) instead of the λ* Vandermonde solve. Off by
    /// default: the raw pipeline's scaling behaviour is itself of interest.
    pub refine: bool,
}

impl DpmParams {
    /// Defaults used by the experiment harness when the ground-truth `Δ` is
    /// known: `N_λ = max(⌈Ω⌉, 10)` and `N_b = ⌈3/Δ⌉`.
    pub fn with_known_delta(omega: f64, n: usize, delta: f64) -> Self {
        DpmParams {
            omega,
            n,
            n_lambda: (omega.ceil() as usize).max(10),
            n_bins: (3.0 / delta).ceil() as usize,
            refine: false,
        }
    }
}

/// Runs the decimated Prony method against a sample provider returning
/// `g(λk)` for any grid `λ` and `k = 0..2n−1`.
pub fn dpm<F>(sample_provider: F, params: &DpmParams) -> Result<RecoveryResult>
where
    F: Fn(f64, usize) -> Complex64,
{
    let DpmParams {
        omega,
        n,
        n_lambda,
        n_bins,
        refine,
    } = *params;
    let grid = decimation_grid(omega, n, n_lambda)?;
    if n_bins < 1 {
        return Err(Error::invalid("n_bins must be >= 1"));
    }

    let mut diagnostics = Vec::with_capacity(grid.lambdas.len());
    let mut sets: Vec<AliasedSolutionSet> = Vec::with_capacity(grid.lambdas.len());
    let mut moments_by_lambda: Vec<MomentSequence> = Vec::with_capacity(grid.lambdas.len());
    for &lambda in &grid.lambdas {
        let values: Vec<Complex64> = (0..2 * n).map(|k| sample_provider(lambda, k)).collect();
        let moments = MomentSequence {
            lambda,
            values,
            eps: 0.0,
        };
        match prony(&moments, n) {
            Ok(sol) => {
                let set = aliased_solutions(lambda, &sol.wrapped_nodes);
                diagnostics.push(LambdaDiagnostic {
                    lambda,
                    prony_ok: true,
                    candidate_count: set.candidates.len(),
                });
                sets.push(set);
                moments_by_lambda.push(moments);
            }
            Err(_) => diagnostics.push(LambdaDiagnostic {
                lambda,
                prony_ok: false,
                candidate_count: 0,
            }),
        }
    }
    if sets.is_empty() {
        return Ok(RecoveryResult::failed(DpmStatus::PronyFailure, diagnostics));
    }

    let hist = build_histogram(&sets, n_bins)?;
    let bins = match select_bins(&sets, &hist, n) {
        Ok(b) => b,
        Err(_) => {
            return Ok(RecoveryResult::failed(
                DpmStatus::EmptyCollisionSet,
                diagnostics,
            ))
        }
    };
    let lambda_set = collision_set(&sets, &bins, &hist);
    if lambda_set.is_empty() {
        return Ok(RecoveryResult::failed(
            DpmStatus::EmptyCollisionSet,
            diagnostics,
        ));
    }
    let lambda_star = *lambda_set.last().unwrap();
    let star_idx = sets
        .iter()
        .position(|s| s.lambda == lambda_star)
        .expect("lambda_star comes from the solved grid");
    let star_set = &sets[star_idx];

    // Step 8: in each selected bin's window take the candidate of X_{λ*}
    // closest to the cross-λ median (the histogram's consensus location);
    // duplicate picks across bins are degenerate. The medians themselves
    // serve as the starting point for the optional polish.
    let mut medians: Vec<f64> = Vec::with_capacity(n);
    let mut star_picks: Vec<f64> = Vec::with_capacity(n);
    for &bin in &bins {
        let mut ts: Vec<f64> = sets
            .iter()
            .flat_map(|s| s.candidates.iter())
            .filter(|&&(_, t)| in_window(&hist, t, bin))
            .map(|&(_, t)| t)
            .collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = ts.len() / 2;
        let median = if ts.len() % 2 == 1 {
            ts[mid]
        } else {
            0.5 * (ts[mid - 1] + ts[mid])
        };
        let star = star_set
            .candidates
            .iter()
            .filter(|&&(_, t)| in_window(&hist, t, bin))
            .map(|&(_, t)| t)
            .min_by(|&a, &b| (a - median).abs().partial_cmp(&(b - median).abs()).unwrap());
        match star {
            Some(t) => star_picks.push(t),
            None => {
                return Ok(RecoveryResult::failed(
                    DpmStatus::EmptyCollisionSet,
                    diagnostics,
                ))
            }
        }
        medians.push(median);
    }
    {
        let mut sorted = star_picks.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        if sorted.len() < n {
            return Ok(RecoveryResult::failed(
                DpmStatus::EmptyCollisionSet,
                diagnostics,
            ));
        }
    }

    // Step 9: amplitudes from the λ* samples against the decimated
    // exponentials at the estimated nodes; with `refine` enabled, the nodes
    // and amplitudes are instead polished by local least squares over the
    // pooled decimated samples.
    let lambda_star_solve = |picks: &[f64]| -> Result<(Vec<f64>, Vec<Complex64>)> {
        let exps: Vec<Complex64> = picks
            .iter()
            .map(|&x| Complex64::from_polar(1.0, TAU * x * lambda_star))
            .collect();
        let rhs = &moments_by_lambda[star_idx].values[..n];
        let (amps, _) = crate::prony::solve_vandermonde_ls(&exps, rhs)?;
        Ok((picks.to_vec(), amps))
    };
    let (nodes, amps) = if refine {
        let mut freqs: Vec<f64> = Vec::new();
        let mut pooled: Vec<Complex64> = Vec::new();
        for m in &moments_by_lambda {
            for (k, &v) in m.values.iter().enumerate() {
                freqs.push(m.lambda * k as f64);
                pooled.push(v);
            }
        }
        match refine_fit(&freqs, &pooled, &medians) {
            Ok(r) => r,
            Err(_) => lambda_star_solve(&star_picks)?,
        }
    } else {
        lambda_star_solve(&star_picks)?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    let est_nodes: Vec<f64> = order.iter().map(|&i| nodes[i]).collect();
    let est_amplitudes: Vec<Complex64> = order.iter().map(|&i| amps[i]).collect();
    let sorted_bins: Vec<usize> = order.iter().map(|&i| bins[i]).collect();

    Ok(RecoveryResult {
        status: DpmStatus::Success,
        est_nodes,
        est_amplitudes,
        lambda_star: Some(lambda_star),
        collision_set_size: lambda_set.len(),
        selected_bins: sorted_bins,
        per_lambda_diagnostics: Some(diagnostics),
    })
}
