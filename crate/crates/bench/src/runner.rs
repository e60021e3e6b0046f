//! Seeded Monte-Carlo experiment execution.

use rayon::prelude::*;
use std::time::Instant;

use dpm_core::dpm::{dpm, decimation_grid, wrapped_separation, DecimationGrid, DpmParams, DpmStatus};
use dpm_core::error::Result;
use dpm_core::esprit::{esprit, EspritConfig};
use dpm_core::metrics::{is_success, match_nodes, TrialRecord};
use dpm_core::prony::prony;
use dpm_core::signal::{
    add_noise, make_clustered_signal, sample_spectrum, ClusterConfig, NoiseMode, NoisySpectrum,
    SpikeSignal,
};
use num_complex::Complex64;

use crate::spec::{ExperimentKind, ExperimentSpec, Method};
use crate::table::{flatten, ResultTable, TableMeta, TrialRow};

/// ε constant for scaling sweeps: ε = c·Δ^{2ℓ−1} keeps the noise below the
/// recovery threshold across the sweep.
pub const SWEEP_EPS_COEFF: f64 = 1e-2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based child seed for (master, cell, trial); reproducible under any
/// execution order.
pub fn child_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ cell) ^ trial)
}

/// One grid cell of an experiment.
#[derive(Debug, Clone)]
pub struct Cell {
    pub method: Method,
    pub delta: f64,
    pub omega: f64,
    pub eps: f64,
}

/// Expands a spec into its grid cells, in deterministic order.
pub fn cells_of(spec: &ExperimentSpec) -> Vec<Cell> {
    let auto_eps = |delta: f64| SWEEP_EPS_COEFF * delta.powi(2 * spec.ell as i32 - 1);
    let mut cells = Vec::new();
    match spec.kind {
        ExperimentKind::SweepDelta => {
            let omega = spec.omegas[0];
            for &method in &spec.methods {
                for (i, &delta) in spec.deltas.iter().enumerate() {
                    let eps = match spec.epsilons.len() {
                        0 => auto_eps(delta),
                        1 => spec.epsilons[0],
                        _ => spec.epsilons[i % spec.epsilons.len()],
                    };
                    cells.push(Cell {
                        method,
                        delta,
                        omega,
                        eps,
                    });
                }
            }
        }
        ExperimentKind::SweepSrf => {
            let delta = spec.deltas[0];
            for &method in &spec.methods {
                for &omega in &spec.omegas {
                    let srf = 1.0 / (omega * delta);
                    let eps = if spec.epsilons.is_empty() {
                        SWEEP_EPS_COEFF * srf.powi(1 - 2 * spec.ell as i32)
                    } else {
                        spec.epsilons[0]
                    };
                    cells.push(Cell {
                        method,
                        delta,
                        omega,
                        eps,
                    });
                }
            }
        }
        ExperimentKind::Threshold => {
            let omega = spec.omegas[0];
            for &method in &spec.methods {
                for &delta in &spec.deltas {
                    // Auto rows bracket the expected Δ^{2ℓ−1} boundary.
                    let eps_list: Vec<f64> = if spec.epsilons.is_empty() {
                        (-2..=10)
                            .map(|k| auto_eps(delta) * 10f64.powf(0.5 * k as f64))
                            .collect()
                    } else {
                        spec.epsilons.clone()
                    };
                    for eps in eps_list {
                        cells.push(Cell {
                            method,
                            delta,
                            omega,
                            eps,
                        });
                    }
                }
            }
        }
        ExperimentKind::Compare => {
            let delta = spec.deltas[0];
            let omega = spec.omegas[0];
            for &method in &spec.methods {
                for &eps in &spec.epsilons {
                    cells.push(Cell {
                        method,
                        delta,
                        omega,
                        eps,
                    });
                }
            }
        }
        ExperimentKind::SingleRun => {
            for &method in &spec.methods {
                cells.push(Cell {
                    method,
                    delta: spec.deltas[0],
                    omega: spec.omegas[0],
                    eps: spec.epsilons.first().copied().unwrap_or(0.0),
                });
            }
        }
    }
    cells
}

fn dpm_params(spec: &ExperimentSpec, cell: &Cell) -> DpmParams {
    let mut p = DpmParams::with_known_delta(cell.omega, spec.n, cell.delta);
    if let Some(nl) = spec.n_lambda {
        p.n_lambda = nl;
    }
    if let Some(nb) = spec.n_bins {
        p.n_bins = nb;
    }
    // The accuracy/runtime comparison finishes every method with the same
    // least-squares polish; the scaling sweeps study the raw estimators.
    p.refine = spec.kind == ExperimentKind::Compare;
    p
}

/// Moves the cluster center to the nearest histogram bin center so the
/// cluster nodes stay clear of bin edges (genericity).
pub fn snap_to_bin_center(center: f64, n_bins: usize) -> f64 {
    let w = 1.0 / n_bins as f64;
    let idx = ((center + 0.5) / w).floor();
    -0.5 + (idx + 0.5) * w
}

fn cluster_config(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> ClusterConfig {
    // Cheap deterministic center draw in [-0.25, 0.25).
    let unit = splitmix(seed ^ 0xC0FF_EE00) as f64 / u64::MAX as f64;
    let mut center = -0.25 + 0.5 * unit;
    if cell.method == Method::Dpm {
        center = snap_to_bin_center(center, dpm_params(spec, cell).n_bins);
    }
    ClusterConfig {
        n: spec.n,
        ell: spec.ell,
        delta: cell.delta,
        omega: cell.omega,
        cluster_center: center,
        amp_magnitude_range: (1.0 / 3.0, 1.0),
        seed,
    }
}

struct MethodOutcome {
    est_nodes: Vec<f64>,
    est_amps: Vec<Complex64>,
    status: String,
    runtime_ns: u64,
}

fn run_method(
    spec: &ExperimentSpec,
    cell: &Cell,
    signal: &SpikeSignal,
    seed: u64,
) -> MethodOutcome {
    let noise_seed = splitmix(seed ^ 0x5EED_0001);
    match cell.method {
        Method::Prony => {
            let count = 2 * spec.n;
            let clean = sample_spectrum(signal, 1.0, count).expect("valid sampling");
            let noisy = add_noise(&clean, cell.eps, NoiseMode::Boundary, noise_seed)
                .expect("valid noise");
            let start = Instant::now();
            let out = prony(&noisy, spec.n);
            let runtime_ns = start.elapsed().as_nanos() as u64;
            match out {
                Ok(sol) => MethodOutcome {
                    est_nodes: sol.wrapped_nodes,
                    est_amps: sol.amplitudes,
                    status: "success".into(),
                    runtime_ns,
                },
                Err(e) => MethodOutcome {
                    est_nodes: vec![],
                    est_amps: vec![],
                    status: format!("prony-failure:{e}"),
                    runtime_ns,
                },
            }
        }
        Method::Dpm => {
            let provider = NoisySpectrum {
                signal: signal.clone(),
                eps: cell.eps,
                mode: NoiseMode::Boundary,
                seed: noise_seed,
            };
            let params = dpm_params(spec, cell);
            let start = Instant::now();
            let out = dpm(|lambda, k| provider.value(lambda, k), &params);
            let runtime_ns = start.elapsed().as_nanos() as u64;
            match out {
                Ok(res) => {
                    let status = match res.status {
                        DpmStatus::Success => "success".into(),
                        DpmStatus::EmptyCollisionSet => "empty-collision-set".into(),
                        DpmStatus::PronyFailure => "prony-failure".into(),
                    };
                    MethodOutcome {
                        est_nodes: res.est_nodes,
                        est_amps: res.est_amplitudes,
                        status,
                        runtime_ns,
                    }
                }
                Err(e) => MethodOutcome {
                    est_nodes: vec![],
                    est_amps: vec![],
                    status: format!("error:{e}"),
                    runtime_ns,
                },
            }
        }
        Method::Esprit => {
            let m_samples = cell.omega.floor() as usize + 1;
            let m_samples = m_samples.max(2 * spec.n);
            let clean = sample_spectrum(signal, 1.0, m_samples).expect("valid sampling");
            let noisy = add_noise(&clean, cell.eps, NoiseMode::Boundary, noise_seed)
                .expect("valid noise");
            let config = EspritConfig::new(m_samples, spec.n);
            let polish = spec.kind == ExperimentKind::Compare;
            let start = Instant::now();
            // In the comparison experiment both methods are finished with the
            // same least-squares polish, so they differ only in how they
            // locate the nodes, not in how the estimates are finished.
            let out = esprit(&noisy.values, &config).and_then(|est| {
                if !polish {
                    return Ok((est.nodes, est.amplitudes));
                }
                let freqs: Vec<f64> = (0..m_samples).map(|k| k as f64).collect();
                let (nodes, amps) = dpm_core::dpm::refine_fit(&freqs, &noisy.values, &est.nodes)?;
                Ok((nodes, amps))
            });
            let runtime_ns = start.elapsed().as_nanos() as u64;
            match out {
                Ok((nodes, amps)) => MethodOutcome {
                    est_nodes: nodes,
                    est_amps: amps,
                    status: "success".into(),
                    runtime_ns,
                },
                Err(e) => MethodOutcome {
                    est_nodes: vec![],
                    est_amps: vec![],
                    status: format!("esprit-failure:{e}"),
                    runtime_ns,
                },
            }
        }
    }
}

fn record_of(
    spec: &ExperimentSpec,
    cell: &Cell,
    seed: u64,
    signal: &SpikeSignal,
    outcome: MethodOutcome,
) -> TrialRecord {
    let n = spec.n;
    let params = dpm_params(spec, cell);
    let (n_lambda, n_bins) = match cell.method {
        Method::Dpm => (params.n_lambda, params.n_bins),
        _ => (0, 0),
    };
    let in_cluster: Vec<bool> = (0..n).map(|j| j < spec.ell).collect();

    let mut rec = TrialRecord {
        method: cell.method.name().into(),
        n,
        ell: spec.ell,
        delta: cell.delta,
        omega: cell.omega,
        eps: cell.eps,
        seed,
        n_lambda,
        n_bins,
        abs_node_err: vec![f64::NAN; n],
        abs_amp_err: vec![f64::NAN; n],
        k_x: vec![f64::NAN; n],
        k_alpha: vec![f64::NAN; n],
        in_cluster,
        success: vec![false; n],
        runtime_ns: outcome.runtime_ns,
        status: outcome.status.clone(),
    };
    if outcome.status != "success" || outcome.est_nodes.len() != n {
        return rec;
    }

    let matching = match match_nodes(signal.nodes(), &outcome.est_nodes) {
        Ok(m) => m,
        Err(_) => return rec,
    };
    for (i, &j) in matching.permutation.iter().enumerate() {
        rec.abs_node_err[j] = matching.distances[i];
        rec.abs_amp_err[j] = (signal.amplitudes()[j] - outcome.est_amps[i]).norm();
        if cell.eps > 0.0 {
            rec.k_x[j] = cell.omega * rec.abs_node_err[j] / cell.eps;
            rec.k_alpha[j] = rec.abs_amp_err[j] / cell.eps;
        }
    }
    rec.success = if n >= 2 {
        is_success(signal, &outcome.est_nodes).unwrap_or_else(|_| vec![false; n])
    } else {
        vec![rec.abs_node_err[0].is_finite()]
    };
    rec
}

/// Runs one trial of one cell. Public for the acceptance suite.
pub fn run_trial(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> TrialRecord {
    let config = cluster_config(spec, cell, seed);
    match make_clustered_signal(&config) {
        Ok(signal) => {
            let outcome = run_method(spec, cell, &signal, seed);
            record_of(spec, cell, seed, &signal, outcome)
        }
        Err(e) => TrialRecord {
            method: cell.method.name().into(),
            n: spec.n,
            ell: spec.ell,
            delta: cell.delta,
            omega: cell.omega,
            eps: cell.eps,
            seed,
            n_lambda: 0,
            n_bins: 0,
            abs_node_err: vec![f64::NAN; spec.n],
            abs_amp_err: vec![f64::NAN; spec.n],
            k_x: vec![f64::NAN; spec.n],
            k_alpha: vec![f64::NAN; spec.n],
            in_cluster: (0..spec.n).map(|j| j < spec.ell).collect(),
            success: vec![false; spec.n],
            runtime_ns: 0,
            status: format!("config-error:{e}"),
        },
    }
}

/// Runs the whole experiment. Trials execute on the rayon pool; the table is
/// ordered by (cell, trial) regardless of schedule.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let cells = cells_of(spec);
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let seed = child_seed(spec.master_seed, c as u64, t as u64);
            run_trial(spec, &cells[c], seed)
        })
        .collect();

    let mut rows: Vec<TrialRow> = Vec::with_capacity(records.len() * spec.n);
    for (i, rec) in records.iter().enumerate() {
        let (c, t) = jobs[i];
        let trial_id = (c * spec.trials + t) as u64;
        rows.extend(flatten(trial_id, rec));
    }
    Ok(ResultTable {
        meta: TableMeta::new(spec.echo()),
        rows,
    })
}

/// One row of a collision scan: `(λ, Δ_λ, Δ_λ > 1/n²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionRow {
    pub lambda: f64,
    pub delta_lambda: f64,
    pub avoiding: bool,
}

/// Evaluates the wrapped separation over a decimation grid.
pub fn collision_scan(signal: &SpikeSignal, grid: &DecimationGrid) -> Result<Vec<CollisionRow>> {
    let threshold = 1.0 / (signal.n() as f64).powi(2);
    grid.lambdas
        .iter()
        .map(|&lambda| {
            let delta_lambda = wrapped_separation(signal, lambda)?;
            Ok(CollisionRow {
                lambda,
                delta_lambda,
                avoiding: delta_lambda > threshold,
            })
        })
        .collect()
}

/// Collision scan with the default grid `N_λ = ⌈Ω⌉`.
pub fn collision_scan_default(signal: &SpikeSignal, omega: f64) -> Result<Vec<CollisionRow>> {
    let n_lambda = (omega.ceil() as usize).max(2);
    let grid = decimation_grid(omega, signal.n(), n_lambda)?;
    collision_scan(signal, &grid)
}
