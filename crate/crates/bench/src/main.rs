use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpm_bench::plot::{plot, PlotKind};
use dpm_bench::runner::{collision_scan_default, run_experiment};
use dpm_bench::spec::{logspace, ExperimentKind, ExperimentSpec, Method};
use dpm_bench::table::{emit, OutputFormat};
use dpm_core::error::Error;
use dpm_core::signal::{make_clustered_signal, ClusterConfig};

/// Monte-Carlo benchmarks for spike-train super-resolution methods.
#[derive(Parser)]
#[command(name = "dpm-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Node count
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Cluster size
    #[arg(long, default_value_t = 2)]
    ell: usize,
    /// Minimal separation values (comma separated for sweeps)
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Bandwidth values (comma separated for sweeps)
    #[arg(long, value_delimiter = ',')]
    omega: Vec<f64>,
    /// Noise bound values (comma separated for sweeps)
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Trials per grid cell
    #[arg(long)]
    trials: Option<usize>,
    /// Decimation grid size override
    #[arg(long)]
    nlambda: Option<usize>,
    /// Histogram bin count override
    #[arg(long)]
    nbins: Option<usize>,
    /// Master seed; all randomness derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Method: prony, dpm or esprit (repeatable via commas)
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Output table path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or jsonl
    #[arg(long, default_value = "csv")]
    format: String,
    /// Optional SVG plot path
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Error amplification vs delta at fixed omega
    SweepDelta(CommonOpts),
    /// Error amplification vs SRF (omega swept at fixed delta)
    SweepSrf(CommonOpts),
    /// Success-rate grid over (delta, eps)
    Threshold(CommonOpts),
    /// Accuracy/runtime comparison over an eps sweep
    Compare(CommonOpts),
    /// Wrapped-separation scan over the decimation grid of one signal
    CollisionScan(CommonOpts),
    /// One grid cell
    Run(CommonOpts),
}

fn methods_of(opts: &CommonOpts, default: &[Method]) -> Result<Vec<Method>, Error> {
    if opts.method.is_empty() {
        return Ok(default.to_vec());
    }
    opts.method.iter().map(|s| Method::parse(s)).collect()
}

fn spec_of(kind: ExperimentKind, opts: &CommonOpts) -> Result<ExperimentSpec, Error> {
    let (default_methods, default_trials): (&[Method], usize) = match kind {
        ExperimentKind::SweepDelta | ExperimentKind::SweepSrf => (&[Method::Prony], 200),
        ExperimentKind::Threshold => (&[Method::Prony], 20),
        ExperimentKind::Compare => (&[Method::Dpm, Method::Esprit], 50),
        ExperimentKind::SingleRun => (&[Method::Prony], 1),
    };
    let mut spec = ExperimentSpec {
        kind,
        methods: methods_of(opts, default_methods)?,
        n: opts.n,
        ell: opts.ell,
        deltas: opts.delta.clone(),
        omegas: opts.omega.clone(),
        epsilons: opts.eps.clone(),
        trials: opts.trials.unwrap_or(default_trials),
        master_seed: opts.seed,
        n_lambda: opts.nlambda,
        n_bins: opts.nbins,
    };
    // Per-experiment defaults for anything not pinned on the command line.
    match kind {
        ExperimentKind::SweepDelta => {
            if spec.deltas.is_empty() {
                spec.deltas = logspace(1e-3, 1e-1, 8);
            }
            if spec.omegas.is_empty() {
                spec.omegas = vec![(2 * spec.n - 1) as f64];
            }
        }
        ExperimentKind::SweepSrf => {
            if spec.deltas.is_empty() {
                spec.deltas = vec![10f64.powf(-3.5)];
            }
            if spec.omegas.is_empty() {
                spec.omegas = logspace(1e2, 1e3, 6);
            }
            if spec.methods == vec![Method::Prony] && opts.method.is_empty() {
                spec.methods = vec![Method::Dpm];
            }
            if spec.n_lambda.is_none() {
                spec.n_lambda = Some(10);
            }
        }
        ExperimentKind::Threshold => {
            if spec.deltas.is_empty() {
                spec.deltas = logspace(10f64.powf(-2.5), 1e-1, 6);
            }
            if spec.omegas.is_empty() {
                spec.omegas = vec![(2 * spec.n - 1) as f64];
            }
        }
        ExperimentKind::Compare => {
            if spec.deltas.is_empty() {
                spec.deltas = vec![10f64.powf(-2.8)];
            }
            if spec.omegas.is_empty() {
                spec.omegas = vec![10f64.powf(2.5)];
            }
            if spec.epsilons.is_empty() {
                spec.epsilons = logspace(10f64.powf(-3.5), 1e-2, 10);
            }
            if spec.n_lambda.is_none() {
                spec.n_lambda = Some(50);
            }
        }
        ExperimentKind::SingleRun => {
            if spec.deltas.is_empty() {
                spec.deltas = vec![1e-2];
            }
            if spec.omegas.is_empty() {
                spec.omegas = vec![(2 * spec.n - 1) as f64];
            }
            if spec.epsilons.is_empty() {
                spec.epsilons = vec![1e-8];
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn run_table_command(kind: ExperimentKind, opts: &CommonOpts) -> Result<(), (u8, String)> {
    let spec = spec_of(kind, opts).map_err(|e| (1u8, e.to_string()))?;
    let table = run_experiment(&spec).map_err(|e| (1u8, e.to_string()))?;
    eprintln!(
        "# {} rows, spec: {} (version {}, t={})",
        table.rows.len(),
        table.meta.spec_echo,
        table.meta.code_version,
        table.meta.timestamp_unix
    );
    let format = OutputFormat::parse(&opts.format).map_err(|e| (1u8, e.to_string()))?;
    match &opts.out {
        Some(path) => emit(&table, format, path).map_err(|e| (2u8, e.to_string()))?,
        None => {
            let body = match format {
                OutputFormat::Csv => dpm_bench::table::to_csv(&table),
                OutputFormat::Jsonl => dpm_bench::table::to_jsonl(&table),
            };
            print!("{body}");
        }
    }
    if let Some(path) = &opts.plot {
        let pk = match kind {
            ExperimentKind::Threshold => PlotKind::ThresholdMap,
            _ => PlotKind::LogLogScatter,
        };
        plot(&table, pk, path).map_err(|e| (2u8, e.to_string()))?;
    }
    Ok(())
}

fn run_collision_scan(opts: &CommonOpts) -> Result<(), (u8, String)> {
    let invalid = |e: Error| (1u8, e.to_string());
    let omega = opts.omega.first().copied().unwrap_or(50.0);
    let delta = opts.delta.first().copied().unwrap_or(0.5 / omega);
    let config = ClusterConfig {
        n: opts.n,
        ell: opts.ell,
        delta,
        omega,
        cluster_center: 0.0,
        amp_magnitude_range: (1.0 / 3.0, 1.0),
        seed: opts.seed,
    };
    let signal = make_clustered_signal(&config).map_err(invalid)?;
    let mut rows = Vec::new();
    let grid_rows = collision_scan_default(&signal, omega).map_err(invalid)?;
    let mut body = String::from("lambda,delta_lambda,avoiding\n");
    for r in &grid_rows {
        body.push_str(&format!(
            "{:.16e},{:.16e},{}\n",
            r.lambda, r.delta_lambda, r.avoiding
        ));
        rows.push(r);
    }
    match &opts.out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| (2u8, format!("cannot write output: {e}")))?
        }
        None => print!("{body}"),
    }
    let avoiding = grid_rows.iter().filter(|r| r.avoiding).count();
    eprintln!(
        "# {}/{} grid points collision-avoiding",
        avoiding,
        grid_rows.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SweepDelta(o) => run_table_command(ExperimentKind::SweepDelta, o),
        Command::SweepSrf(o) => run_table_command(ExperimentKind::SweepSrf, o),
        Command::Threshold(o) => run_table_command(ExperimentKind::Threshold, o),
        Command::Compare(o) => run_table_command(ExperimentKind::Compare, o),
        Command::Run(o) => run_table_command(ExperimentKind::SingleRun, o),
        Command::CollisionScan(o) => run_collision_scan(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
