//! End-to-end checks of the bench harness: serialization round-trips,
//! run-level determinism, and plot output.

use dpm_bench::plot::{plot, PlotKind};
use dpm_bench::runner::run_experiment;
use dpm_bench::spec::{ExperimentKind, ExperimentSpec, Method};
use dpm_bench::table::{to_csv, to_jsonl, TrialRow, CSV_HEADER};

fn tiny_spec() -> ExperimentSpec {
    ExperimentSpec {
        kind: ExperimentKind::SweepDelta,
        methods: vec![Method::Prony, Method::Dpm],
        n: 3,
        ell: 2,
        deltas: vec![1e-2, 3e-3],
        omegas: vec![5.0],
        epsilons: vec![],
        trials: 3,
        master_seed: 17,
        n_lambda: None,
        n_bins: None,
    }
}

#[test]
fn jsonl_round_trip_matches_rows() {
    let table = run_experiment(&tiny_spec()).unwrap();
    let jsonl = to_jsonl(&table);
    let lines: Vec<&str> = jsonl.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), table.rows.len());
    for (line, row) in lines.iter().zip(&table.rows) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["trial_id"].as_u64().unwrap(), row.trial_id);
        assert_eq!(v["method"].as_str().unwrap(), row.method);
        assert_eq!(v["n"].as_u64().unwrap() as usize, row.n);
        // Floats are emitted with 16 significant digits, so allow one ulp.
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs().max(1.0);
        assert!(close(v["delta"].as_f64().unwrap(), row.delta));
        assert!(close(v["eps"].as_f64().unwrap(), row.eps));
        assert_eq!(v["success"].as_bool().unwrap(), row.success);
        assert_eq!(v["status"].as_str().unwrap(), row.status);
        match v["k_x"].as_f64() {
            Some(kx) => assert!(close(kx, row.k_x)),
            None => assert!(!row.k_x.is_finite()),
        }
    }
}

#[test]
fn csv_has_stable_header_and_shape() {
    let table = run_experiment(&tiny_spec()).unwrap();
    let csv = to_csv(&table);
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    let expected_cols = CSV_HEADER.split(',').count();
    let mut data_rows = 0;
    for line in lines {
        assert_eq!(line.split(',').count(), expected_cols);
        data_rows += 1;
    }
    assert_eq!(data_rows, table.rows.len());
}

#[test]
fn experiment_is_deterministic_up_to_runtime() {
    let strip = |rows: &[TrialRow]| -> Vec<TrialRow> {
        rows.iter()
            .map(|r| TrialRow {
                runtime_ns: 0,
                ..r.clone()
            })
            .collect()
    };
    let a = run_experiment(&tiny_spec()).unwrap();
    let b = run_experiment(&tiny_spec()).unwrap();
    assert_eq!(to_csv_rows(&strip(&a.rows)), to_csv_rows(&strip(&b.rows)));

    let mut other = tiny_spec();
    other.master_seed = 18;
    let c = run_experiment(&other).unwrap();
    assert_ne!(to_csv_rows(&strip(&a.rows)), to_csv_rows(&strip(&c.rows)));
}

fn to_csv_rows(rows: &[TrialRow]) -> Vec<String> {
    rows.iter().map(|r| format!("{r:?}")).collect()
}

#[test]
fn plots_render_nonempty_svg() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec();
    spec.deltas = vec![1e-2, 5e-3, 3e-3];
    let table = run_experiment(&spec).unwrap();
    let path = dir.path().join("scatter.svg");
    plot(&table, PlotKind::LogLogScatter, &path).unwrap();
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("slope="));

    let mut spec = tiny_spec();
    spec.kind = ExperimentKind::Threshold;
    spec.methods = vec![Method::Prony];
    spec.deltas = dpm_bench::spec::logspace(10f64.powf(-2.5), 1e-1, 6);
    spec.trials = 5;
    let table = run_experiment(&spec).unwrap();
    let path = dir.path().join("threshold.svg");
    plot(&table, PlotKind::ThresholdMap, &path).unwrap();
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.contains("boundary slope="));
}
