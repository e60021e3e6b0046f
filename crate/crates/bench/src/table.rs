//! Flat result tables with CSV/JSONL persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dpm_core::error::{Error, Result};
use dpm_core::metrics::TrialRecord;

pub const CSV_HEADER: &str = "trial_id,method,n,ell,delta,omega,eps,srf,n_lambda,n_bins,node_index,in_cluster,abs_node_err,abs_amp_err,k_x,k_alpha,success,status,runtime_ns,seed";

/// One table row: a single node of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial_id: u64,
    pub method: String,
    pub n: usize,
    pub ell: usize,
    pub delta: f64,
    pub omega: f64,
    pub eps: f64,
    pub srf: f64,
    pub n_lambda: usize,
    pub n_bins: usize,
    pub node_index: usize,
    pub in_cluster: bool,
    pub abs_node_err: f64,
    pub abs_amp_err: f64,
    pub k_x: f64,
    pub k_alpha: f64,
    pub success: bool,
    pub status: String,
    pub runtime_ns: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TableMeta {
    pub spec_echo: String,
    pub code_version: String,
    pub timestamp_unix: u64,
}

impl TableMeta {
    pub fn new(spec_echo: String) -> Self {
        TableMeta {
            spec_echo,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub meta: TableMeta,
    pub rows: Vec<TrialRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

/// Flattens a trial record into one row per node.
pub fn flatten(trial_id: u64, rec: &TrialRecord) -> Vec<TrialRow> {
    let srf = 1.0 / (rec.omega * rec.delta);
    (0..rec.n)
        .map(|j| TrialRow {
            trial_id,
            method: rec.method.clone(),
            n: rec.n,
            ell: rec.ell,
            delta: rec.delta,
            omega: rec.omega,
            eps: rec.eps,
            srf,
            n_lambda: rec.n_lambda,
            n_bins: rec.n_bins,
            node_index: j,
            in_cluster: rec.in_cluster.get(j).copied().unwrap_or(false),
            abs_node_err: rec.abs_node_err.get(j).copied().unwrap_or(f64::NAN),
            abs_amp_err: rec.abs_amp_err.get(j).copied().unwrap_or(f64::NAN),
            k_x: rec.k_x.get(j).copied().unwrap_or(f64::NAN),
            k_alpha: rec.k_alpha.get(j).copied().unwrap_or(f64::NAN),
            success: rec.success.get(j).copied().unwrap_or(false),
            status: rec.status.clone(),
            runtime_ns: rec.runtime_ns,
            seed: rec.seed,
        })
        .collect()
}

/// 17 significant digits, round-trip exact for f64.
fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_float_json(x: f64) -> String {
    if x.is_nan() {
        "null".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_csv(table: &ResultTable) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.method,
            r.n,
            r.ell,
            fmt_float(r.delta),
            fmt_float(r.omega),
            fmt_float(r.eps),
            fmt_float(r.srf),
            r.n_lambda,
            r.n_bins,
            r.node_index,
            r.in_cluster,
            fmt_float(r.abs_node_err),
            fmt_float(r.abs_amp_err),
            fmt_float(r.k_x),
            fmt_float(r.k_alpha),
            r.success,
            r.status,
            r.runtime_ns,
            r.seed
        );
    }
    out
}

pub fn to_jsonl(table: &ResultTable) -> String {
    let mut out = String::new();
    for r in &table.rows {
        let _ = writeln!(
            out,
            concat!(
                "{{\"trial_id\":{},\"method\":\"{}\",\"n\":{},\"ell\":{},",
                "\"delta\":{},\"omega\":{},\"eps\":{},\"srf\":{},",
                "\"n_lambda\":{},\"n_bins\":{},\"node_index\":{},\"in_cluster\":{},",
                "\"abs_node_err\":{},\"abs_amp_err\":{},\"k_x\":{},\"k_alpha\":{},",
                "\"success\":{},\"status\":\"{}\",\"runtime_ns\":{},\"seed\":{}}}"
            ),
            r.trial_id,
            r.method,
            r.n,
            r.ell,
            fmt_float_json(r.delta),
            fmt_float_json(r.omega),
            fmt_float_json(r.eps),
            fmt_float_json(r.srf),
            r.n_lambda,
            r.n_bins,
            r.node_index,
            r.in_cluster,
            fmt_float_json(r.abs_node_err),
            fmt_float_json(r.abs_amp_err),
            fmt_float_json(r.k_x),
            fmt_float_json(r.k_alpha),
            r.success,
            r.status,
            r.runtime_ns,
            r.seed
        );
    }
    out
}

/// Writes the table to `path` in the requested format.
pub fn emit(table: &ResultTable, format: OutputFormat, path: &Path) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => to_csv(table),
        OutputFormat::Jsonl => to_jsonl(table),
    };
    fs::write(path, body)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> TrialRow {
        TrialRow {
            trial_id: 0,
            method: "prony".into(),
            n: 3,
            ell: 2,
            delta: 0.01,
            omega: 5.0,
            eps: 1e-8,
            srf: 20.0,
            n_lambda: 0,
            n_bins: 0,
            node_index: 1,
            in_cluster: true,
            abs_node_err: 1.25e-7,
            abs_amp_err: 3.0e-6,
            k_x: 62.5,
            k_alpha: 300.0,
            success: true,
            status: "success".into(),
            runtime_ns: 12345,
            seed: 42,
        }
    }

    fn table(rows: Vec<TrialRow>) -> ResultTable {
        ResultTable {
            meta: TableMeta::new("test".into()),
            rows,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(to_csv(&table(vec![])), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_is_two_lines() {
        let csv = to_csv(&table(vec![row()]));
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,prony,3,2,"));
    }

    #[test]
    fn floats_carry_17_significant_digits() {
        let csv = to_csv(&table(vec![row()]));
        let field = csv.lines().nth(1).unwrap().split(',').nth(12).unwrap();
        let mantissa = field.split('e').next().unwrap();
        assert_eq!(mantissa.len(), "1.2499999999999999".len(), "{field}");
        assert_eq!(field.parse::<f64>().unwrap(), 1.25e-7);
    }
}
