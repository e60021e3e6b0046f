//! Experiment descriptions shared by the CLI and the runner.

use dpm_core::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Prony,
    Dpm,
    Esprit,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Prony => "prony",
            Method::Dpm => "dpm",
            Method::Esprit => "esprit",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "prony" => Ok(Method::Prony),
            "dpm" => Ok(Method::Dpm),
            "esprit" => Ok(Method::Esprit),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Error amplification vs Δ at fixed Ω (classical scaling panels).
    SweepDelta,
    /// Error amplification vs SRF: Ω swept at fixed Δ.
    SweepSrf,
    /// Success-rate grid over (Δ, ε) for the 50% recovery boundary.
    Threshold,
    /// Accuracy/runtime comparison of several methods over an ε sweep.
    Compare,
    /// One cell, one or more trials.
    SingleRun,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SweepDelta => "sweep-delta",
            ExperimentKind::SweepSrf => "sweep-srf",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Compare => "compare",
            ExperimentKind::SingleRun => "single-run",
        }
    }
}

/// Full description of a Monte-Carlo experiment. All randomness derives from
/// `master_seed`.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub methods: Vec<Method>,
    pub n: usize,
    pub ell: usize,
    pub deltas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub n_lambda: Option<usize>,
    pub n_bins: Option<usize>,
}

/// `count` log-spaced values between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0 && count >= 2);
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.n < 1 || self.ell < 1 || self.ell > self.n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= ell <= n, got ell={}, n={}",
                self.ell, self.n
            )));
        }
        for grid in [&self.deltas, &self.omegas, &self.epsilons] {
            if grid.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::InvalidArgument(
                    "grid values must be positive".into(),
                ));
            }
        }
        if self.deltas.is_empty() || self.omegas.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one delta and one omega".into(),
            ));
        }
        Ok(())
    }

    /// Compact echo of the spec, stored in result-table metadata.
    pub fn echo(&self) -> String {
        format!(
            "kind={} methods={} n={} ell={} deltas={:?} omegas={:?} epsilons={:?} trials={} seed={} n_lambda={:?} n_bins={:?}",
            self.kind.name(),
            self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join("+"),
            self.n,
            self.ell,
            self.deltas,
            self.omegas,
            self.epsilons,
            self.trials,
            self.master_seed,
            self.n_lambda,
            self.n_bins,
        )
    }
}
