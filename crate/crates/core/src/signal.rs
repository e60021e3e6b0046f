//! Spike-train signals, clustered configurations and spectral sampling.
//!
//! A signal is a finite impulse train `f(x) = Σ_k α_k δ(x − x_k)` with nodes
//! `x_k ∈ [−1/2, 1/2]` and complex amplitudes `α_k`. Its spectrum is sampled
//! on decimated grids `{λk}` and perturbed by bounded noise.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Ground-truth impulse train: distinct nodes in `[−1/2, 1/2]` with nonzero
/// complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSignal {
    nodes: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl SpikeSignal {
    pub fn new(nodes: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != amplitudes.len() {
            return Err(Error::invalid(format!(
                "need equal nonzero counts of nodes and amplitudes, got {} and {}",
                nodes.len(),
                amplitudes.len()
            )));
        }
        for &x in &nodes {
            if !(-0.5..=0.5).contains(&x) || !x.is_finite() {
                return Err(Error::invalid(format!("node {x} outside [-1/2, 1/2]")));
            }
        }
        for (i, &xi) in nodes.iter().enumerate() {
            for &xj in nodes.iter().skip(i + 1) {
                if circular_distance(xi, xj) == 0.0 {
                    return Err(Error::invalid(format!("coincident nodes at {xi}")));
                }
            }
        }
        if amplitudes.iter().any(|a| a.norm() == 0.0) {
            return Err(Error::invalid("zero amplitude"));
        }
        Ok(Self { nodes, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Parameters of a clustered node configuration: one cluster of `ell`
/// equispaced nodes at spacing `delta`, plus `n − ell` well-separated
/// singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub n: usize,
    pub ell: usize,
    pub delta: f64,
    pub omega: f64,
    pub cluster_center: f64,
    pub amp_magnitude_range: (f64, f64),
    pub seed: u64,
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.ell < 1 || self.ell > self.n {
            return Err(Error::invalid(format!(
                "cluster size ell={} must satisfy 1 <= ell <= n={}",
                self.ell, self.n
            )));
        }
        if !(self.delta > 0.0) || !(self.omega > 0.0) {
            return Err(Error::invalid("delta and omega must be positive"));
        }
        if self.delta * (self.ell as f64 - 1.0) >= 1.0 {
            return Err(Error::invalid("cluster span exceeds the unit interval"));
        }
        if !(-0.5..=0.5).contains(&self.cluster_center) {
            return Err(Error::invalid("cluster_center outside [-1/2, 1/2]"));
        }
        let (lo, hi) = self.amp_magnitude_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::invalid("amp_magnitude_range must be positive"));
        }
        Ok(())
    }

    /// Super-resolution factor `SRF = 1/(ΩΔ)`.
    pub fn srf(&self) -> f64 {
        1.0 / (self.omega * self.delta)
    }
}

/// Spectral samples `m̃_k = g(λk)` at decimation step `λ`, with known noise
/// bound `ε` (`ε = 0` for exact samples).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    pub lambda: f64,
    pub values: Vec<Complex64>,
    pub eps: f64,
}

/// Shape of the bounded perturbation applied to spectral samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// `|e_k| = ε` exactly, uniform i.i.d. phase. Default: puts the noise on
    /// the `‖·‖_∞` boundary so amplification factors are directly comparable.
    Boundary,
    /// `e_k` uniform over the disk of radius `ε`.
    UniformDisk,
}

/// Distance on the periodized interval: `min(|a−b|, 1−|a−b|)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Minimal pairwise circular distance `Δ` of a signal's nodes.
pub fn min_separation(signal: &SpikeSignal) -> Result<f64> {
    let nodes = signal.nodes();
    if nodes.len() < 2 {
        return Err(Error::invalid("min_separation needs at least 2 nodes"));
    }
    let mut best = f64::INFINITY;
    for (i, &xi) in nodes.iter().enumerate() {
        for &xj in nodes.iter().skip(i + 1) {
            best = best.min(circular_distance(xi, xj));
        }
    }
    Ok(best)
}

/// Exact spectral sample `g(λk) = Σ_j α_j e^{2πj x_j λ k}`.
pub fn spectrum_value(signal: &SpikeSignal, omega: f64) -> Complex64 {
    signal
        .nodes()
        .iter()
        .zip(signal.amplitudes())
        .map(|(&x, &a)| a * Complex64::from_polar(1.0, TAU * x * omega))
        .sum()
}

/// Noiseless decimated samples `{g(λk)}_{k=0}^{count−1}`.
pub fn sample_spectrum(signal: &SpikeSignal, lambda: f64, count: usize) -> Result<MomentSequence> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    if count < 1 {
        return Err(Error::invalid("count must be >= 1"));
    }
    let values = (0..count)
        .map(|k| spectrum_value(signal, lambda * k as f64))
        .collect();
    Ok(MomentSequence {
        lambda,
        values,
        eps: 0.0,
    })
}

fn draw_perturbation(rng: &mut impl Rng, eps: f64, mode: NoiseMode) -> Complex64 {
    let phase = rng.gen_range(0.0..TAU);
    let radius = match mode {
        NoiseMode::Boundary => eps,
        NoiseMode::UniformDisk => eps * rng.gen_range(0.0f64..=1.0).sqrt(),
    };
    Complex64::from_polar(radius, phase)
}

/// Perturbs each sample by a bounded complex noise term, `‖e‖_∞ ≤ ε`.
/// Deterministic given `rng_seed`.
pub fn add_noise(
    moments: &MomentSequence,
    eps: f64,
    mode: NoiseMode,
    rng_seed: u64,
) -> Result<MomentSequence> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("eps must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let values = moments
        .values
        .iter()
        .map(|&v| {
            if eps == 0.0 {
                v
            } else {
                v + draw_perturbation(&mut rng, eps, mode)
            }
        })
        .collect();
    Ok(MomentSequence {
        lambda: moments.lambda,
        values,
        eps,
    })
}

/// Wraps a position into `[−1/2, 1/2)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = (x + 0.5).rem_euclid(1.0) - 0.5;
    if w == 0.5 {
        -0.5
    } else {
        w
    }
}

/// Builds a clustered signal: `ell` cluster nodes at `cluster_center + jΔ`
/// and `n − ell` singletons equispaced on the remaining arc, each at circular
/// distance at least `2/Ω` from the cluster and from one another.
pub fn make_clustered_signal(config: &ClusterConfig) -> Result<SpikeSignal> {
    config.validate()?;
    let ClusterConfig {
        n,
        ell,
        delta,
        omega,
        cluster_center,
        ..
    } = *config;

    let span = delta * (ell as f64 - 1.0);
    if cluster_center + span > 0.5 {
        return Err(Error::invalid(
            "cluster does not fit in [-1/2, 1/2] at this center",
        ));
    }

    let mut nodes: Vec<f64> = (0..ell).map(|j| cluster_center + j as f64 * delta).collect();

    let singles = n - ell;
    if singles > 0 {
        let margin = 2.0 / omega;
        let arc_len = 1.0 - span - 2.0 * margin;
        let step = arc_len / singles as f64;
        if arc_len <= 0.0 || (singles > 1 && step < margin) {
            return Err(Error::invalid(
                "singleton layout does not fit: free arc too short for the 2/omega margins",
            ));
        }
        let start = cluster_center + span + margin;
        for i in 0..singles {
            nodes.push(wrap_unit(start + (i as f64 + 0.5) * step));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.amp_magnitude_range;
    let amplitudes = (0..n)
        .map(|_| {
            let modulus = rng.gen_range(lo..=hi);
            let phase = rng.gen_range(0.0..TAU);
            Complex64::from_polar(modulus, phase)
        })
        .collect();

    SpikeSignal::new(nodes, amplitudes)
}

/// Deterministic noisy oracle for `g(λk)`, usable at arbitrary `λ`.
///
/// Each queried frequency gets an independent perturbation derived from
/// `(seed, λ, k)`, so repeated queries are consistent and the whole object is
/// reproducible.
#[derive(Debug, Clone)]
pub struct NoisySpectrum {
    pub signal: SpikeSignal,
    pub eps: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoisySpectrum {
    pub fn value(&self, lambda: f64, k: usize) -> Complex64 {
        let exact = spectrum_value(&self.signal, lambda * k as f64);
        if self.eps == 0.0 {
            return exact;
        }
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&lambda.to_bits().to_le_bytes());
        key[16..24].copy_from_slice(&(k as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        exact + draw_perturbation(&mut rng, self.eps, self.mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_node_signal() -> SpikeSignal {
        SpikeSignal::new(
            vec![-0.125, 0.125],
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn spectrum_at_zero_is_amplitude_sum() {
        let s = SpikeSignal::new(
            vec![0.1, -0.3],
            vec![Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.5)],
        )
        .unwrap();
        let m = sample_spectrum(&s, 1.0, 1).unwrap();
        assert_abs_diff_eq!(m.values[0].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.values[0].im, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_single_node_quarter() {
        let s = SpikeSignal::new(vec![0.25], vec![Complex64::new(2.0, 0.0)]).unwrap();
        let m = sample_spectrum(&s, 1.0, 2).unwrap();
        assert_abs_diff_eq!(m.values[1].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.values[1].im, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_symmetric_pair_is_cosine() {
        let m = sample_spectrum(&two_node_signal(), 1.0, 4).unwrap();
        let expected = [2.0, std::f64::consts::SQRT_2, 0.0, -std::f64::consts::SQRT_2];
        for (v, e) in m.values.iter().zip(expected) {
            assert_abs_diff_eq!(v.re, e, epsilon = 1e-14);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sample_spectrum_rejects_bad_args() {
        let s = two_node_signal();
        assert!(sample_spectrum(&s, 0.0, 4).is_err());
        assert!(sample_spectrum(&s, 1.0, 0).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let m = sample_spectrum(&two_node_signal(), 1.0, 4).unwrap();
        let noisy = add_noise(&m, 0.0, NoiseMode::Boundary, 7).unwrap();
        assert_eq!(m.values, noisy.values);
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let m = sample_spectrum(&two_node_signal(), 1.0, 4).unwrap();
        let a = add_noise(&m, 1e-3, NoiseMode::UniformDisk, 42).unwrap();
        let b = add_noise(&m, 1e-3, NoiseMode::UniformDisk, 42).unwrap();
        assert_eq!(a.values, b.values);
        for (x, y) in m.values.iter().zip(&a.values) {
            assert!((x - y).norm() <= 1e-3 + 1e-15);
        }
    }

    #[test]
    fn boundary_noise_sits_on_the_sphere() {
        let m = sample_spectrum(&two_node_signal(), 1.0, 4).unwrap();
        let a = add_noise(&m, 1e-2, NoiseMode::Boundary, 3).unwrap();
        for (x, y) in m.values.iter().zip(&a.values) {
            assert_abs_diff_eq!((x - y).norm(), 1e-2, epsilon = 1e-14);
        }
    }

    #[test]
    fn circular_distance_cases() {
        assert_abs_diff_eq!(circular_distance(0.1, 0.3), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(circular_distance(-0.49, 0.49), 0.02, epsilon = 1e-15);
        assert_eq!(circular_distance(0.37, 0.37), 0.0);
    }

    #[test]
    fn min_separation_cases() {
        let s = SpikeSignal::new(
            vec![0.0, 0.1, 0.4],
            vec![Complex64::new(1.0, 0.0); 3],
        )
        .unwrap();
        assert_abs_diff_eq!(min_separation(&s).unwrap(), 0.1, epsilon = 1e-15);
        let s = SpikeSignal::new(
            vec![-0.45, 0.45],
            vec![Complex64::new(1.0, 0.0); 2],
        )
        .unwrap();
        assert_abs_diff_eq!(min_separation(&s).unwrap(), 0.1, epsilon = 1e-15);
        let single = SpikeSignal::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(min_separation(&single).is_err());
    }

    fn config(n: usize, ell: usize, delta: f64, omega: f64) -> ClusterConfig {
        ClusterConfig {
            n,
            ell,
            delta,
            omega,
            cluster_center: 0.0,
            amp_magnitude_range: (1.0 / 3.0, 1.0),
            seed: 11,
        }
    }

    #[test]
    fn two_node_cluster_layout() {
        let s = make_clustered_signal(&config(2, 2, 0.1, 10.0)).unwrap();
        assert_abs_diff_eq!(s.nodes()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.nodes()[1], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn singletons_stay_clear_of_the_cluster() {
        let cfg = config(3, 2, 0.01, 20.0);
        let s = make_clustered_signal(&cfg).unwrap();
        let margin = 2.0 / cfg.omega;
        for &single in &s.nodes()[2..] {
            for &cl in &s.nodes()[..2] {
                assert!(circular_distance(single, cl) >= margin - 1e-12);
            }
        }
        assert_abs_diff_eq!(min_separation(&s).unwrap(), cfg.delta, epsilon = 1e-12);
    }

    #[test]
    fn clustered_signal_is_seed_deterministic() {
        let a = make_clustered_signal(&config(4, 2, 0.01, 30.0)).unwrap();
        let b = make_clustered_signal(&config(4, 2, 0.01, 30.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_layout_is_rejected() {
        // 6 singletons each needing 2/omega of arc cannot fit at omega = 10.
        assert!(make_clustered_signal(&config(8, 2, 0.01, 10.0)).is_err());
    }

    #[test]
    fn noisy_spectrum_is_reproducible() {
        let p = NoisySpectrum {
            signal: two_node_signal(),
            eps: 1e-4,
            mode: NoiseMode::Boundary,
            seed: 5,
        };
        assert_eq!(p.value(1.25, 3), p.value(1.25, 3));
        let exact = spectrum_value(&p.signal, 1.25 * 3.0);
        assert_abs_diff_eq!((p.value(1.25, 3) - exact).norm(), 1e-4, epsilon = 1e-16);
    }
}
