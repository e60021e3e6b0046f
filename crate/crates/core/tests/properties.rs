//! Cross-module property tests: exact recovery, alias-set oracles, noise
//! bounds, and candidate presence for collision-avoiding decimation factors.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dpm_core::dpm::{aliased_solutions, decimation_grid};
use dpm_core::metrics::match_nodes;
use dpm_core::prony::prony;
use dpm_core::signal::{
    add_noise, circular_distance, make_clustered_signal, sample_spectrum, spectrum_value,
    wrap_unit, ClusterConfig, NoiseMode, NoisySpectrum, SpikeSignal,
};

fn random_signal(rng: &mut ChaCha8Rng, n: usize, min_sep: f64) -> SpikeSignal {
    let nodes = loop {
        let cand: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let ok = (0..n)
            .all(|i| (0..n).all(|j| i == j || circular_distance(cand[i], cand[j]) >= min_sep));
        if ok {
            break cand;
        }
    };
    let amps = (0..n)
        .map(|_| {
            Complex64::from_polar(
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    SpikeSignal::new(nodes, amps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prony_recovers_random_noiseless_signals(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal = random_signal(&mut rng, n, 0.05);
        let moments = sample_spectrum(&signal, 1.0, 2 * n).unwrap();
        let sol = prony(&moments, n).unwrap();
        let m = match_nodes(signal.nodes(), &sol.wrapped_nodes).unwrap();
        for (i, &j) in m.permutation.iter().enumerate() {
            prop_assert!(m.distances[i] <= 1e-9);
            prop_assert!((signal.amplitudes()[j] - sol.amplitudes[i]).norm() <= 1e-8);
        }
    }

    #[test]
    fn aliased_solutions_match_bruteforce(lambda in 0.1f64..40.0, y in -0.5f64..0.5) {
        let mut fast: Vec<f64> = aliased_solutions(lambda, &[y])
            .candidates
            .iter()
            .map(|&(_, t)| t)
            .collect();
        fast.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let span = lambda.ceil() as i64 + 2;
        let mut brute: Vec<f64> = (-span..=span)
            .map(|m| (y + m as f64) / lambda)
            .filter(|t| t.abs() <= 0.5)
            .collect();
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(fast, brute);
    }

    #[test]
    fn spectrum_is_linear(seed in any::<u64>(), omega in -30.0f64..30.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_signal(&mut rng, 2, 0.05);
        let b = random_signal(&mut rng, 3, 0.05);
        let mut nodes = a.nodes().to_vec();
        nodes.extend_from_slice(b.nodes());
        let mut amps = a.amplitudes().to_vec();
        amps.extend_from_slice(b.amplitudes());
        let sum = SpikeSignal::new(nodes, amps).unwrap();
        let lhs = spectrum_value(&sum, omega);
        let rhs = spectrum_value(&a, omega) + spectrum_value(&b, omega);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
}

#[test]
fn noise_respects_sup_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50u64 {
        let signal = random_signal(&mut rng, 3, 0.05);
        let clean = sample_spectrum(&signal, 2.0, 6).unwrap();
        let eps = 10f64.powf(rng.gen_range(-6.0..-1.0));

        // Recovering e = (g+e) − g cancels against |g|, so the achievable
        // absolute accuracy is on the order of ulp(|g|).
        let tol = |c: &Complex64| 1e-13 * (1.0 + c.norm());
        let boundary = add_noise(&clean, eps, NoiseMode::Boundary, trial).unwrap();
        for (c, d) in clean.values.iter().zip(&boundary.values) {
            assert!(((c - d).norm() - eps).abs() <= tol(c));
        }
        let disk = add_noise(&clean, eps, NoiseMode::UniformDisk, trial).unwrap();
        for (c, d) in clean.values.iter().zip(&disk.values) {
            assert!((c - d).norm() <= eps + tol(c));
        }

        // The lazy oracle obeys the same bound and is query-consistent.
        let oracle = NoisySpectrum {
            signal: signal.clone(),
            eps,
            mode: NoiseMode::Boundary,
            seed: trial,
        };
        for k in 0..6 {
            let v = oracle.value(2.0, k);
            assert_eq!(v, oracle.value(2.0, k));
            let exact = spectrum_value(&signal, 2.0 * k as f64);
            let diff = (v - exact).norm();
            assert!((diff - eps).abs() <= 1e-13 * (1.0 + exact.norm()));
        }
    }
}

/// For noiseless clustered inputs and collision-avoiding λ (wrapped node
/// separation above 1/n² radians), the aliased candidate set contains every
/// true node to within numerical accuracy.
#[test]
fn candidate_presence_for_collision_avoiding_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..25 {
        let n = rng.gen_range(2..=4usize);
        let ell = rng.gen_range(2..=n);
        let delta = 10f64.powf(rng.gen_range(-3.0..-2.0));
        let omega = rng.gen_range(0.3..0.9) / delta;
        let config = ClusterConfig {
            n,
            ell,
            delta,
            omega,
            cluster_center: rng.gen_range(-0.25..0.25),
            amp_magnitude_range: (1.0 / 3.0, 1.0),
            seed: rng.gen(),
        };
        let signal = make_clustered_signal(&config).unwrap();
        let grid = decimation_grid(omega, n, 20).unwrap();
        let mut used = 0usize;
        for &lambda in &grid.lambdas {
            let wrapped: Vec<f64> = signal.nodes().iter().map(|&x| wrap_unit(lambda * x)).collect();
            let sep = (0..n)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .map(|(i, j)| circular_distance(wrapped[i], wrapped[j]) * std::f64::consts::TAU)
                .fold(f64::INFINITY, f64::min);
            if sep <= 1.0 / (n as f64).powi(2) {
                continue;
            }
            used += 1;
            let moments = sample_spectrum(&signal, lambda, 2 * n).unwrap();
            let sol = prony(&moments, n).unwrap();
            let set = aliased_solutions(lambda, &sol.wrapped_nodes);
            for &x in signal.nodes() {
                let nearest = set
                    .candidates
                    .iter()
                    .map(|&(_, t)| circular_distance(t, x))
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    nearest <= 1e-8,
                    "node {x} missing from X_lambda at lambda={lambda} (nearest {nearest:.2e})"
                );
            }
        }
        assert!(used > 0, "no collision-avoiding lambda found");
    }
}
