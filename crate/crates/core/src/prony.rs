//! Classical Prony method: Hankel least squares for the Prony polynomial,
//! companion-matrix root extraction, node recovery from principal arguments,
//! and a Vandermonde least-squares solve for the amplitudes.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, lstsq};
use crate::signal::MomentSequence;

/// Residual tolerance for accepting polished polynomial roots.
const ROOT_TOL: f64 = 1e-8;

/// Output of one classical Prony solve, sorted by wrapped node.
#[derive(Debug, Clone)]
pub struct PronySolution {
    /// Roots `z̃_k` of the perturbed Prony polynomial.
    pub roots: Vec<Complex64>,
    /// `Arg(z̃_k)/2π ∈ (−1/2, 1/2]`, ascending.
    pub wrapped_nodes: Vec<f64>,
    /// Amplitudes `α̃_k`, permuted consistently with `wrapped_nodes`.
    pub amplitudes: Vec<Complex64>,
    /// (Hankel LS residual, Vandermonde LS residual).
    pub residuals: (f64, f64),
}

/// `H̃_n` with entry `(i, j) = m̃_{i+j}`, `0 ≤ i, j ≤ n−1`.
pub fn build_hankel(moments: &MomentSequence, n: usize) -> Result<Array2<Complex64>> {
    if moments.values.len() < 2 * n {
        return Err(Error::invalid(format!(
            "need at least {} moments for order {n}, got {}",
            2 * n,
            moments.values.len()
        )));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        moments.values[i + j]
    }))
}

/// Least-squares Prony polynomial coefficients:
/// `q = argmin ‖H̃_n q + col{m̃_k}_{k=n}^{2n−1}‖₂` (minimum-norm on rank
/// deficiency).
pub fn prony_polynomial_coeffs(moments: &MomentSequence, n: usize) -> Result<(Array1<Complex64>, f64)> {
    let hankel = build_hankel(moments, n)?;
    let rhs: Array1<Complex64> = moments.values[n..2 * n]
        .iter()
        .map(|v| -v)
        .collect();
    lstsq(&hankel, &rhs)
}

fn eval_monic(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    // Horner on q(z) = z^n + Σ_{j<n} q_j z^j, returning (q, q').
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All `n` roots of the monic polynomial `z^n + Σ q_j z^j` via companion-matrix
/// eigenvalues, each polished by one Newton step.
pub fn polynomial_roots(monic_coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = monic_coeffs.len();
    if n == 0 {
        return Err(Error::invalid("empty polynomial"));
    }
    let mut companion = Array2::<Complex64>::zeros((n, n));
    for i in 1..n {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -monic_coeffs[i];
    }
    let mut roots = eigenvalues(&companion)?;

    for r in roots.iter_mut() {
        let (p, dp) = eval_monic(monic_coeffs, *r);
        if dp.norm() > 0.0 {
            let step = p / dp;
            if step.norm().is_finite() {
                let candidate = *r - step;
                let (pc, _) = eval_monic(monic_coeffs, candidate);
                if pc.norm() <= p.norm() {
                    *r = candidate;
                }
            }
        }
    }

    let scale = monic_coeffs
        .iter()
        .map(|c| c.norm())
        .fold(1.0f64, f64::max);
    let max_residual = roots
        .iter()
        .map(|&r| eval_monic(monic_coeffs, r).0.norm())
        .fold(0.0f64, f64::max);
    if max_residual > ROOT_TOL * scale {
        return Err(Error::RootFinding {
            max_residual,
            best: roots,
        });
    }
    Ok(roots)
}

/// Solves `argmin ‖Ṽα − rhs‖₂` with `Ṽ_{i,k} = z̃_k^i`, `i = 0..n−1`.
pub fn solve_vandermonde_ls(
    roots: &[Complex64],
    rhs: &[Complex64],
) -> Result<(Vec<Complex64>, f64)> {
    let n = roots.len();
    if rhs.len() != n {
        return Err(Error::invalid("rhs length must match root count"));
    }
    let mut v = Array2::<Complex64>::zeros((n, n));
    for (k, &z) in roots.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for i in 0..n {
            v[(i, k)] = p;
            p *= z;
        }
    }
    let b: Array1<Complex64> = rhs.iter().cloned().collect();
    let (alpha, resid) = lstsq(&v, &b)?;
    Ok((alpha.to_vec(), resid))
}

/// Principal-argument node of a root, mapped into `(−1/2, 1/2]`.
pub fn wrapped_node(root: Complex64) -> f64 {
    let y = root.arg() / TAU;
    if y <= -0.5 {
        y + 1.0
    } else {
        y
    }
}

/// Runs the classical Prony method on `2n` moments.
pub fn prony(moments: &MomentSequence, n: usize) -> Result<PronySolution> {
    if n < 1 {
        return Err(Error::invalid("model order must be >= 1"));
    }
    if moments.values.len() < 2 * n {
        return Err(Error::invalid(format!(
            "need {} moments for order {n}, got {}",
            2 * n,
            moments.values.len()
        )));
    }
    if moments.values.len() > 2 * n {
        log::warn!(
            "prony: ignoring {} extra moments beyond 2n = {}",
            moments.values.len() - 2 * n,
            2 * n
        );
    }

    let (coeffs, hankel_resid) = prony_polynomial_coeffs(moments, n)?;
    let roots = polynomial_roots(coeffs.as_slice().expect("contiguous"))?;
    let (amplitudes, vand_resid) = solve_vandermonde_ls(&roots, &moments.values[..n])?;

    let mut order: Vec<usize> = (0..n).collect();
    let wrapped: Vec<f64> = roots.iter().map(|&z| wrapped_node(z)).collect();
    order.sort_by(|&a, &b| wrapped[a].partial_cmp(&wrapped[b]).unwrap());

    Ok(PronySolution {
        roots: order.iter().map(|&i| roots[i]).collect(),
        wrapped_nodes: order.iter().map(|&i| wrapped[i]).collect(),
        amplitudes: order.iter().map(|&i| amplitudes[i]).collect(),
        residuals: (hankel_resid, vand_resid),
    })
}
