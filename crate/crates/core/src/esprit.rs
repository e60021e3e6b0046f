//! ESPRIT baseline: Hankel signal-subspace estimation with a least-squares
//! shift-invariance solve, used for the accuracy/runtime comparison.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, lstsq, svd_parts};
use crate::prony::wrapped_node;

/// ESPRIT configuration over samples `g(0..M−1)` at unit decimation.
#[derive(Debug, Clone, Copy)]
pub struct EspritConfig {
    pub m_samples: usize,
    /// Hankel row count `L`; defaults to `⌊M/2⌋` when `None`.
    pub hankel_rows: Option<usize>,
    pub n: usize,
}

impl EspritConfig {
    pub fn new(m_samples: usize, n: usize) -> Self {
        EspritConfig {
            m_samples,
            hankel_rows: None,
            n,
        }
    }

    fn rows(&self) -> usize {
        self.hankel_rows.unwrap_or(self.m_samples / 2)
    }

    fn validate(&self) -> Result<()> {
        let (m, l, n) = (self.m_samples, self.rows(), self.n);
        if n < 1 || m < 2 * n {
            return Err(Error::invalid(format!("need M >= 2n, got M={m}, n={n}")));
        }
        if l < n || l + n > m + 1 {
            return Err(Error::invalid(format!(
                "need n <= L <= M-n+1, got L={l}, M={m}, n={n}"
            )));
        }
        if l < 2 {
            return Err(Error::invalid("need L >= 2 for the shift-invariance split"));
        }
        Ok(())
    }
}

/// Node/amplitude estimate from the ESPRIT pipeline.
#[derive(Debug, Clone)]
pub struct EspritEstimate {
    /// Wrapped nodes in `(−1/2, 1/2]`, ascending.
    pub nodes: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

/// Runs least-squares ESPRIT on `M` unit-spaced spectral samples.
pub fn esprit(moments: &[Complex64], config: &EspritConfig) -> Result<EspritEstimate> {
    config.validate()?;
    let m = config.m_samples;
    let l = config.rows();
    let n = config.n;
    if moments.len() < m {
        return Err(Error::invalid(format!(
            "need {m} samples, got {}",
            moments.len()
        )));
    }

    let cols = m - l + 1;
    let hankel = Array2::from_shape_fn((l, cols), |(i, j)| moments[i + j]);
    let (u, s, _) = svd_parts(&hankel)?;

    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&v| v > 1e-12 * smax && v > 0.0).count();
    if rank < n {
        return Err(Error::RankCollapse { rank, needed: n });
    }

    // Shift invariance on the leading n left singular vectors: solve
    // U_top F = U_bot column by column, then take eigenvalues of F.
    let u_top = Array2::from_shape_fn((l - 1, n), |(i, j)| u[(i, j)]);
    let mut f = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let rhs: Array1<Complex64> = (1..l).map(|i| u[(i, j)]).collect();
        let (col, _) = lstsq(&u_top, &rhs)?;
        for i in 0..n {
            f[(i, j)] = col[i];
        }
    }
    let psi = eigenvalues(&f)?;

    let mut nodes: Vec<f64> = psi.iter().map(|&z| wrapped_node(z)).collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Amplitudes from all M samples for best accuracy.
    let v = Array2::from_shape_fn((m, n), |(k, j)| {
        Complex64::from_polar(1.0, TAU * nodes[j] * k as f64)
    });
    let b: Array1<Complex64> = moments[..m].iter().cloned().collect();
    let (alpha, _) = lstsq(&v, &b)?;

    Ok(EspritEstimate {
        nodes,
        amplitudes: alpha.to_vec(),
    })
}
