//! Small complex linear-algebra helpers shared by the estimators.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative rank tolerance for the minimum-norm least-squares fallback.
pub const RANK_RTOL: f64 = 1e-12;

/// Minimum-norm least squares via SVD: returns `argmin ‖Ax − b‖₂` together
/// with the residual norm. Singular values below `RANK_RTOL·σ_max` are
/// treated as zero.
pub fn lstsq(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<(Array1<Complex64>, f64)> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::invalid(format!(
            "lstsq shape mismatch: {m}x{n} vs rhs {}",
            b.len()
        )));
    }
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| Error::Backend(format!("svd: {e}")))?;
    let u = u.expect("svd with u requested");
    let vt = vt.expect("svd with vt requested");
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let tol = RANK_RTOL * smax;

    // x = V Σ⁺ Uᴴ b
    let mut x = Array1::<Complex64>::zeros(n);
    for (i, &sigma) in s.iter().enumerate() {
        if sigma <= tol || sigma == 0.0 {
            continue;
        }
        let mut coeff = Complex64::new(0.0, 0.0);
        for r in 0..m {
            coeff += u[(r, i)].conj() * b[r];
        }
        coeff /= sigma;
        for c in 0..n {
            x[c] += vt[(i, c)].conj() * coeff;
        }
    }

    let mut resid = 0.0f64;
    for r in 0..m {
        let mut acc = -b[r];
        for c in 0..n {
            acc += a[(r, c)] * x[c];
        }
        resid += acc.norm_sqr();
    }
    Ok((x, resid.sqrt()))
}

/// Eigenvalues of a general complex square matrix.
pub fn eigenvalues(a: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    let (vals, _) = a
        .eig()
        .map_err(|e| Error::Backend(format!("eig: {e}")))?;
    Ok(vals.to_vec())
}

/// Singular value decomposition `A = U Σ Vᴴ` (thin factors).
pub fn svd_parts(
    a: &Array2<Complex64>,
) -> Result<(Array2<Complex64>, Vec<f64>, Array2<Complex64>)> {
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| Error::Backend(format!("svd: {e}")))?;
    Ok((
        u.expect("svd with u requested"),
        s.to_vec(),
        vt.expect("svd with vt requested"),
    ))
}
