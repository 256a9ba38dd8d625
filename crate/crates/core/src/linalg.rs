//! Dense linear-algebra helpers on top of `faer`.
//!
//! Factorizations run single-threaded; callers parallelize around them.

use faer::{Mat, MatRef, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Inner product with four independent accumulators. The summation order
/// depends only on the slice length, so `dot(a, b) == dot(b, a)` bit for bit.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Flips the sign of column `j` so that its entry of largest magnitude is
/// positive (ties go to the smallest row index). Returns whether it flipped.
pub fn fix_column_sign(m: &mut Mat<f64>, j: usize) -> bool {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for i in 0..m.nrows() {
        let a = m[(i, j)].abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if m.nrows() > 0 && m[(best, j)] < 0.0 {
        for i in 0..m.nrows() {
            m[(i, j)] = -m[(i, j)];
        }
        true
    } else {
        false
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in nonincreasing
/// order, each eigenvector sign-fixed by [`fix_column_sign`].
pub fn sym_eigen_desc(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Convergence(format!("symmetric eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let mut vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    for j in 0..n {
        fix_column_sign(&mut vectors, j);
    }
    Ok((values, vectors))
}

/// Eigenvalues of a symmetric matrix in nonincreasing order.
pub fn sym_eigenvalues_desc(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let mut v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Convergence(format!("symmetric eigensolver: {e:?}")))?;
    v.reverse();
    Ok(v)
}

/// Thin SVD `a = U diag(s) Vᵀ` with `s` nonincreasing.
pub fn thin_svd(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>, Mat<f64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Convergence(format!("singular value decomposition: {e:?}")))?;
    let s = svd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, svd.U().to_owned(), svd.V().to_owned()))
}

/// `a aᵀ`.
pub fn gram_rows(a: MatRef<'_, f64>) -> Mat<f64> {
    a * a.transpose()
}

/// `aᵀ a`.
pub fn gram_cols(a: MatRef<'_, f64>) -> Mat<f64> {
    a.transpose() * a
}

/// Nonzero-capable spectrum of `a aᵀ` (equivalently `aᵀ a`), computed on
/// whichever Gram matrix is smaller, in nonincreasing order and clamped at 0.
pub fn gram_spectrum(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let g = if a.nrows() <= a.ncols() {
        gram_rows(a)
    } else {
        gram_cols(a)
    };
    let mut v = sym_eigenvalues_desc(g.as_ref())?;
    for x in &mut v {
        *x = x.max(0.0);
    }
    Ok(v)
}

/// Leading `count` eigenvalues of `a aᵀ` by block subspace iteration with a
/// fixed-seed Gaussian start and a final Rayleigh–Ritz step.
///
/// Intended for matrices whose spectrum decays (smooth kernels); errors with
/// [`Error::Convergence`] if the Ritz values have not settled to `tol`
/// relative within `max_iter` sweeps.
pub fn leading_gram_eigenvalues(
    a: MatRef<'_, f64>,
    count: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let (n, m) = (a.nrows(), a.ncols());
    let dim = n.min(m);
    if count == 0 {
        return Ok(Vec::new());
    }
    let block = (count + 8).min(dim);
    if block == dim {
        let mut all = gram_spectrum(a)?;
        all.truncate(count);
        return Ok(all);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_b10c);
    let start = Mat::from_fn(m, block, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let mut q = orthonormalize(&(a * start.as_ref()));
    let mut prev: Vec<f64> = vec![f64::INFINITY; count];
    for _ in 0..max_iter {
        let w = a.transpose() * q.as_ref(); // m × block
        let t = gram_cols(w.as_ref()); // qᵀ a aᵀ q
        let ritz = sym_eigenvalues_desc(t.as_ref())?;
        let converged = ritz
            .iter()
            .zip(&prev)
            .take(count)
            .all(|(r, p)| (r - p).abs() <= tol * ritz[0].abs().max(f64::MIN_POSITIVE));
        if converged {
            return Ok(ritz[..count].iter().map(|x| x.max(0.0)).collect());
        }
        prev = ritz;
        q = orthonormalize(&(a * w.as_ref()));
    }
    Err(Error::Convergence(format!(
        "subspace iteration for {count} leading eigenvalues did not settle in {max_iter} sweeps"
    )))
}

fn orthonormalize(m: &Mat<f64>) -> Mat<f64> {
    m.qr().compute_thin_Q()
}

/// Extends the orthonormal columns of `basis` (n × r) to `target` orthonormal
/// columns using modified Gram–Schmidt against the standard basis vectors.
pub fn complete_orthonormal(basis: &Mat<f64>, target: usize) -> Mat<f64> {
    let n = basis.nrows();
    let mut cols: Vec<Vec<f64>> = (0..basis.ncols())
        .map(|j| (0..n).map(|i| basis[(i, j)]).collect())
        .collect();
    let mut e = 0usize;
    while cols.len() < target && e < n {
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in &cols {
                let proj = dot(c, &v);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}
