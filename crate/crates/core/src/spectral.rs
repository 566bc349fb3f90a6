//! Small dense eigenproblems for stationary distributions and SSD-IS ratios.
//!
//! Matrices are dense row-major `n x n` slices, `m[row * n + col]`.
//! The eigenvalue closest to 1 is selected by `|lambda - 1|`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

const EIGEN_TOL: f64 = 1e-9;

fn to_matrix(m: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, m)
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(m: &[f64], n: usize) -> Result<Vec<Complex<f64>>> {
    if m.len() != n * n {
        return Err(Error::ShapeMismatch("matrix is not square".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Spectral("matrix has non-finite entries".into()));
    }
    let mat = to_matrix(m, n);
    let schur = mat.try_schur(1e-14, 10_000).ok_or_else(|| Error::Spectral("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalue of `m` nearest to 1 and how many eigenvalues sit within
/// `EIGEN_TOL` of it (counting itself).
fn nearest_to_one(m: &[f64], n: usize) -> Result<(Complex<f64>, usize)> {
    let eig = eigenvalues(m, n)?;
    let dist = |z: &Complex<f64>| Float::hypot(z.re - 1.0, z.im);
    let best = *eig.iter().min_by(|a, b| dist(a).total_cmp(&dist(b))).ok_or_else(|| Error::Spectral("empty matrix".into()))?;
    let mult = eig.iter().filter(|z| Float::hypot(z.re - best.re, z.im - best.im) < EIGEN_TOL.max(1e-6 * dist(&best))).count();
    Ok((best, mult))
}

/// Power iteration `x <- M x / |M x|_1` from the uniform vector. Returns
/// `None` if it has not settled within `max_iter` steps.
pub fn power_iteration(m: &[f64], n: usize, tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    for _ in 0..max_iter {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = m[i * n..(i + 1) * n].iter().zip(&x).map(|(a, b)| a * b).sum();
        }
        let norm: f64 = y.iter().map(|v| v.abs()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut x, &mut y);
        if diff < tol {
            return Some(x);
        }
    }
    None
}

/// Eigenvector for a known real eigenvalue by shifted inverse iteration.
fn inverse_iteration(m: &[f64], n: usize, lambda: f64) -> Result<Vec<f64>> {
    let mat = to_matrix(m, n);
    let scale = mat.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let shift = lambda + 1e-10 * scale;
    let shifted = &mat - DMatrix::<f64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::<f64>::from_element(n, 1.0);
    for k in 0..n {
        // deterministic, non-symmetric start
        x[k] += 0.01 * (k as f64 + 1.0) / n as f64;
    }
    for _ in 0..8 {
        let y = lu.solve(&x).ok_or_else(|| Error::Spectral("singular system in inverse iteration".into()))?;
        let norm = y.amax();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Spectral("inverse iteration produced a non-finite vector".into()));
        }
        x = y / norm;
    }
    Ok(x.iter().copied().collect())
}

/// Right eigenvector of `m` for the eigenvalue closest to 1.
///
/// Fails when that eigenvalue is complex or has multiplicity above one.
/// The returned vector is scaled so its largest-magnitude entry is
/// positive; callers pick their own normalization.
pub fn eigenvector_nearest_one(m: &[f64], n: usize) -> Result<(f64, Vec<f64>)> {
    let (lambda, mult) = nearest_to_one(m, n)?;
    if lambda.im.abs() > EIGEN_TOL {
        return Err(Error::Spectral(alloc::format!("eigenvalue nearest 1 is complex ({} + {}i)", lambda.re, lambda.im)));
    }
    if mult > 1 {
        return Err(Error::AmbiguousEigenvector { multiplicity: mult });
    }
    let mut v = inverse_iteration(m, n, lambda.re)?;
    let (_, &peak) =
        v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).ok_or_else(|| Error::Spectral("empty eigenvector".into()))?;
    if peak < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((lambda.re, v))
}

/// Stationary distribution of a column-stochastic matrix
/// (`p[s' * n + s] = P(s' | s)`): the eigenvalue-1 eigenvector on the
/// simplex. Power iteration is tried first; periodic chains fall back to
/// the dense solve. Several closed classes make the answer ambiguous.
pub fn stationary_distribution(p: &[f64], n: usize) -> Result<Vec<f64>> {
    let (_, mult) = nearest_to_one(p, n)?;
    if mult > 1 {
        return Err(Error::AmbiguousEigenvector { multiplicity: mult });
    }
    let v = match power_iteration(p, n, 1e-14, 100_000) {
        Some(v) => v,
        None => eigenvector_nearest_one(p, n)?.1,
    };
    let mut v: Vec<f64> = v.into_iter().map(|x| if x.abs() < 1e-15 { 0.0 } else { x }).collect();
    let sum: f64 = v.iter().sum();
    if !(sum.abs() > 0.0) {
        return Err(Error::Spectral("stationary vector sums to zero".into()));
    }
    v.iter_mut().for_each(|x| *x /= sum);
    if v.iter().any(|&x| x < -1e-9) {
        return Err(Error::Spectral("stationary vector has mixed signs".into()));
    }
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubly_stochastic_is_uniform() {
        // columns sum to 1 and rows sum to 1
        let p = [0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5];
        let d = stationary_distribution(&p, 3).unwrap();
        for x in d {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_chain_uses_dense_fallback() {
        // 0 -> 1 -> 0, period 2
        let p = [0.0, 1.0, 1.0, 0.0];
        let d = stationary_distribution(&p, 2).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_closed_classes_are_ambiguous() {
        let p = [1.0, 0.0, 0.0, 1.0];
        assert!(matches!(stationary_distribution(&p, 2), Err(Error::AmbiguousEigenvector { multiplicity: 2 })));
    }

    #[test]
    fn eigenvector_of_non_stochastic_matrix() {
        // eigenvalues 1.1 and 0.2
        let m = [1.1, 0.0, 0.3, 0.2];
        let (lambda, v) = eigenvector_nearest_one(&m, 2).unwrap();
        assert!((lambda - 1.1).abs() < 1e-12);
        // (M - 1.1 I) v = 0 => second row: 0.3 v0 - 0.9 v1 = 0
        assert!((0.3 * v[0] - 0.9 * v[1]).abs() < 1e-10);
    }

    #[test]
    fn complex_leading_pair_is_rejected() {
        // rotation by 90 degrees: eigenvalues +-i
        let m = [0.0, -1.0, 1.0, 0.0];
        assert!(matches!(eigenvector_nearest_one(&m, 2), Err(Error::Spectral(_))));
    }
}
