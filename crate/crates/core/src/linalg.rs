//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `e^{j 2 pi phase}` with the phase given in cycles.
#[inline]
pub fn cis_cycles(phase: f64) -> Complex64 {
    let frac = phase - phase.round();
    let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
    Complex64::new(c, s)
}

pub fn conj_vec(v: &CVector) -> CVector {
    v.map(|z| z.conj())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff_vec(a: &CVector, b: &CVector) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_identity(m: &CMatrix) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(k, z)| {
            let (i, j) = (k % m.nrows(), k / m.nrows());
            if i == j {
                *z == ONE
            } else {
                *z == ZERO
            }
        })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Slightly negative eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let d = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&d) * v.adjoint()
}

/// Numerical rank of a Hermitian PSD matrix with a relative cutoff.
pub fn psd_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let ev = hermitian_eigenvalues(m);
    let max = ev.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    ev.iter().filter(|&&l| l > rel_tol * max).count()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

/// Solves `K z = b` for Hermitian positive definite `K`.
pub fn solve_hpd(k: CMatrix, b: &CVector, context: &'static str) -> Result<CVector> {
    let chol = k.cholesky().ok_or(Error::SingularSystem(context))?;
    let z = chol.solve(b);
    if z.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(z)
    } else {
        Err(Error::SingularSystem(context))
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
