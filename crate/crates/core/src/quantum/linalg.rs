//! Hermitian eigendecomposition and the matrix functions built on it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::tolerance;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real matrix promoted to complex.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| c(v, 0.0))
}

/// `(m + m^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entry of `|m - m^dagger|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of the Hermitian part.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// `V f(Lambda) V^dagger`, applying `f` to eigenvalues clamped at zero below
/// the eigenvalue clamp.
pub fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, v) = eigh(m);
    let n = values.len();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let l = if values[i] < tolerance::EIGEN_CLAMP { 0.0 } else { values[i] };
            c(f(l), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    &v * d * v.adjoint()
}

pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    spectral_map(m, f64::sqrt)
}

/// Inverse square root on the support, zero on the kernel.
pub fn inv_sqrt_on_support(m: &CMatrix) -> CMatrix {
    spectral_map(m, |l| if l > 0.0 { 1.0 / l.sqrt() } else { 0.0 })
}

/// Orthogonal projector onto the support.
pub fn support_projector(m: &CMatrix) -> CMatrix {
    spectral_map(m, |l| if l > 0.0 { 1.0 } else { 0.0 })
}

/// `log2` on the support, zero on the kernel.
pub fn log2_on_support(m: &CMatrix) -> CMatrix {
    spectral_map(m, |l| if l > 0.0 { l.log2() } else { 0.0 })
}

/// `-sum l log2 l` over clamped eigenvalues; the matrix need not be normalized.
pub fn entropy_of_psd(m: &CMatrix) -> f64 {
    eigenvalues(m)
        .into_iter()
        .filter(|&l| l > tolerance::EIGEN_CLAMP)
        .map(|l| -l * l.log2())
        .sum()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigenvalues(m).into_iter().map(f64::abs).sum()
}

/// Which factor of `A (x) B` to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `C^da (x) C^db`.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, keep: Keep) -> CMatrix {
    match keep {
        Keep::A => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::B => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    }
}
