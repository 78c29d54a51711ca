//! Factorizations for small dense complex matrices, backed by nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Tensor, C_ONE};
use crate::error::{Error, Result};

fn to_dmatrix(t: &Tensor) -> DMatrix<Complex64> {
    debug_assert_eq!(t.ndim(), 2);
    let (r, c) = (t.rows(), t.cols());
    DMatrix::from_fn(r, c, |i, j| t.get2(i, j))
}

fn from_dmatrix(m: &DMatrix<Complex64>) -> Tensor {
    let (r, c) = m.shape();
    let mut t = Tensor::zeros(&[r, c]);
    for i in 0..r {
        for j in 0..c {
            t.set2(i, j, m[(i, j)]);
        }
    }
    t
}

/// Unitary Q factor of a square matrix, with the R diagonal phase fixed so
/// that QR of a Ginibre matrix is Haar distributed.
pub fn qr_unitary(t: &Tensor) -> Tensor {
    let m = to_dmatrix(t);
    let n = m.nrows();
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() < 1e-300 { C_ONE } else { d / d.norm() };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    from_dmatrix(&q)
}

/// Polar factor (closest unitary/isometry in Frobenius norm) of a
/// `D_in x D_out` matrix with `D_in >= D_out`, via SVD.
pub fn polar(t: &Tensor) -> Result<Tensor> {
    let m = to_dmatrix(t);
    let svd = m.svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("svd did not produce U".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numerical("svd did not produce V^T".into()))?;
    Ok(from_dmatrix(&(u * vt)))
}

/// Singular values of a 2-d tensor, descending.
pub fn svd_values(t: &Tensor) -> Vec<f64> {
    let m = to_dmatrix(t);
    let mut vals: Vec<f64> = m.singular_values().iter().cloned().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(t: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    if t.ndim() != 2 || t.rows() != t.cols() {
        return Err(Error::ShapeMismatch("eigh requires a square matrix".into()));
    }
    let m = to_dmatrix(t);
    let se = m.symmetric_eigen();
    let n = t.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vecs = Tensor::zeros(&[n, n]);
    for (jo, &k) in order.iter().enumerate() {
        for i in 0..n {
            vecs.set2(i, jo, se.eigenvectors[(i, k)]);
        }
    }
    Ok((vals, vecs))
}

/// Eigendecomposition of a real symmetric matrix (imaginary parts ignored):
/// eigenvalues ascending, eigenvectors as real orthonormal columns.
pub fn eigh_real(t: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    if t.ndim() != 2 || t.rows() != t.cols() {
        return Err(Error::ShapeMismatch("eigh_real requires a square matrix".into()));
    }
    let n = t.rows();
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| t.get2(i, j).re);
    let se = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vecs = Tensor::zeros(&[n, n]);
    for (jo, &k) in order.iter().enumerate() {
        for i in 0..n {
            vecs.set2(i, jo, Complex64::new(se.eigenvectors[(i, k)], 0.0));
        }
    }
    Ok((vals, vecs))
}

/// Determinant of a square complex matrix.
pub fn determinant(t: &Tensor) -> Complex64 {
    to_dmatrix(t).determinant()
}
