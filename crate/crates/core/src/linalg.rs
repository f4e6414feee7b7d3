//! Small dense complex linear algebra used throughout the crate.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Unit-modulus phase `e^{i angle}`.
pub fn phase(angle: f64) -> C64 {
    Complex::from_polar(1.0, angle)
}

/// Outer product `|v><v|`.
pub fn ket_bra(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `<v|m|v>`.
pub fn expectation(v: &CVector, m: &CMatrix) -> C64 {
    (v.adjoint() * m * v)[(0, 0)]
}

/// `<a|b>`, antilinear in the first argument.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn diagonal(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitian_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Eigenpairs of the Hermitian part of `m`, ascending by eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> Vec<(f64, CVector)> {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &value)| (value, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Rewrites `m` in a permuted basis: entry `(i, j)` of the result is entry
/// `(order[i], order[j])` of `m`.
pub fn permute_basis(m: &CMatrix, order: &[usize]) -> CMatrix {
    CMatrix::from_fn(order.len(), order.len(), |i, j| m[(order[i], order[j])])
}

/// Inverse of [`permute_basis`].
pub fn unpermute_basis(m: &CMatrix, order: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(order.len(), order.len());
    for i in 0..order.len() {
        for j in 0..order.len() {
            out[(order[i], order[j])] = m[(i, j)];
        }
    }
    out
}
