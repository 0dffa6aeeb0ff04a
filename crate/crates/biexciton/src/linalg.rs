//! Thin wrapper over nalgebra's Hermitian eigensolver with ascending order.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigh<T: ComplexField<RealField = f64>> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

pub type EighReal = Eigh<f64>;
pub type EighComplex = Eigh<Complex64>;

pub fn eigh<T: ComplexField<RealField = f64>>(m: DMatrix<T>) -> Result<Eigh<T>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Parameter(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    let dec = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("Hermitian eigensolver did not converge", f64::NAN))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| dec.eigenvectors[(r, order[c])].clone());
    Ok(Eigh { values, vectors })
}

/// Largest entrywise |A_ij - conj(A_ji)|.
pub fn hermitian_defect<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)].clone() - m[(j, i)].clone().conjugate()).modulus();
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest residual ‖A v - λ v‖ over all eigenpairs.
pub fn max_residual<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, e: &Eigh<T>) -> f64 {
    let mut worst = 0.0f64;
    for (k, &lam) in e.values.iter().enumerate() {
        let v = e.vectors.column(k).into_owned();
        let r = m * &v - &v * T::from_real(lam);
        worst = worst.max(r.norm());
    }
    worst
}
