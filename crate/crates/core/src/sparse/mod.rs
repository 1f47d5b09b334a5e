//! Sparse and dense matrix kernels: CSR storage, fill-reducing ordering,
//! sparse Cholesky, the thin QR of weighted incidence matrices, and CGLS.

mod cgls;
mod cholesky;
mod csr;
mod dense;
mod ordering;
mod qr;

pub use cgls::{cgls_solve, CglsOptions, CglsResult, CglsStop};
pub use cholesky::{CholeskyFactor, GramAssembler, SymbolicCholesky};
pub use csr::CsrMatrix;
pub use dense::{dense_cholesky_solve, DenseMatrix, HouseholderQr};
pub use ordering::nested_dissection;
pub use qr::ThinQr;

/// A real linear map `R^ncols -> R^nrows` with its transpose.
pub trait LinOp: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = A^T x`.
    fn apply_t(&self, x: &[f64], y: &mut [f64]);

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.apply(x, &mut y);
        y
    }

    fn mul_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols()];
        self.apply_t(x, &mut y);
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
