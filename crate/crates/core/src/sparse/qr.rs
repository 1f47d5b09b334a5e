use super::{CholeskyFactor, CsrMatrix, DenseMatrix, GramAssembler, LinOp, SymbolicCholesky};
use crate::error::{check_len, Error, Result};
use std::sync::Arc;

/// Thin QR factorization `L_θ = Q_θ R_θ` of the weighted incidence matrix
/// `L_θ = D_θ^{-1/2} L`.
///
/// `Q_θ` is never formed. With the fill-reducing permutation `P` and the
/// sparse Cholesky factor `P L_θ^T L_θ P^T = R_c^T R_c`, the factors are
/// `R_θ = R_c P` and `Q_θ = L_θ P^T R_c^{-1}`; every application of `Q_θ`
/// or `Q_θ^T` goes through one triangular solve and one sparse product.
/// The symbolic analysis is shared across weight updates.
#[derive(Debug, Clone)]
pub struct ThinQr {
    l: CsrMatrix,
    l_max: f64,
    gram: Arc<GramAssembler>,
    factor: CholeskyFactor,
    /// `θ^{-1/2}` per row.
    row_scale: Vec<f64>,
}

/// Relative threshold on `|diag(R)|` below which the factorization is
/// declared rank deficient.
pub const RANK_TOL: f64 = 1e-10;

impl ThinQr {
    /// Factors `D_θ^{-1/2} L`. `theta` has one positive entry per row of `L`.
    pub fn new(l: &CsrMatrix, theta: &[f64]) -> Result<Self> {
        let gram = Arc::new(GramAssembler::new(l)?);
        let sym = Arc::new(SymbolicCholesky::analyze(gram.pattern())?);
        Self::with_analysis(l.clone(), gram, sym, theta)
    }

    fn with_analysis(
        l: CsrMatrix,
        gram: Arc<GramAssembler>,
        sym: Arc<SymbolicCholesky>,
        theta: &[f64],
    ) -> Result<Self> {
        check_len("theta", l.nrows(), theta.len())?;
        if l.nrows() < l.ncols() {
            return Err(Error::Factorization(format!(
                "thin QR needs rows >= cols, got {}x{}",
                l.nrows(),
                l.ncols()
            )));
        }
        let row_scale = inv_sqrt(theta)?;
        let inv_theta: Vec<f64> = row_scale.iter().map(|s| s * s).collect();
        let l_max = l
            .indptr()
            .windows(2)
            .enumerate()
            .flat_map(|(i, w)| l.values()[w[0]..w[1]].iter().map(move |v| (i, *v)))
            .fold(0.0f64, |m, (i, v)| m.max((v * row_scale[i]).abs()));
        let tol = (RANK_TOL * l_max).powi(2);
        let factor = CholeskyFactor::numeric(sym, &gram.assemble(&inv_theta), tol)
            .map_err(|e| Error::Factorization(format!("weighted incidence matrix: {e}")))?;
        Ok(ThinQr {
            l,
            l_max,
            gram,
            factor,
            row_scale,
        })
    }

    /// Refactors for new weights, reusing the symbolic analysis.
    pub fn update(&mut self, theta: &[f64]) -> Result<()> {
        let l = std::mem::replace(&mut self.l, CsrMatrix::identity(0));
        let next = Self::with_analysis(
            l,
            self.gram.clone(),
            self.factor.symbolic().clone(),
            theta,
        )?;
        *self = next;
        Ok(())
    }

    /// A new factorization for different weights sharing this analysis.
    pub fn reweighted(&self, theta: &[f64]) -> Result<Self> {
        Self::with_analysis(
            self.l.clone(),
            self.gram.clone(),
            self.factor.symbolic().clone(),
            theta,
        )
    }

    /// Number of rows of `L` (edges).
    pub fn n_rows(&self) -> usize {
        self.l.nrows()
    }

    /// Number of columns of `L` (vertices).
    pub fn n_cols(&self) -> usize {
        self.l.ncols()
    }

    pub fn incidence(&self) -> &CsrMatrix {
        &self.l
    }

    /// Column ordering used by `R_θ`, `perm[new] = old`.
    pub fn column_permutation(&self) -> &[usize] {
        self.factor.symbolic().perm()
    }

    /// `L_θ u`.
    pub fn l_theta_mul(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.l.mul(u);
        for (x, s) in v.iter_mut().zip(&self.row_scale) {
            *x *= s;
        }
        v
    }

    /// `L_θ^T v`.
    pub fn l_theta_t_mul(&self, v: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = v.iter().zip(&self.row_scale).map(|(a, s)| a * s).collect();
        self.l.mul_t(&scaled)
    }

    /// `x = R_θ^{-1} y`.
    pub fn solve_r(&self, y: &[f64]) -> Vec<f64> {
        let mut t = y.to_vec();
        self.factor.solve_lt_in_place(&mut t);
        let mut x = vec![0.0; t.len()];
        for (new, &old) in self.column_permutation().iter().enumerate() {
            x[old] = t[new];
        }
        x
    }

    /// `x = R_θ^{-T} y`.
    pub fn solve_rt(&self, y: &[f64]) -> Vec<f64> {
        let mut t: Vec<f64> = self.column_permutation().iter().map(|&old| y[old]).collect();
        self.factor.solve_l_in_place(&mut t);
        t
    }

    /// `Q_θ y` for `y` of length `n_cols`.
    pub fn apply_q(&self, y: &[f64]) -> Vec<f64> {
        self.l_theta_mul(&self.solve_r(y))
    }

    /// `Q_θ^T v` for `v` of length `n_rows`.
    pub fn apply_qt(&self, v: &[f64]) -> Vec<f64> {
        self.solve_rt(&self.l_theta_t_mul(v))
    }

    /// `(L_θ^T L_θ)^{-1} b`.
    pub fn normal_solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(b)
    }

    /// `R_θ^{-1} Q_θ^T v`, the least-squares solution of `L_θ u = v`.
    pub fn least_squares(&self, v: &[f64]) -> Vec<f64> {
        self.normal_solve(&self.l_theta_t_mul(v))
    }

    /// Smallest `|diag(R_θ)|` relative to `max |L_θ|`.
    pub fn min_relative_diagonal(&self) -> f64 {
        self.factor
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, d| m.min(d.abs()))
            / self.l_max
    }

    /// Dense `R_θ` (original column order).
    pub fn r_dense(&self) -> DenseMatrix {
        let n = self.n_cols();
        let perm = self.column_permutation();
        let mut r = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for (i, v) in self.factor.column(j) {
                // L_chol[i, j] = R_c[j, i]; R_θ[j, perm[i]] = R_c[j, i]
                r.set(j, perm[i], v);
            }
        }
        r
    }

    /// Dense `Q_θ`, column by column.
    pub fn q_dense(&self) -> DenseMatrix {
        let (m, n) = (self.n_rows(), self.n_cols());
        let mut q = DenseMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply_q(&e);
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                q.set(i, j, v);
            }
        }
        q
    }

    /// `‖z − Q_θ Q_θ^T z‖`, the component of `z` outside the range of `L_θ`.
    pub fn range_residual(&self, z: &[f64]) -> f64 {
        let u = self.least_squares(z);
        let lz = self.l_theta_mul(&u);
        z.iter()
            .zip(&lz)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn inv_sqrt(theta: &[f64]) -> Result<Vec<f64>> {
    theta
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            if t > 0.0 && t.is_finite() {
                Ok(1.0 / t.sqrt())
            } else {
                Err(Error::InvalidInput(format!(
                    "theta[{j}] = {t} must be positive and finite"
                )))
            }
        })
        .collect()
}
