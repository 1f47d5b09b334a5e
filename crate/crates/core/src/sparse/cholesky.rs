use super::{nested_dissection, CsrMatrix, LinOp};
use crate::error::{check_len, Error, Result};
use std::sync::Arc;

const NONE: usize = usize::MAX;

/// Pivots smaller than this fraction of the original diagonal entry are
/// treated as numerically zero.
const PIVOT_REL: f64 = 1e-14;

/// Ordering, elimination tree and column structure of `P K P^T = L L^T` for
/// a fixed sparsity pattern of a symmetric matrix `K`.
#[derive(Debug, Clone)]
pub struct SymbolicCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    iperm: Vec<usize>,
    /// Upper triangle of the permuted matrix, compressed by column.
    c_colptr: Vec<usize>,
    c_rowind: Vec<usize>,
    /// Storage slot in the permuted upper triangle for every stored entry of
    /// the input pattern, or `NONE` for entries of the strict lower part.
    k_to_c: Vec<usize>,
    k_nnz: usize,
    parent: Vec<usize>,
    l_colptr: Vec<usize>,
}

impl SymbolicCholesky {
    /// Analyses the pattern of the symmetric matrix `k` (both triangles
    /// stored) using a nested-dissection ordering.
    pub fn analyze(k: &CsrMatrix) -> Result<Self> {
        let perm = nested_dissection(k);
        Self::analyze_with(k, perm)
    }

    /// Analyses with a caller-supplied ordering (`perm[new] = old`).
    pub fn analyze_with(k: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(Error::InvalidInput("Cholesky needs a square matrix".into()));
        }
        check_len("ordering", n, perm.len())?;
        let mut iperm = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || iperm[old] != NONE {
                return Err(Error::InvalidInput("ordering is not a permutation".into()));
            }
            iperm[old] = new;
        }

        let mut c_colptr = vec![0usize; n + 1];
        for i in 0..n {
            for &j in k.row(i).0 {
                let (ni, nj) = (iperm[i], iperm[j]);
                if ni <= nj {
                    c_colptr[nj + 1] += 1;
                }
            }
        }
        for j in 0..n {
            c_colptr[j + 1] += c_colptr[j];
        }
        let mut fill = c_colptr.clone();
        let mut c_rowind = vec![0usize; c_colptr[n]];
        let mut k_to_c = vec![NONE; k.nnz()];
        for i in 0..n {
            let start = k.indptr()[i];
            for (off, &j) in k.row(i).0.iter().enumerate() {
                let (ni, nj) = (iperm[i], iperm[j]);
                if ni <= nj {
                    c_rowind[fill[nj]] = ni;
                    k_to_c[start + off] = fill[nj];
                    fill[nj] += 1;
                }
            }
        }
        for j in 0..n {
            let has_diag = c_rowind[c_colptr[j]..c_colptr[j + 1]].contains(&j);
            if !has_diag {
                return Err(Error::Factorization(format!(
                    "structurally zero diagonal at row {}",
                    perm[j]
                )));
            }
        }

        // Elimination tree of the permuted upper triangle.
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for col in 0..n {
            for p in c_colptr[col]..c_colptr[col + 1] {
                let mut i = c_rowind[p];
                while i != NONE && i < col {
                    let next = ancestor[i];
                    ancestor[i] = col;
                    if next == NONE {
                        parent[i] = col;
                    }
                    i = next;
                }
            }
        }

        // Column counts from the row patterns.
        let mut counts = vec![1usize; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        for row in 0..n {
            let top = ereach(&c_colptr, &c_rowind, row, &parent, &mut stack, &mut mark);
            for &j in &stack[top..n] {
                counts[j] += 1;
            }
        }
        let mut l_colptr = vec![0usize; n + 1];
        for j in 0..n {
            l_colptr[j + 1] = l_colptr[j] + counts[j];
        }

        Ok(SymbolicCholesky {
            n,
            perm,
            iperm,
            c_colptr,
            c_rowind,
            k_to_c,
            k_nnz: k.nnz(),
            parent,
            l_colptr,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Fill-reducing ordering, `perm[new] = old`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn iperm(&self) -> &[usize] {
        &self.iperm
    }

    /// Number of stored entries of the factor, diagonal included.
    pub fn factor_nnz(&self) -> usize {
        self.l_colptr[self.n]
    }
}

/// Nonzero pattern of row `k` of the factor (excluding the diagonal) in
/// topological order, returned as `stack[top..n]`.
fn ereach(
    colptr: &[usize],
    rowind: &[usize],
    k: usize,
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for p in colptr[k]..colptr[k + 1] {
        let mut i = rowind[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

/// Numeric factor `P K P^T = L L^T`, with `L` stored by column, diagonal
/// first.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    sym: Arc<SymbolicCholesky>,
    l_rowind: Vec<usize>,
    l_values: Vec<f64>,
}

impl CholeskyFactor {
    /// Analyses and factors `k` in one step.
    pub fn factorize(k: &CsrMatrix) -> Result<Self> {
        let sym = Arc::new(SymbolicCholesky::analyze(k)?);
        Self::numeric(sym, k.values(), 0.0)
    }

    /// Factors a matrix with the analysed pattern and the given stored
    /// values. A pivot `d <= pivot_tol` (before the square root), or one that
    /// cancels to below `1e-14` of its diagonal entry, is reported as a rank
    /// deficiency.
    pub fn numeric(sym: Arc<SymbolicCholesky>, k_values: &[f64], pivot_tol: f64) -> Result<Self> {
        check_len("Cholesky values", sym.k_nnz, k_values.len())?;
        let n = sym.n;
        let mut cx = vec![0.0; sym.c_rowind.len()];
        for (p, &slot) in sym.k_to_c.iter().enumerate() {
            if slot != NONE {
                cx[slot] = k_values[p];
            }
        }
        let nnz = sym.factor_nnz();
        let mut l_rowind = vec![0usize; nnz];
        let mut l_values = vec![0.0; nnz];
        let mut next = sym.l_colptr[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(
                &sym.c_colptr,
                &sym.c_rowind,
                k,
                &sym.parent,
                &mut stack,
                &mut mark,
            );
            x[k] = 0.0;
            for p in sym.c_colptr[k]..sym.c_colptr[k + 1] {
                let i = sym.c_rowind[p];
                if i <= k {
                    x[i] = cx[p];
                }
            }
            let mut d = x[k];
            let d0 = d;
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / l_values[sym.l_colptr[i]];
                x[i] = 0.0;
                for p in sym.l_colptr[i] + 1..next[i] {
                    x[l_rowind[p]] -= l_values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                l_rowind[p] = k;
                l_values[p] = lki;
            }
            if !(d > pivot_tol && d > PIVOT_REL * d0) || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "matrix is not positive definite or is rank deficient (pivot {} of {n}, value {d:e})",
                    k
                )));
            }
            let p = next[k];
            next[k] += 1;
            l_rowind[p] = k;
            l_values[p] = d.sqrt();
        }
        Ok(CholeskyFactor {
            sym,
            l_rowind,
            l_values,
        })
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.sym
    }

    pub fn n(&self) -> usize {
        self.sym.n
    }

    /// Diagonal of the factor in the permuted ordering.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.sym.n)
            .map(|j| self.l_values[self.sym.l_colptr[j]])
            .collect()
    }

    /// In-place `L y = b` in the permuted ordering.
    pub fn solve_l_in_place(&self, y: &mut [f64]) {
        let cp = &self.sym.l_colptr;
        for j in 0..self.sym.n {
            y[j] /= self.l_values[cp[j]];
            let yj = y[j];
            for p in cp[j] + 1..cp[j + 1] {
                y[self.l_rowind[p]] -= self.l_values[p] * yj;
            }
        }
    }

    /// In-place `L^T x = y` in the permuted ordering.
    pub fn solve_lt_in_place(&self, x: &mut [f64]) {
        let cp = &self.sym.l_colptr;
        for j in (0..self.sym.n).rev() {
            let mut s = x[j];
            for p in cp[j] + 1..cp[j + 1] {
                s -= self.l_values[p] * x[self.l_rowind[p]];
            }
            x[j] = s / self.l_values[cp[j]];
        }
    }

    /// Solves `K x = b` in the original ordering.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.sym.perm.iter().map(|&old| b[old]).collect();
        self.solve_l_in_place(&mut y);
        self.solve_lt_in_place(&mut y);
        let mut x = vec![0.0; self.sym.n];
        for (new, &old) in self.sym.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Column `j` of the factor as (row, value) pairs, permuted ordering.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let cp = &self.sym.l_colptr;
        (cp[j]..cp[j + 1]).map(move |p| (self.l_rowind[p], self.l_values[p]))
    }
}

/// Assembles the values of `K = B^T diag(w) B` on a fixed pattern for a
/// changing weight vector `w` (one weight per row of `B`).
#[derive(Debug, Clone)]
pub struct GramAssembler {
    pattern: CsrMatrix,
    row_ptr: Vec<usize>,
    slots: Vec<usize>,
    coefs: Vec<f64>,
}

impl GramAssembler {
    pub fn new(b: &CsrMatrix) -> Result<Self> {
        let mut triplets = Vec::new();
        for r in 0..b.nrows() {
            let (cols, _) = b.row(r);
            for &i in cols {
                for &j in cols {
                    triplets.push((i, j, 1.0));
                }
            }
        }
        let pattern = CsrMatrix::from_triplets(b.ncols(), b.ncols(), &triplets)?;
        let mut row_ptr = vec![0];
        let mut slots = Vec::new();
        let mut coefs = Vec::new();
        for r in 0..b.nrows() {
            let (cols, vals) = b.row(r);
            for (&i, &vi) in cols.iter().zip(vals) {
                for (&j, &vj) in cols.iter().zip(vals) {
                    slots.push(pattern.find(i, j).expect("pattern built from the same rows"));
                    coefs.push(vi * vj);
                }
            }
            row_ptr.push(slots.len());
        }
        Ok(GramAssembler {
            pattern,
            row_ptr,
            slots,
            coefs,
        })
    }

    /// The pattern of `K`, with unspecified values.
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    /// Values of `B^T diag(w) B` aligned with [`GramAssembler::pattern`].
    pub fn assemble(&self, w: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.pattern.nnz()];
        for (r, &wr) in w.iter().enumerate() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                v[self.slots[p]] += self.coefs[p] * wr;
            }
        }
        v
    }

    /// `B^T diag(w) B` as a matrix.
    pub fn assemble_matrix(&self, w: &[f64]) -> CsrMatrix {
        let mut k = self.pattern.clone();
        k.values_mut().copy_from_slice(&self.assemble(w));
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn solves_tridiagonal() {
        let k = laplacian_1d(200);
        let x_true: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = k.mul(&x_true);
        let f = CholeskyFactor::factorize(&k).unwrap();
        let x = f.solve(&b);
        let err = x.iter().zip(&x_true).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn rejects_indefinite() {
        let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)])
            .unwrap();
        assert!(matches!(
            CholeskyFactor::factorize(&k),
            Err(Error::Factorization(_))
        ));
    }

    #[test]
    fn gram_matches_explicit_product() {
        let b = CsrMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, 1.0), (2, 1, 2.0)],
        )
        .unwrap();
        let g = GramAssembler::new(&b).unwrap();
        let k = g.assemble_matrix(&[1.0, 2.0, 0.5]);
        // B^T W B = [[1+2, -1], [-1, 1+2]]
        assert_eq!(k.get(0, 0), 3.0);
        assert_eq!(k.get(0, 1), -1.0);
        assert_eq!(k.get(1, 1), 3.0);
    }
}
