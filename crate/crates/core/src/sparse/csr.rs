use super::LinOp;
use crate::error::{check_len, Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut tmp = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            tmp[fill[i]] = (j, v);
            fill[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for i in 0..nrows {
            let row = &mut tmp[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    indices.push(j);
                    values.push(s);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds from raw parts, validating the layout.
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len("csr indptr", nrows + 1, indptr.len())?;
        check_len("csr values", indices.len(), values.len())?;
        if indptr[0] != 0 || indptr[nrows] != indices.len() {
            return Err(Error::InvalidInput("inconsistent csr row pointers".into()));
        }
        for i in 0..nrows {
            if indptr[i] > indptr[i + 1] {
                return Err(Error::InvalidInput("decreasing csr row pointers".into()));
            }
            let row = &indices[indptr[i]..indptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&j| j >= ncols) {
                return Err(Error::InvalidInput(format!(
                    "row {i} has unsorted or out-of-range column indices"
                )));
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// Storage position of entry `(i, j)`, if present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut fill = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[p];
                indices[fill[j]] = i;
                values[fill[j]] = self.values[p];
                fill[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Keeps the listed columns, renumbered in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let mut row: Vec<(usize, f64)> = self
                .row(i)
                .0
                .iter()
                .zip(self.row(i).1)
                .filter(|(&j, _)| map[j] != usize::MAX)
                .map(|(&j, &v)| (map[j], v))
                .collect();
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: cols.len(),
            indptr,
            indices,
            values,
        }
    }

    /// Keeps the listed rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            let (c, v) = self.row(i);
            indices.extend_from_slice(c);
            values.extend_from_slice(v);
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Returns `diag(s) * self`.
    pub fn scale_rows(&self, s: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out.values[p] *= s[i];
            }
        }
        out
    }

    pub fn to_dense(&self) -> super::DenseMatrix {
        let mut d = super::DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                d.set(i, j, x);
            }
        }
        d
    }

    /// `y = A x`, checked.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv input", self.ncols, x.len())?;
        Ok(self.mul(x))
    }

    /// `y = A^T x`, checked.
    pub fn spmv_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv_t input", self.nrows, x.len())?;
        Ok(self.mul_t(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::norm2(&self.values)
    }
}

impl LinOp for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[p]] += self.values[p] * xi;
            }
        }
    }
}
