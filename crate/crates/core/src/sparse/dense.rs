use super::LinOp;
use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        crate::error::check_len("dense matrix data", rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, o: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, o.rows);
        let mut out = DenseMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..o.cols {
                    out.data[i * o.cols + j] += a * o.get(k, j);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, o: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Scales every entry.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }
}

impl LinOp for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = super::dot(self.row(i), x);
        }
    }

    fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a * xi;
            }
        }
    }
}

/// Solves `A x = b` for a small symmetric positive definite `A` (row-major,
/// `n x n`) by Cholesky. Fails when a pivot is not positive.
pub fn dense_cholesky_solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    crate::error::check_len("dense cholesky matrix", n * n, a.len())?;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::Factorization(format!(
                "dense matrix not positive definite at pivot {j}"
            )));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}

/// Dense Householder QR of a tall matrix, kept as a reference implementation.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    /// Thin orthonormal factor (`m x n`).
    pub q: DenseMatrix,
    /// Upper triangular factor (`n x n`).
    pub r: DenseMatrix,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(Error::InvalidInput(format!(
                "QR needs rows >= cols, got {m}x{n}"
            )));
        }
        let mut r = a.clone();
        let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut v: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
            let alpha = super::norm2(&v);
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            let vn = super::norm2(&v);
            if vn > 0.0 {
                for x in &mut v {
                    *x /= vn;
                }
                for j in k..n {
                    let s: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
                    for i in k..m {
                        r.add(i, j, -2.0 * v[i - k] * s);
                    }
                }
            }
            vs.push(v);
        }
        let mut q = DenseMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
        for k in (0..n).rev() {
            let v = &vs[k];
            for j in 0..n {
                let s: f64 = (k..m).map(|i| v[i - k] * q.get(i, j)).sum();
                for i in k..m {
                    q.add(i, j, -2.0 * v[i - k] * s);
                }
            }
        }
        let r = DenseMatrix::from_fn(n, n, |i, j| if j >= i { r.get(i, j) } else { 0.0 });
        Ok(HouseholderQr { q, r })
    }
}
