//! Incidence matrices and lowest-order Whitney edge elements.
//!
//! Every edge `ℓ = (j → k)` with `j < k` carries the coefficient
//! `z_ℓ = u_j − u_k`. The edge basis function is
//! `w_ℓ = ψ_k ∇ψ_j − ψ_j ∇ψ_k`, so that `Σ_ℓ z_ℓ w_ℓ = ∇u` for `z = L u`.

use crate::error::{check_len, Error, Result};
use crate::geom::Vec2;
use crate::mesh::{EdgeClass, TriMesh, VertexClass};
use crate::sparse::{CsrMatrix, LinOp, ThinQr};

/// Full and reduced incidence matrices of a mesh.
#[derive(Debug, Clone)]
pub struct Incidence {
    /// `N_e x N_v`, `+1` at the tail (lower index) and `−1` at the head.
    pub full: CsrMatrix,
    /// `n_e x n_v`: interior-touching edges against interior vertices.
    pub reduced: CsrMatrix,
    /// Global edge index of every reduced row.
    pub edge_of_row: Vec<usize>,
    /// Global vertex index of every reduced column.
    pub vertex_of_col: Vec<usize>,
    n_edges: usize,
    n_vertices: usize,
}

pub fn assemble_incidence(mesh: &TriMesh) -> Incidence {
    let mut full_t = Vec::with_capacity(2 * mesh.n_edges());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        full_t.push((e, a, 1.0));
        full_t.push((e, b, -1.0));
    }
    let full = CsrMatrix::from_triplets(mesh.n_edges(), mesh.n_vertices(), &full_t)
        .expect("edge endpoints are valid vertex indices");

    let vertex_of_col: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| mesh.vertex_class()[v] == VertexClass::Interior)
        .collect();
    let edge_of_row: Vec<usize> = (0..mesh.n_edges())
        .filter(|&e| mesh.edge_class()[e] == EdgeClass::InteriorTouching)
        .collect();
    let reduced = full.select_rows(&edge_of_row).select_columns(&vertex_of_col);
    Incidence {
        full,
        reduced,
        edge_of_row,
        vertex_of_col,
        n_edges: mesh.n_edges(),
        n_vertices: mesh.n_vertices(),
    }
}

impl Incidence {
    pub fn n_interior_edges(&self) -> usize {
        self.edge_of_row.len()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.vertex_of_col.len()
    }

    /// Expands reduced edge coefficients to all edges (zero on
    /// boundary-boundary edges).
    pub fn scatter_edges(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len("reduced edge vector", self.edge_of_row.len(), z.len())?;
        let mut full = vec![0.0; self.n_edges];
        for (r, &e) in self.edge_of_row.iter().enumerate() {
            full[e] = z[r];
        }
        Ok(full)
    }

    /// Restricts an all-edge vector to the interior-touching edges.
    pub fn gather_edges(&self, z_full: &[f64]) -> Result<Vec<f64>> {
        check_len("edge vector", self.n_edges, z_full.len())?;
        Ok(self.edge_of_row.iter().map(|&e| z_full[e]).collect())
    }

    /// Expands interior nodal values to all vertices (zero on the boundary).
    pub fn scatter_vertices(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("interior nodal vector", self.vertex_of_col.len(), u.len())?;
        let mut full = vec![0.0; self.n_vertices];
        for (c, &v) in self.vertex_of_col.iter().enumerate() {
            full[v] = u[c];
        }
        Ok(full)
    }

    /// Restricts an all-vertex vector to the interior vertices.
    pub fn gather_vertices(&self, u_full: &[f64]) -> Result<Vec<f64>> {
        check_len("nodal vector", self.n_vertices, u_full.len())?;
        Ok(self.vertex_of_col.iter().map(|&v| u_full[v]).collect())
    }
}

/// `z = L u`.
pub fn gradient_coefficients(l: &CsrMatrix, u: &[f64]) -> Result<Vec<f64>> {
    l.spmv(u)
}

/// Evaluates `Σ_ℓ z_ℓ w_ℓ(p)` inside triangle `t`, where `z_full` has one
/// entry per mesh edge.
pub fn whitney_evaluate(mesh: &TriMesh, z_full: &[f64], t: usize, p: Vec2) -> Result<Vec2> {
    check_len("edge coefficients", mesh.n_edges(), z_full.len())?;
    if t >= mesh.n_triangles() {
        return Err(Error::InvalidInput(format!("triangle {t} does not exist")));
    }
    let lam = mesh.barycentric(t, p);
    let tol = 1e-10;
    if lam.iter().any(|&l| l < -tol) {
        return Err(Error::Geometry(format!(
            "point ({}, {}) lies outside triangle {t}",
            p.x, p.y
        )));
    }
    Ok(whitney_at(mesh, z_full, t, lam))
}

/// Same as [`whitney_evaluate`] with barycentric coordinates given and no
/// checks.
pub(crate) fn whitney_at(mesh: &TriMesh, z_full: &[f64], t: usize, lam: [f64; 3]) -> Vec2 {
    let grads = mesh.barycentric_gradients(t);
    let tri = mesh.triangles()[t];
    let edges = mesh.triangle_edges(t);
    let mut out = Vec2::new(0.0, 0.0);
    for (k, &e) in edges.iter().enumerate() {
        let (a, b) = (k, (k + 1) % 3);
        // Orient as the global edge: tail = lower vertex index.
        let (j, kk) = if tri[a] < tri[b] { (a, b) } else { (b, a) };
        let w = grads[j] * lam[kk] - grads[kk] * lam[j];
        out = out + w * z_full[e];
    }
    out
}

/// Recovers nodal values from edge coefficients by least squares,
/// `u = R⁻¹ Qᵀ z`, using the unweighted factorization of `L`. Returns `u`
/// and the compatibility residual `‖z − Q Qᵀ z‖`.
pub fn nodal_from_coefficients(qr: &ThinQr, z: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_len("edge coefficients", qr.n_rows(), z.len())?;
    let u = qr.least_squares(z);
    let lu = qr.l_theta_mul(&u);
    let res = z
        .iter()
        .zip(&lu)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok((u, res))
}

/// Unit-weight thin QR of the reduced incidence matrix.
pub fn incidence_qr(inc: &Incidence) -> Result<ThinQr> {
    ThinQr::new(&inc.reduced, &vec![1.0; inc.reduced.nrows()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_initial_mesh, DomainShape, DomainSpec};

    fn center_mesh() -> TriMesh {
        TriMesh::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(0.5, 0.5),
            ],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        )
        .unwrap()
    }

    #[test]
    fn star_incidence() {
        let inc = assemble_incidence(&center_mesh());
        assert_eq!(inc.reduced.nrows(), 4);
        assert_eq!(inc.reduced.ncols(), 1);
        let z = gradient_coefficients(&inc.reduced, &[1.0]).unwrap();
        assert!(z.iter().all(|v| v.abs() == 1.0));
        let ones = vec![1.0; 5];
        assert!(inc.full.mul(&ones).iter().all(|v| *v == 0.0));
        assert_eq!(incidence_qr(&inc).unwrap().r_dense().get(0, 0).abs(), 2.0);
    }

    #[test]
    fn edge_difference_sign() {
        let m = center_mesh();
        let inc = assemble_incidence(&m);
        let mut u = vec![0.0; 5];
        let [j, k] = m.edges()[0];
        u[j] = 2.0;
        u[k] = 0.5;
        let z = inc.full.mul(&u);
        assert_eq!(z[0], 1.5);
    }

    #[test]
    fn linear_field_has_constant_whitney_gradient() {
        let m = generate_initial_mesh(&DomainSpec {
            shape: DomainShape::Disc,
            h: 0.25,
        })
        .unwrap();
        let inc = assemble_incidence(&m);
        let u: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p.x - 0.5 * p.y).collect();
        let z = inc.full.mul(&u);
        for t in 0..m.n_triangles() {
            for lam in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5], [0.0, 0.5, 0.5]] {
                let g = whitney_at(&m, &z, t, lam);
                assert!((g - Vec2::new(2.0, -0.5)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluation_outside_triangle_fails() {
        let m = center_mesh();
        let z = vec![0.0; m.n_edges()];
        assert!(whitney_evaluate(&m, &z, 0, Vec2::new(0.5, 0.9)).is_err());
        assert_eq!(
            whitney_evaluate(&m, &z, 0, m.centroid(0)).unwrap(),
            Vec2::new(0.0, 0.0)
        );
    }
}
