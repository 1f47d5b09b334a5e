//! Clément interpolation of the Whitney gradient field into a continuous
//! piecewise-linear vector field.

use crate::error::{check_len, Error, Result};
use crate::geom::Vec2;
use crate::mesh::TriMesh;
use crate::quadrature::DEGREE5;
use crate::sparse::{dense_cholesky_solve, DenseMatrix};
use crate::whitney::whitney_at;
use rayon::prelude::*;

/// Local L² projection system on the patch of one vertex.
#[derive(Debug, Clone)]
pub struct PatchSystem {
    pub vertex: usize,
    /// Patch nodes `I_i`, sorted.
    pub nodes: Vec<usize>,
    /// Edges of the patch triangles, sorted.
    pub edges: Vec<usize>,
    /// `G^i[ℓ][j] = ∫ ψ_j ψ_ℓ` over the patch.
    pub mass: DenseMatrix,
    /// `B^i` for each gradient component: rows are patch nodes, columns are
    /// patch edges, `∫ (w_e)_c ψ_ℓ`.
    pub load: [DenseMatrix; 2],
}

impl PatchSystem {
    pub fn new(mesh: &TriMesh, vertex: usize) -> Result<Self> {
        if vertex >= mesh.n_vertices() {
            return Err(Error::InvalidInput(format!("vertex {vertex} does not exist")));
        }
        let tris = mesh.vertex_triangles(vertex);
        let mut nodes: Vec<usize> = tris.iter().flat_map(|&t| mesh.triangles()[t]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut edges: Vec<usize> = tris.iter().flat_map(|&t| mesh.triangle_edges(t)).collect();
        edges.sort_unstable();
        edges.dedup();
        let local = |v: usize| nodes.binary_search(&v).unwrap();
        let local_edge = |e: usize| edges.binary_search(&e).unwrap();

        let n = nodes.len();
        let mut mass = DenseMatrix::zeros(n, n);
        let mut load = [
            DenseMatrix::zeros(n, edges.len()),
            DenseMatrix::zeros(n, edges.len()),
        ];
        let mut unit = vec![0.0; mesh.n_edges()];
        for &t in tris {
            let area = mesh.triangle_area(t);
            let tri = mesh.triangles()[t];
            let ids = tri.map(local);
            let tri_edges = mesh.triangle_edges(t);
            for (lam, w) in DEGREE5.iter() {
                let wa = w * area;
                for a in 0..3 {
                    for b in 0..3 {
                        mass.add(ids[a], ids[b], wa * lam[a] * lam[b]);
                    }
                }
                for &e in &tri_edges {
                    unit[e] = 1.0;
                    let we = whitney_at(mesh, &unit, t, lam);
                    unit[e] = 0.0;
                    let col = local_edge(e);
                    for a in 0..3 {
                        load[0].add(ids[a], col, wa * we.x * lam[a]);
                        load[1].add(ids[a], col, wa * we.y * lam[a]);
                    }
                }
            }
        }
        Ok(PatchSystem {
            vertex,
            nodes,
            edges,
            mass,
            load,
        })
    }

    /// Solves `G^i α = B^i z` for both components; `z_full` has one entry
    /// per mesh edge.
    pub fn project(&self, z_full: &[f64]) -> Result<[Vec<f64>; 2]> {
        let zl: Vec<f64> = self.edges.iter().map(|&e| z_full[e]).collect();
        let solve = |c: usize| -> Result<Vec<f64>> {
            let rhs: Vec<f64> = (0..self.nodes.len())
                .map(|i| crate::sparse::dot(self.load[c].row(i), &zl))
                .collect();
            dense_cholesky_solve(self.mass.data(), &rhs).map_err(|_| {
                Error::Geometry(format!("singular patch mass matrix at vertex {}", self.vertex))
            })
        };
        Ok([solve(0)?, solve(1)?])
    }

    /// Position of the patch centre in [`PatchSystem::nodes`].
    pub fn center(&self) -> usize {
        self.nodes.binary_search(&self.vertex).unwrap()
    }
}

/// Coefficients `α^i` of the L² projection of one gradient component onto
/// the hat functions of the patch of `vertex`.
pub fn patch_project(mesh: &TriMesh, z_full: &[f64], vertex: usize, component: usize) -> Result<Vec<f64>> {
    check_len("edge coefficients", mesh.n_edges(), z_full.len())?;
    if component > 1 {
        return Err(Error::InvalidInput(format!("component {component} out of range")));
    }
    let sys = PatchSystem::new(mesh, vertex)?;
    let [a0, a1] = sys.project(z_full)?;
    Ok(if component == 0 { a0 } else { a1 })
}

/// Recovered gradient `∇*u` at every vertex: the centre coefficient of the
/// patch projection of each component.
pub fn clement_gradient(mesh: &TriMesh, z_full: &[f64]) -> Result<Vec<Vec2>> {
    check_len("edge coefficients", mesh.n_edges(), z_full.len())?;
    (0..mesh.n_vertices())
        .into_par_iter()
        .map(|v| {
            let sys = PatchSystem::new(mesh, v)?;
            let [a0, a1] = sys.project(z_full)?;
            let c = sys.center();
            Ok(Vec2::new(a0[c], a1[c]))
        })
        .collect()
}
