//! Source problem `−Δf = u` on the unit square with `f = 0` on the vertical
//! sides and `∂f/∂n = 0` on the horizontal ones; P2 potential, P1 source and
//! point observations of `f`.

use crate::error::{check_len, Error, Result};
use crate::geom::Vec2;
use crate::mesh::{PointLocator, TriMesh};
use crate::quadrature::DEGREE5;
use crate::sparse::{CholeskyFactor, CsrMatrix, DenseMatrix, LinOp};
use rayon::prelude::*;

/// Quadratic Lagrange nodes: the vertices followed by the edge midpoints.
#[derive(Debug, Clone)]
pub struct P2Space {
    pub nodes: Vec<Vec2>,
    /// Local order: vertices 0, 1, 2 then midpoints of edges 01, 12, 20.
    pub element_nodes: Vec<[usize; 6]>,
}

impl P2Space {
    pub fn new(mesh: &TriMesh) -> P2Space {
        let nv = mesh.n_vertices();
        let mut nodes = mesh.vertices().to_vec();
        nodes.extend(mesh.edges().iter().map(|&[a, b]| mesh.vertex(a).lerp(mesh.vertex(b), 0.5)));
        let element_nodes = (0..mesh.n_triangles())
            .map(|t| {
                let v = mesh.triangles()[t];
                let e = mesh.triangle_edges(t);
                [v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]]
            })
            .collect();
        P2Space {
            nodes,
            element_nodes,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

pub fn p2_basis(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_gradients(l: [f64; 3], g: [Vec2; 3]) -> [Vec2; 6] {
    [
        g[0] * (4.0 * l[0] - 1.0),
        g[1] * (4.0 * l[1] - 1.0),
        g[2] * (4.0 * l[2] - 1.0),
        (g[0] * l[1] + g[1] * l[0]) * 4.0,
        (g[1] * l[2] + g[2] * l[1]) * 4.0,
        (g[2] * l[0] + g[0] * l[2]) * 4.0,
    ]
}

/// Observation points `((i − ½)/n, (k − ½)/n)`, row `n (i − 1) + (k − 1)`.
pub fn observation_grid(n: usize) -> Vec<Vec2> {
    let mut pts = Vec::with_capacity(n * n);
    for i in 1..=n {
        for k in 1..=n {
            pts.push(Vec2::new(
                (i as f64 - 0.5) / n as f64,
                (k as f64 - 0.5) / n as f64,
            ));
        }
    }
    pts
}

#[derive(Debug)]
pub struct DarcyOperator {
    pub space: P2Space,
    /// Global P2 index of each free node.
    pub free_nodes: Vec<usize>,
    /// Stiffness on free nodes.
    pub stiffness: CsrMatrix,
    /// `∫ φ_j ψ_ℓ`, free P2 rows against all P1 vertices.
    pub mass: CsrMatrix,
    /// P2 point evaluation at the observation points, free columns.
    pub observation: CsrMatrix,
    pub interior_vertices: Vec<usize>,
    factor: CholeskyFactor,
}

const EDGE_TOL: f64 = 1e-12;

fn check_unit_square(mesh: &TriMesh) -> Result<()> {
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in mesh.vertices() {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let ok = lo.x.abs() < EDGE_TOL
        && lo.y.abs() < EDGE_TOL
        && (hi.x - 1.0).abs() < EDGE_TOL
        && (hi.y - 1.0).abs() < EDGE_TOL
        && (mesh.total_area() - 1.0).abs() < 1e-10;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput("the Darcy model needs a mesh of the unit square".into()))
    }
}

pub fn assemble_darcy_operators(mesh: &TriMesh, observations: &[Vec2]) -> Result<DarcyOperator> {
    check_unit_square(mesh)?;
    let space = P2Space::new(mesh);
    let mut free_index = vec![usize::MAX; space.n_nodes()];
    let mut free_nodes = Vec::new();
    for (i, p) in space.nodes.iter().enumerate() {
        if p.x > EDGE_TOL && p.x < 1.0 - EDGE_TOL {
            free_index[i] = free_nodes.len();
            free_nodes.push(i);
        }
    }
    let nf = free_nodes.len();

    let mut g_trip = Vec::with_capacity(36 * mesh.n_triangles());
    let mut m_trip = Vec::with_capacity(18 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        let grads = mesh.barycentric_gradients(t);
        let nodes = space.element_nodes[t];
        let verts = mesh.triangles()[t];
        let mut ke = [[0.0; 6]; 6];
        let mut me = [[0.0; 3]; 6];
        for (l, w) in DEGREE5.iter() {
            let phi = p2_basis(l);
            let dphi = p2_gradients(l, grads);
            for a in 0..6 {
                for b in 0..6 {
                    ke[a][b] += w * area * dphi[a].dot(dphi[b]);
                }
                for c in 0..3 {
                    me[a][c] += w * area * phi[a] * l[c];
                }
            }
        }
        for a in 0..6 {
            let fa = free_index[nodes[a]];
            if fa == usize::MAX {
                continue;
            }
            for b in 0..6 {
                let fb = free_index[nodes[b]];
                if fb != usize::MAX {
                    g_trip.push((fa, fb, ke[a][b]));
                }
            }
            for c in 0..3 {
                m_trip.push((fa, verts[c], me[a][c]));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(nf, nf, &g_trip)?;
    let mass = CsrMatrix::from_triplets(nf, mesh.n_vertices(), &m_trip)?;

    let locator = PointLocator::new(mesh);
    let mut p_trip = Vec::with_capacity(6 * observations.len());
    for (j, &y) in observations.iter().enumerate() {
        let (t, l) = locator.locate(mesh, y).ok_or_else(|| {
            Error::Geometry(format!("observation point ({}, {}) is outside the mesh", y.x, y.y))
        })?;
        let phi = p2_basis(l);
        for (a, &node) in space.element_nodes[t].iter().enumerate() {
            let f = free_index[node];
            if f != usize::MAX {
                p_trip.push((j, f, phi[a]));
            }
        }
    }
    let observation = CsrMatrix::from_triplets(observations.len(), nf, &p_trip)?;
    let factor = CholeskyFactor::factorize(&stiffness)?;
    Ok(DarcyOperator {
        space,
        free_nodes,
        stiffness,
        mass,
        observation,
        interior_vertices: mesh.interior_vertices(),
        factor,
    })
}

impl DarcyOperator {
    pub fn n_observations(&self) -> usize {
        self.observation.nrows()
    }

    /// Potential at the free nodes for a source given at all vertices.
    pub fn solve_potential(&self, u_all: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.mass.spmv(u_all)?;
        Ok(self.factor.solve(&rhs))
    }

    /// Potential at every P2 node, zero on the Dirichlet sides.
    pub fn potential_at_nodes(&self, u_all: &[f64]) -> Result<Vec<f64>> {
        let f = self.solve_potential(u_all)?;
        let mut out = vec![0.0; self.space.n_nodes()];
        for (i, &node) in self.free_nodes.iter().enumerate() {
            out[node] = f[i];
        }
        Ok(out)
    }

    /// Predicted observations `P G⁻¹ M u` for a source at all vertices.
    pub fn apply(&self, u_all: &[f64]) -> Result<Vec<f64>> {
        self.observation.spmv(&self.solve_potential(u_all)?)
    }

    /// Dense `P G⁻¹ M` restricted to the interior vertices, assembled row by
    /// row through the adjoint `Mᵀ G⁻¹ Pᵀ` (one solve per observation).
    pub fn forward_matrix(&self) -> Result<DenseMatrix> {
        let m = self.n_observations();
        let pt = self.observation.transpose();
        let mass_interior = self.mass.select_columns(&self.interior_vertices);
        let nf = self.free_nodes.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                let mut rhs = vec![0.0; nf];
                pt.apply(&e, &mut rhs);
                let x = self.factor.solve(&rhs);
                let mut row = vec![0.0; mass_interior.ncols()];
                mass_interior.apply_t(&x, &mut row);
                row
            })
            .collect();
        let n = self.interior_vertices.len();
        let mut a = DenseMatrix::zeros(m, n);
        for (j, row) in rows.into_iter().enumerate() {
            check_len("forward row", n, row.len())?;
            a.row_mut(j).copy_from_slice(&row);
        }
        Ok(a)
    }
}

pub fn darcy_forward_matrix(op: &DarcyOperator) -> Result<DenseMatrix> {
    op.forward_matrix()
}
