//! Conforming triangular meshes: topology, initial generators, point location
//! and file I/O.

mod generate;
mod io;
mod locate;

pub use generate::{generate_initial_mesh, DomainShape, DomainSpec};
pub use io::{read_mesh, write_mesh, write_vtk, VtkField};
pub use locate::PointLocator;

use crate::error::{Error, Result};
use crate::geom::{orient2d, triangle_area, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexClass {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeClass {
    /// At least one endpoint is an interior vertex.
    InteriorTouching,
    /// Both endpoints lie on the boundary.
    BoundaryBoundary,
}

/// A conforming triangulation of a simply connected polygon.
///
/// Edges are stored once, oriented from the lower to the higher vertex index,
/// and sorted lexicographically, so the edge numbering is a pure function of
/// the triangle list.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    vertex_class: Vec<VertexClass>,
    edges: Vec<[usize; 2]>,
    edge_class: Vec<EdgeClass>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    /// `triangle_edges[t][k]` joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    vt_offsets: Vec<usize>,
    vt_list: Vec<usize>,
}

/// Counts returned by [`TriMesh::euler_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerReport {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_triangles: usize,
    pub euler_characteristic: i64,
    pub n_interior_vertices: usize,
    pub n_interior_touching_edges: usize,
    /// `n_v + N_t - 1`, the count the interior-touching edges would have if no
    /// interior edge joined two boundary vertices.
    pub predicted_interior_edges: usize,
    /// True when `n_e == n_v + N_t - 1`.
    pub identity_holds: bool,
}

/// Output of [`build_edge_topology`].
#[derive(Debug, Clone)]
pub struct Topology {
    pub vertex_class: Vec<VertexClass>,
    pub edges: Vec<[usize; 2]>,
    pub edge_class: Vec<EdgeClass>,
    pub edge_triangles: Vec<[Option<usize>; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
}

/// Enumerates the undirected edges of a triangle list and classifies edges and
/// vertices. Rejects non-manifold or inconsistently oriented input.
pub fn build_edge_topology(n_vertices: usize, triangles: &[[usize; 3]]) -> Result<Topology> {
    let mut map: BTreeMap<(usize, usize), Vec<(usize, usize, bool)>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::Topology(format!(
                    "triangle {t} references vertex out of range"
                )));
            }
            if a == b {
                return Err(Error::Topology(format!("triangle {t} repeats a vertex")));
            }
            map.entry((a.min(b), a.max(b)))
                .or_default()
                .push((t, k, a < b));
        }
    }

    let mut edges = Vec::with_capacity(map.len());
    let mut edge_triangles = Vec::with_capacity(map.len());
    let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut on_boundary = vec![false; n_vertices];
    let mut used = vec![false; n_vertices];
    for (e, (&(a, b), uses)) in map.iter().enumerate() {
        match uses.len() {
            1 => {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
            2 => {
                if uses[0].2 == uses[1].2 {
                    return Err(Error::Topology(format!(
                        "edge ({a}, {b}) has the same direction in triangles {} and {}",
                        uses[0].0, uses[1].0
                    )));
                }
            }
            n => {
                return Err(Error::Topology(format!(
                    "edge ({a}, {b}) is shared by {n} triangles"
                )))
            }
        }
        used[a] = true;
        used[b] = true;
        edges.push([a, b]);
        let mut pair = [None, None];
        for (slot, &(t, k, _)) in uses.iter().enumerate() {
            pair[slot] = Some(t);
            triangle_edges[t][k] = e;
        }
        edge_triangles.push(pair);
    }
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(Error::Topology(format!("vertex {v} belongs to no triangle")));
    }

    let vertex_class: Vec<VertexClass> = on_boundary
        .iter()
        .map(|&b| {
            if b {
                VertexClass::Boundary
            } else {
                VertexClass::Interior
            }
        })
        .collect();
    let edge_class = edges
        .iter()
        .map(|&[a, b]| {
            if on_boundary[a] && on_boundary[b] {
                EdgeClass::BoundaryBoundary
            } else {
                EdgeClass::InteriorTouching
            }
        })
        .collect();
    Ok(Topology {
        vertex_class,
        edges,
        edge_class,
        edge_triangles,
        triangle_edges,
    })
}

impl TriMesh {
    /// Builds a mesh from coordinates and counterclockwise triangles, checking
    /// positivity of every triangle and conformity.
    pub fn new(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Topology("mesh has no triangles".into()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::Geometry(format!("vertex {i} is not finite")));
        }
        let topo = build_edge_topology(vertices.len(), &triangles)?;
        for (t, tri) in triangles.iter().enumerate() {
            let area = triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::Geometry(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }

        let mut vt_offsets = vec![0usize; vertices.len() + 1];
        for tri in &triangles {
            for &v in tri {
                vt_offsets[v + 1] += 1;
            }
        }
        for i in 0..vertices.len() {
            vt_offsets[i + 1] += vt_offsets[i];
        }
        let mut fill = vt_offsets.clone();
        let mut vt_list = vec![0usize; vt_offsets[vertices.len()]];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vt_list[fill[v]] = t;
                fill[v] += 1;
            }
        }

        let mesh = TriMesh {
            vertices,
            triangles,
            vertex_class: topo.vertex_class,
            edges: topo.edges,
            edge_class: topo.edge_class,
            edge_triangles: topo.edge_triangles,
            triangle_edges: topo.triangle_edges,
            vt_offsets,
            vt_list,
        };
        if mesh.euler_report().euler_characteristic != 1 {
            return Err(Error::Topology(format!(
                "Euler characteristic {} != 1 (domain not simply connected)",
                mesh.euler_report().euler_characteristic
            )));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_class(&self) -> &[EdgeClass] {
        &self.edge_class
    }

    pub fn vertex_class(&self) -> &[VertexClass] {
        &self.vertex_class
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.vertex_class[v] == VertexClass::Boundary
    }

    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_triangles[e]
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e][1].is_none()
    }

    /// Triangles incident to vertex `v`.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vt_list[self.vt_offsets[v]..self.vt_offsets[v + 1]]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.vertex_class
            .iter()
            .filter(|c| **c == VertexClass::Interior)
            .count()
    }

    /// Indices of the interior vertices in increasing order.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&v| self.vertex_class[v] == VertexClass::Interior)
            .collect()
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.n_vertices() - self.n_interior_vertices()
    }

    pub fn n_interior_touching_edges(&self) -> usize {
        self.edge_class
            .iter()
            .filter(|c| **c == EdgeClass::InteriorTouching)
            .count()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        triangle_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) * (1.0 / 3.0)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[a] - self.vertices[b]).norm()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.n_edges()).map(|e| self.edge_length(e)).collect()
    }

    pub fn median_edge_length(&self) -> f64 {
        let mut l = self.edge_lengths();
        l.sort_by(f64::total_cmp);
        l[l.len() / 2]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Sorted neighbours of `v` through edges.
    pub fn vertex_neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self
            .vertex_triangles(v)
            .iter()
            .flat_map(|&t| self.triangles[t])
            .filter(|&w| w != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangle_points(t);
        let twice_area = orient2d(a, b, c);
        [
            (b - c).perp() * (-1.0 / twice_area),
            (c - a).perp() * (-1.0 / twice_area),
            (a - b).perp() * (-1.0 / twice_area),
        ]
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Vec2) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let d = orient2d(a, b, c);
        [
            orient2d(p, b, c) / d,
            orient2d(a, p, c) / d,
            orient2d(a, b, p) / d,
        ]
    }

    /// Evaluates the P1 field with nodal values `u` (length `N_v`) at `p`
    /// inside triangle `t`.
    pub fn interpolate_in(&self, t: usize, p: Vec2, u: &[f64]) -> f64 {
        let l = self.barycentric(t, p);
        let tri = self.triangles[t];
        l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]]
    }

    /// Minimum radius-ratio quality over all triangles.
    pub fn min_quality(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                crate::geom::radius_ratio(a, b, c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn euler_report(&self) -> EulerReport {
        let n_v = self.n_interior_vertices();
        let n_e = self.n_interior_touching_edges();
        let predicted = (n_v + self.n_triangles()).saturating_sub(1);
        EulerReport {
            n_vertices: self.n_vertices(),
            n_edges: self.n_edges(),
            n_triangles: self.n_triangles(),
            euler_characteristic: self.n_vertices() as i64 - self.n_edges() as i64
                + self.n_triangles() as i64,
            n_interior_vertices: n_v,
            n_interior_touching_edges: n_e,
            predicted_interior_edges: predicted,
            identity_holds: n_e == predicted,
        }
    }

    /// Re-checks conformity, orientation and the Euler characteristic.
    pub fn validate(&self) -> Result<()> {
        TriMesh::new(self.vertices.clone(), self.triangles.clone()).map(|_| ())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn single_triangle() -> TriMesh {
        TriMesh::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn square_diagonal() -> TriMesh {
        TriMesh::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    pub(crate) fn square_center() -> TriMesh {
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
    fn single_triangle_topology() {
        let m = single_triangle();
        assert_eq!(m.n_edges(), 3);
        assert!(m
            .edge_class()
            .iter()
            .all(|c| *c == EdgeClass::BoundaryBoundary));
        assert_eq!(m.n_interior_touching_edges(), 0);
        assert_eq!(m.euler_report().euler_characteristic, 1);
    }

    #[test]
    fn square_with_diagonal_flags_identity() {
        let m = square_diagonal();
        assert_eq!(m.n_edges(), 5);
        let r = m.euler_report();
        assert_eq!(r.n_interior_touching_edges, 0);
        assert_eq!(r.predicted_interior_edges, 1);
        assert!(!r.identity_holds);
    }

    #[test]
    fn square_with_center_vertex() {
        let m = square_center();
        assert_eq!(m.n_edges(), 8);
        let r = m.euler_report();
        assert_eq!(r.n_interior_vertices, 1);
        assert_eq!(r.n_interior_touching_edges, 4);
        assert!(r.identity_holds);
        assert_eq!(m.vertex_neighbors(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn edges_are_oriented_low_to_high_and_deterministic() {
        let m = square_center();
        assert!(m.edges().iter().all(|[a, b]| a < b));
        let again = TriMesh::new(m.vertices().to_vec(), m.triangles().to_vec()).unwrap();
        assert_eq!(again.edges(), m.edges());
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.5, -1.0),
            Vec2::new(0.6, 2.0),
        ];
        let err = build_edge_topology(5, &[[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
        let _ = v;
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let err = TriMesh::new(
            vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let m = square_center();
        for t in 0..m.n_triangles() {
            let g = m.barycentric_gradients(t);
            let s = g[0] + g[1] + g[2];
            assert!(s.norm() < 1e-14);
            // gradient of λ0 is orthogonal to the opposite edge
            let [_, b, c] = m.triangle_points(t);
            assert!(g[0].dot(c - b).abs() < 1e-14);
        }
    }
}
