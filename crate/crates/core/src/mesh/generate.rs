use super::TriMesh;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The two computational domains used by the forward models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    /// Unit disc centred at the origin.
    Disc,
    /// The square `[0, 1]^2`.
    UnitSquare,
}

impl DomainShape {
    pub fn diameter(self) -> f64 {
        match self {
            DomainShape::Disc => 2.0,
            DomainShape::UnitSquare => std::f64::consts::SQRT_2,
        }
    }

    pub fn contains(self, p: Vec2) -> bool {
        match self {
            DomainShape::Disc => p.norm2() <= 1.0,
            DomainShape::UnitSquare => (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y),
        }
    }

    pub fn area(self) -> f64 {
        match self {
            DomainShape::Disc => PI,
            DomainShape::UnitSquare => 1.0,
        }
    }

    /// Projects a point onto the boundary curve.
    ///
    /// For the square, `hint` is a boundary point whose side is kept; points
    /// are clamped onto that side.
    pub fn project_to_boundary(self, p: Vec2, hint: (Vec2, Vec2)) -> Vec2 {
        match self {
            DomainShape::Disc => {
                let n = p.norm();
                if n > 0.0 {
                    p * (1.0 / n)
                } else {
                    Vec2::new(1.0, 0.0)
                }
            }
            DomainShape::UnitSquare => {
                let (a, b) = hint;
                let tol = 1e-12;
                let clamp = |v: f64| v.clamp(0.0, 1.0);
                if (a.x - b.x).abs() < tol && (a.x.abs() < tol || (a.x - 1.0).abs() < tol) {
                    Vec2::new(a.x, clamp(p.y))
                } else if (a.y - b.y).abs() < tol && (a.y.abs() < tol || (a.y - 1.0).abs() < tol)
                {
                    Vec2::new(clamp(p.x), a.y)
                } else {
                    Vec2::new(clamp(p.x), clamp(p.y))
                }
            }
        }
    }

    /// True for the corners of the square, which the remesher never moves.
    pub fn is_corner(self, p: Vec2) -> bool {
        match self {
            DomainShape::Disc => false,
            DomainShape::UnitSquare => {
                let tol = 1e-12;
                let on = |v: f64| v.abs() < tol || (v - 1.0).abs() < tol;
                on(p.x) && on(p.y)
            }
        }
    }

    /// For square boundaries, returns which side(s) a boundary point lies on
    /// as a bit set (left, right, bottom, top).
    pub fn boundary_sides(self, p: Vec2) -> u8 {
        match self {
            DomainShape::Disc => 1,
            DomainShape::UnitSquare => {
                let tol = 1e-12;
                let mut s = 0;
                if p.x.abs() < tol {
                    s |= 1;
                }
                if (p.x - 1.0).abs() < tol {
                    s |= 2;
                }
                if p.y.abs() < tol {
                    s |= 4;
                }
                if (p.y - 1.0).abs() < tol {
                    s |= 8;
                }
                s
            }
        }
    }
}

/// Domain plus target size for the initial quasi-uniform mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: DomainShape,
    pub h: f64,
}

/// Builds a quasi-uniform initial mesh with edge lengths close to `spec.h`.
///
/// The disc uses concentric rings of `6k` points at radius `k h`; the square
/// uses a structured grid whose cells are split along alternating diagonals.
pub fn generate_initial_mesh(spec: &DomainSpec) -> Result<TriMesh> {
    let h = spec.h;
    if !(h.is_finite() && h > 0.0 && h < spec.shape.diameter()) {
        return Err(Error::InvalidInput(format!(
            "mesh size {h} must lie in (0, {})",
            spec.shape.diameter()
        )));
    }
    match spec.shape {
        DomainShape::UnitSquare => square_mesh(h),
        DomainShape::Disc => disc_mesh(h),
    }
}

fn square_mesh(h: f64) -> Result<TriMesh> {
    let n = (1.0 / h).round().max(1.0) as usize;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh::new(vertices, triangles)
}

fn disc_mesh(h: f64) -> Result<TriMesh> {
    let rings = (1.0 / h).round().max(1.0) as usize;
    let mut vertices = vec![Vec2::new(0.0, 0.0)];
    let mut starts = vec![0usize];
    for k in 1..=rings {
        starts.push(vertices.len());
        let r = k as f64 / rings as f64;
        let n = 6 * k;
        for j in 0..n {
            let a = 2.0 * PI * j as f64 / n as f64;
            let p = Vec2::new(r * a.cos(), r * a.sin());
            vertices.push(if k == rings { p * (1.0 / p.norm()) } else { p });
        }
    }
    let count = |k: usize| if k == 0 { 1 } else { 6 * k };

    let mut triangles = Vec::new();
    for k in 0..rings {
        let (n_in, n_out) = (count(k), count(k + 1));
        let (s_in, s_out) = (starts[k], starts[k + 1]);
        let inner = |i: usize| s_in + i % n_in;
        let outer = |j: usize| s_out + j % n_out;
        if n_in == 1 {
            for j in 0..n_out {
                triangles.push([s_in, outer(j), outer(j + 1)]);
            }
            continue;
        }
        // Merge the two rings by angle.
        let (mut i, mut j) = (0usize, 0usize);
        while i < n_in || j < n_out {
            let next_in = (i + 1) as f64 / n_in as f64;
            let next_out = (j + 1) as f64 / n_out as f64;
            if j < n_out && (i >= n_in || next_out <= next_in) {
                triangles.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            } else {
                triangles.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            }
        }
    }
    TriMesh::new(vertices, triangles)
}
