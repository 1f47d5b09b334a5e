//! Fan-beam line integrals of piecewise linear fields.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::mesh::TriMesh;
use crate::sparse::CsrMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sources equally spaced on a circle around the unit disc; each view is a
/// fan of rays that exactly covers the disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanBeamGeometry {
    pub n_views: usize,
    pub n_rays: usize,
    pub source_radius: f64,
}

impl Default for FanBeamGeometry {
    fn default() -> Self {
        FanBeamGeometry {
            n_views: 15,
            n_rays: 300,
            source_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec2,
    /// Unit direction.
    pub direction: Vec2,
}

impl Ray {
    pub fn new(origin: Vec2, direction: Vec2) -> Result<Ray> {
        let n = direction.norm();
        if !(n > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidInput("ray needs a finite origin and nonzero direction".into()));
        }
        Ok(Ray {
            origin,
            direction: direction * (1.0 / n),
        })
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.origin + self.direction * t
    }

    /// Chord of this line through the unit circle.
    pub fn unit_disc_chord(&self) -> f64 {
        let b = self.origin.dot(self.direction);
        let c = self.origin.norm2() - 1.0;
        let disc = b * b - c;
        if disc > 0.0 {
            2.0 * disc.sqrt()
        } else {
            0.0
        }
    }
}

impl FanBeamGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.n_views == 0 || self.n_rays == 0 {
            return Err(Error::Config("fan beam needs at least one view and one ray".into()));
        }
        if !(self.source_radius > 1.0) {
            return Err(Error::Config(format!(
                "source radius {} must exceed the unit disc",
                self.source_radius
            )));
        }
        Ok(())
    }

    pub fn n_data(&self) -> usize {
        self.n_views * self.n_rays
    }

    /// Half opening angle of each fan.
    pub fn half_angle(&self) -> f64 {
        (1.0 / self.source_radius).asin()
    }

    fn source(&self, view: usize) -> Vec2 {
        let phi = 2.0 * std::f64::consts::PI * view as f64 / self.n_views as f64;
        Vec2::new(phi.cos(), phi.sin()) * self.source_radius
    }

    fn ray_angle(&self, i: usize) -> f64 {
        let g = self.half_angle();
        -g + 2.0 * g * (i as f64 + 0.5) / self.n_rays as f64
    }

    /// Ray `k = view * n_rays + i`.
    pub fn ray(&self, k: usize) -> Ray {
        let (view, i) = (k / self.n_rays, k % self.n_rays);
        let s = self.source(view);
        let central = -s * (1.0 / self.source_radius);
        let d = Mat2::rotation(self.ray_angle(i)).mul_vec(central);
        Ray {
            origin: s,
            direction: d,
        }
    }

    pub fn rays(&self) -> Vec<Ray> {
        (0..self.n_data()).map(|k| self.ray(k)).collect()
    }
}

/// Piece of a ray inside one triangle. `weights[i]` is the integral of the
/// barycentric function of local vertex `i` over the piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySegment {
    pub triangle: usize,
    pub t_enter: f64,
    pub t_exit: f64,
    pub entry: Vec2,
    pub exit: Vec2,
    pub weights: [f64; 3],
}

impl RaySegment {
    pub fn length(&self) -> f64 {
        self.t_exit - self.t_enter
    }
}

/// Clips the line of `ray` against a triangle. A vertex exactly on the line
/// counts as lying to its right, so an edge on the line belongs to exactly
/// one of its two triangles.
pub fn clip_triangle(ray: &Ray, p: [Vec2; 3], triangle: usize) -> Option<RaySegment> {
    let s = p.map(|v| ray.direction.cross(v - ray.origin));
    let left = s.map(|x| x > 0.0);
    if left.iter().all(|&l| l) || left.iter().all(|&l| !l) {
        return None;
    }
    let mut hits = [(0.0, Vec2::ZERO, [0.0; 3]); 2];
    let mut n = 0;
    for k in 0..3 {
        let j = (k + 1) % 3;
        if left[k] != left[j] {
            let w = s[k] / (s[k] - s[j]);
            let x = p[k] + (p[j] - p[k]) * w;
            let mut lam = [0.0; 3];
            lam[k] = 1.0 - w;
            lam[j] = w;
            hits[n] = (ray.direction.dot(x - ray.origin), x, lam);
            n += 1;
        }
    }
    debug_assert_eq!(n, 2);
    if hits[1].0 < hits[0].0 {
        hits.swap(0, 1);
    }
    let (t0, x0, l0) = hits[0];
    let (t1, x1, l1) = hits[1];
    let len = t1 - t0;
    if !(len > 0.0) {
        return None;
    }
    Some(RaySegment {
        triangle,
        t_enter: t0,
        t_exit: t1,
        entry: x0,
        exit: x1,
        weights: [0, 1, 2].map(|i| 0.5 * len * (l0[i] + l1[i])),
    })
}

/// All pieces of the half-line `t >= 0` inside the mesh, ordered by arc
/// length.
pub fn trace_ray(mesh: &TriMesh, ray: &Ray) -> Vec<RaySegment> {
    let mut segs: Vec<RaySegment> = (0..mesh.n_triangles())
        .filter_map(|t| clip_triangle(ray, mesh.triangle_points(t), t))
        .filter(|s| s.t_exit > 0.0)
        .map(|mut s| {
            if s.t_enter < 0.0 {
                let l0 = mesh.barycentric(s.triangle, ray.origin);
                let l1 = mesh.barycentric(s.triangle, s.exit);
                s.t_enter = 0.0;
                s.entry = ray.origin;
                s.weights = [0, 1, 2].map(|i| 0.5 * s.t_exit * (l0[i] + l1[i]));
            }
            s
        })
        .collect();
    segs.sort_by(|a, b| a.t_enter.total_cmp(&b.t_enter).then(a.triangle.cmp(&b.triangle)));
    segs
}

/// Line-integral operator of a mesh.
#[derive(Debug, Clone)]
pub struct TomoOperator {
    /// `m x N_v`, every nodal basis function.
    pub all: CsrMatrix,
    /// `m x n_v`, interior vertices only.
    pub interior: CsrMatrix,
}

/// Visits every (ray, segment) pair; rays are grouped by view and each
/// triangle is only clipped against the rays whose angle range covers it.
fn for_each_segment<F>(mesh: &TriMesh, geom: &FanBeamGeometry, view: usize, mut f: F)
where
    F: FnMut(usize, &RaySegment, [usize; 3]),
{
    let s = geom.source(view);
    let central = -s * (1.0 / geom.source_radius);
    let g = geom.half_angle();
    let step = 2.0 * g / geom.n_rays as f64;
    for t in 0..mesh.n_triangles() {
        let pts = mesh.triangle_points(t);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in pts {
            let d = p - s;
            let a = central.cross(d).atan2(central.dot(d));
            lo = lo.min(a);
            hi = hi.max(a);
        }
        let i0 = (((lo + g) / step - 0.5).floor() - 1.0).max(0.0) as usize;
        let i1 = (((hi + g) / step - 0.5).ceil() + 1.0).min(geom.n_rays as f64 - 1.0);
        if i1 < 0.0 {
            continue;
        }
        for i in i0..=i1 as usize {
            let k = view * geom.n_rays + i;
            let ray = geom.ray(k);
            if let Some(seg) = clip_triangle(&ray, pts, t) {
                f(k, &seg, mesh.triangles()[t]);
            }
        }
    }
}

pub fn tomo_system_matrix(mesh: &TriMesh, geom: &FanBeamGeometry) -> Result<TomoOperator> {
    geom.validate()?;
    let per_view: Vec<Vec<(usize, usize, f64)>> = (0..geom.n_views)
        .into_par_iter()
        .map(|view| {
            let mut trip = Vec::new();
            for_each_segment(mesh, geom, view, |k, seg, tri| {
                for i in 0..3 {
                    trip.push((k, tri[i], seg.weights[i]));
                }
            });
            trip
        })
        .collect();
    let trip: Vec<(usize, usize, f64)> = per_view.into_iter().flatten().collect();
    let all = CsrMatrix::from_triplets(geom.n_data(), mesh.n_vertices(), &trip)?;
    let interior = all.select_columns(&mesh.interior_vertices());
    Ok(TomoOperator { all, interior })
}

/// `A_all u` without storing the matrix; used for data on fine meshes.
pub fn tomo_apply(mesh: &TriMesh, geom: &FanBeamGeometry, u: &[f64]) -> Result<Vec<f64>> {
    geom.validate()?;
    crate::error::check_len("nodal field", mesh.n_vertices(), u.len())?;
    let per_view: Vec<Vec<f64>> = (0..geom.n_views)
        .into_par_iter()
        .map(|view| {
            let mut b = vec![0.0; geom.n_rays];
            for_each_segment(mesh, geom, view, |k, seg, tri| {
                b[k - view * geom.n_rays] += (0..3).map(|i| seg.weights[i] * u[tri[i]]).sum::<f64>();
            });
            b
        })
        .collect();
    Ok(per_view.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tests::single_triangle;

    #[test]
    fn fan_covers_disc() {
        let g = FanBeamGeometry::default();
        for k in 0..g.n_data() {
            assert!(g.ray(k).unit_disc_chord() > 0.0);
        }
    }

    #[test]
    fn ray_along_edge_integrates_half_length() {
        let m = single_triangle();
        let [a, b, _] = m.triangle_points(0);
        let ray = Ray::new(a - (b - a), b - a).unwrap();
        let segs = trace_ray(&m, &ray);
        assert_eq!(segs.len(), 1);
        let len = (b - a).norm();
        assert!((segs[0].weights[0] - 0.5 * len).abs() < 1e-14);
        assert!((segs[0].weights[1] - 0.5 * len).abs() < 1e-14);
        assert!(segs[0].weights[2].abs() < 1e-14);
    }

    #[test]
    fn horizontal_ray_single_triangle() {
        let m = single_triangle();
        let ray = Ray::new(Vec2::new(-5.0, 0.25), Vec2::new(1.0, 0.0)).unwrap();
        let segs = trace_ray(&m, &ray);
        assert_eq!(segs.len(), 1);
        let w: f64 = segs[0].weights.iter().sum();
        assert!((w - segs[0].length()).abs() < 1e-15);
    }
}
