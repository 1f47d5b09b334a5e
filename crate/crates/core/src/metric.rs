//! Riemannian metric fields: construction from a recovered gradient,
//! Steiner-ellipse element metrics, metric lengths and conformity scores.

use crate::error::{check_len, Error, Result};
use crate::geom::{gauss_legendre_unit, orient2d, Mat2, Sym2, Vec2};
use crate::mesh::{PointLocator, TriMesh};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Anything that returns an SPD tensor at a point of the domain.
pub trait MetricSampler: Sync {
    fn at(&self, p: Vec2) -> Sym2;
}

/// The same tensor everywhere.
#[derive(Debug, Clone, Copy)]
pub struct UniformMetric(pub Sym2);

impl MetricSampler for UniformMetric {
    fn at(&self, _p: Vec2) -> Sym2 {
        self.0
    }
}

/// A metric given by a closure.
pub struct FnMetric<F: Fn(Vec2) -> Sym2 + Sync>(pub F);

impl<F: Fn(Vec2) -> Sym2 + Sync> MetricSampler for FnMetric<F> {
    fn at(&self, p: Vec2) -> Sym2 {
        (self.0)(p)
    }
}

/// Eigenvalues of another sampler clamped to `[1/h_max², 1/h_min²]`.
pub struct ClampedMetric<'a, M: MetricSampler + ?Sized> {
    pub inner: &'a M,
    pub h_min: f64,
    pub h_max: f64,
}

impl<M: MetricSampler + ?Sized> MetricSampler for ClampedMetric<'_, M> {
    fn at(&self, p: Vec2) -> Sym2 {
        clamp_metric(self.inner.at(p), self.h_min, self.h_max)
    }
}

/// Clamps the eigenvalues of `g` to `[1/h_max², 1/h_min²]`.
pub fn clamp_metric(g: Sym2, h_min: f64, h_max: f64) -> Sym2 {
    let lo = 1.0 / (h_max * h_max);
    let hi = 1.0 / (h_min * h_min);
    g.map_eigen(|l| l.clamp(lo, hi))
}

/// Scalars used to build a [`MetricField`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCalibration {
    pub h_min: f64,
    pub h_max: f64,
    pub alpha: f64,
    /// Largest recovered gradient magnitude over all vertices.
    pub max_gradient: f64,
    /// `C = 1 / (h_min² M²)`.
    pub c: f64,
    /// `δ = sqrt(α / C) / h_max`.
    pub delta: f64,
    /// True when the gradient vanished and a uniform metric was returned.
    pub fallback: bool,
}

/// Per-vertex tensors on a mesh, interpolated log-Euclidean inside
/// triangles.
#[derive(Debug, Clone)]
pub struct MetricField {
    mesh: TriMesh,
    tensors: Vec<Sym2>,
    logs: Vec<Sym2>,
    locator: PointLocator,
    pub calibration: Option<MetricCalibration>,
}

impl MetricField {
    pub fn new(mesh: TriMesh, tensors: Vec<Sym2>) -> Result<Self> {
        check_len("metric tensors", mesh.n_vertices(), tensors.len())?;
        if let Some(i) = tensors.iter().position(|g| !(g.is_finite() && g.is_spd())) {
            return Err(Error::InvalidInput(format!("metric at vertex {i} is not SPD")));
        }
        let logs = tensors.iter().map(Sym2::log).collect();
        let locator = PointLocator::new(&mesh);
        Ok(MetricField {
            mesh,
            tensors,
            logs,
            locator,
            calibration: None,
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn tensors(&self) -> &[Sym2] {
        &self.tensors
    }

    /// The field with every tensor clamped to `[1/h_max², 1/h_min²]`.
    pub fn clamped(&self, h_min: f64, h_max: f64) -> MetricField {
        let tensors: Vec<Sym2> = self
            .tensors
            .iter()
            .map(|g| clamp_metric(*g, h_min, h_max))
            .collect();
        MetricField {
            logs: tensors.iter().map(Sym2::log).collect(),
            tensors,
            mesh: self.mesh.clone(),
            locator: self.locator.clone(),
            calibration: self.calibration,
        }
    }
}

impl MetricField {
    /// Bounds the growth of the size field along mesh edges.
    ///
    /// A tensor `G_i` seen from a neighbour at metric distance `l` is relaxed to
    /// `G_i / (1 + l ln β)²` and intersected into the neighbour's tensor. Sweeps
    /// repeat until no tensor changes by more than a relative `1e-3`. A ratio of
    /// `β <= 1` returns the field unchanged.
    pub fn graded(&self, ratio: f64) -> MetricField {
        let mut tensors = self.tensors.clone();
        if ratio > 1.0 {
            let ln_b = ratio.ln();
            let pts = self.mesh.vertices();
            for _ in 0..50 {
                let mut changed = false;
                for &[i, j] in self.mesh.edges() {
                    let d = pts[j] - pts[i];
                    for (a, b) in [(i, j), (j, i)] {
                        let l = tensors[a].quad(d).sqrt();
                        let grown = tensors[a] * (1.0 + l * ln_b).powi(-2);
                        let next = intersect_metrics(&tensors[b], &grown);
                        if (next - tensors[b]).max_abs() > 1e-3 * tensors[b].max_abs() {
                            tensors[b] = next;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        MetricField {
            logs: tensors.iter().map(Sym2::log).collect(),
            tensors,
            mesh: self.mesh.clone(),
            locator: self.locator.clone(),
            calibration: self.calibration,
        }
    }
}

/// The largest tensor whose unit ball lies in both unit balls, by simultaneous
/// reduction of `a` and `b`.
pub fn intersect_metrics(a: &Sym2, b: &Sym2) -> Sym2 {
    let half = a.map_eigen(f64::sqrt);
    let inv_half = a.map_eigen(|l| 1.0 / l.sqrt());
    let c = congruence(&inv_half, b);
    let c = c.map_eigen(|l| l.max(1.0));
    congruence(&half, &c)
}

/// `s m s` for symmetric `s`.
fn congruence(s: &Sym2, m: &Sym2) -> Sym2 {
    let sm = s.as_mat().mul_mat(&m.as_mat());
    let r = sm.mul_mat(&s.as_mat());
    let off = 0.5 * (r.m[0][1] + r.m[1][0]);
    Sym2::new(r.m[0][0], off, r.m[1][1])
}

impl MetricSampler for MetricField {
    fn at(&self, p: Vec2) -> Sym2 {
        let (t, lam) = self.locator.locate_nearest(&self.mesh, p);
        let [a, b, c] = self.mesh.triangles()[t];
        (self.logs[a] * lam[0] + self.logs[b] * lam[1] + self.logs[c] * lam[2]).exp()
    }
}

/// Builds the gradient-driven metric at every vertex.
///
/// With `M = max |∇*u|`, `C = 1/(h_min² M²)` and `δ = sqrt(α/C)/h_max`, a
/// vertex with `|∇*u| > δ` gets `C|∇*u|² (e eᵀ + e⊥e⊥ᵀ/α)` with `e` along
/// the gradient, and otherwise `δ I`. A vanishing gradient gives the uniform
/// metric `I/h_max²`.
pub fn build_metric(
    mesh: &TriMesh,
    gradient: &[Vec2],
    h_min: f64,
    h_max: f64,
    alpha: f64,
) -> Result<MetricField> {
    check_len("recovered gradient", mesh.n_vertices(), gradient.len())?;
    if !(h_min > 0.0 && h_min < h_max) {
        return Err(Error::InvalidInput(format!(
            "need 0 < h_min < h_max, got {h_min}, {h_max}"
        )));
    }
    if !(alpha >= 1.0) {
        return Err(Error::InvalidInput(format!("anisotropy alpha = {alpha} must be >= 1")));
    }
    let m = gradient.iter().fold(0.0f64, |m, g| m.max(g.norm()));
    if !m.is_finite() {
        return Err(Error::InvalidInput("recovered gradient is not finite".into()));
    }
    if m == 0.0 {
        let g = Sym2::scalar(1.0 / (h_max * h_max));
        let mut f = MetricField::new(mesh.clone(), vec![g; mesh.n_vertices()])?;
        f.calibration = Some(MetricCalibration {
            h_min,
            h_max,
            alpha,
            max_gradient: 0.0,
            c: f64::INFINITY,
            delta: 1.0 / (h_max * h_max),
            fallback: true,
        });
        log::warn!("recovered gradient vanishes; using a uniform metric");
        return Ok(f);
    }
    let c = 1.0 / (h_min * h_min * m * m);
    let delta = (alpha / c).sqrt() / h_max;
    let tensors: Vec<Sym2> = gradient
        .par_iter()
        .map(|g| {
            let n = g.norm();
            if n > delta {
                let s = c * n * n;
                Sym2::from_eigen(s, s / alpha, *g * (1.0 / n))
            } else {
                Sym2::scalar(delta)
            }
        })
        .collect();
    let mut f = MetricField::new(mesh.clone(), tensors)?;
    f.calibration = Some(MetricCalibration {
        h_min,
        h_max,
        alpha,
        max_gradient: m,
        c,
        delta,
        fallback: false,
    });
    Ok(f)
}

/// `∫₀¹ sqrt((q−p)ᵀ G(p + t(q−p)) (q−p)) dt` by five-point Gauss–Legendre.
pub fn metric_segment_length<M: MetricSampler + ?Sized>(metric: &M, p: Vec2, q: Vec2) -> f64 {
    let d = q - p;
    let (x, w) = gauss_legendre_unit(5);
    x.iter()
        .zip(&w)
        .map(|(&t, &wt)| wt * metric.at(p.lerp(q, t)).quad(d).sqrt())
        .sum()
}

/// Side-one equilateral reference triangle centred at the origin, vertices at
/// 90°, 210° and 330°.
pub fn reference_triangle() -> [Vec2; 3] {
    let rho = 1.0 / 3f64.sqrt();
    [90.0f64, 210.0, 330.0].map(|deg| {
        let a = deg.to_radians();
        Vec2::new(rho * a.cos(), rho * a.sin())
    })
}

/// Squared radius of the Steiner circle of the reference triangle.
pub const STEINER_RADIUS2: f64 = 1.0 / 3.0;

/// Polar decomposition `F = P W` of the affine map from the reference
/// triangle onto a triangle.
#[derive(Debug, Clone, Copy)]
pub struct SteinerData {
    pub f: Mat2,
    pub p: Sym2,
    pub w: Mat2,
    pub centroid: Vec2,
}

pub fn steiner_polar(a: Vec2, b: Vec2, c: Vec2) -> Result<SteinerData> {
    let area2 = orient2d(a, b, c);
    if !(area2 > 0.0) {
        return Err(Error::Geometry(format!(
            "triangle is degenerate or clockwise (twice area {area2:e})"
        )));
    }
    let v0 = (a + b + c) * (1.0 / 3.0);
    let r = reference_triangle();
    let x = Mat2::from_cols(a - v0, b - v0);
    let rm = Mat2::from_cols(r[0], r[1]);
    let f = x.mul_mat(&rm.inverse().expect("reference triangle is non-degenerate"));
    let p = f.gram_outer().map_eigen(f64::sqrt);
    let w = p
        .inverse()
        .ok_or_else(|| Error::Geometry("singular polar factor".into()))?
        .as_mat()
        .mul_mat(&f);
    Ok(SteinerData {
        f,
        p,
        w,
        centroid: v0,
    })
}

/// Element metric `P⁻²`.
pub fn element_metric(s: &SteinerData) -> Sym2 {
    s.p.map_eigen(|l| 1.0 / (l * l))
}

/// `max_K ‖G(centroid_K) − P_K⁻²‖_max`.
pub fn metric_conformity<M: MetricSampler + ?Sized>(mesh: &TriMesh, metric: &M) -> f64 {
    (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            let s = steiner_polar(a, b, c).expect("mesh triangles are positive");
            (metric.at(s.centroid) - element_metric(&s)).max_abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Metric lengths of all mesh edges.
pub fn edge_metric_lengths<M: MetricSampler + ?Sized>(mesh: &TriMesh, metric: &M) -> Vec<f64> {
    mesh.edges()
        .par_iter()
        .map(|&[a, b]| metric_segment_length(metric, mesh.vertex(a), mesh.vertex(b)))
        .collect()
}

/// Fraction of edges whose metric length lies in `[1/√2, √2]`.
pub fn in_band_fraction<M: MetricSampler + ?Sized>(mesh: &TriMesh, metric: &M) -> f64 {
    let l = edge_metric_lengths(mesh, metric);
    let lo = std::f64::consts::FRAC_1_SQRT_2;
    let hi = std::f64::consts::SQRT_2;
    l.iter().filter(|&&x| (lo..=hi).contains(&x)).count() as f64 / l.len() as f64
}
