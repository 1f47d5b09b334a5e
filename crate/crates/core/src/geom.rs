//! Small fixed-size 2D algebra: points, general 2×2 matrices and symmetric
//! 2×2 tensors with closed-form eigen decompositions.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// Counterclockwise rotation by 90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when counterclockwise.
pub fn orient2d(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * orient2d(a, b, c)
}

/// Quality 2·inradius/circumradius, equal to 1 for an equilateral triangle.
pub fn radius_ratio(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let area = triangle_area(a, b, c).abs();
    if area == 0.0 {
        return 0.0;
    }
    let s = 0.5 * (la + lb + lc);
    let inradius = area / s;
    let circumradius = la * lb * lc / (4.0 * area);
    2.0 * inradius / circumradius
}

/// General 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    /// Matrix whose columns are `c0` and `c1`.
    pub fn from_cols(c0: Vec2, c1: Vec2) -> Self {
        Mat2::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        Mat2 { m: r }
    }

    /// `self · selfᵀ`, always symmetric.
    pub fn gram_outer(&self) -> Sym2 {
        let [[a, b], [c, d]] = self.m;
        Sym2::new(a * a + b * b, a * c + b * d, c * c + d * d)
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                r = r.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        r
    }
}

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Eigen decomposition of a [`Sym2`]; `major` is the unit eigenvector of `large`.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    pub large: f64,
    pub small: f64,
    pub major: Vec2,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn scalar(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    /// Tensor `large·e eᵀ + small·e⊥ e⊥ᵀ` for a unit vector `e`.
    pub fn from_eigen(large: f64, small: f64, e: Vec2) -> Self {
        let (c, s) = (e.x, e.y);
        Sym2::new(
            large * c * c + small * s * s,
            (large - small) * c * s,
            large * s * s + small * c * c,
        )
    }

    pub fn eigen(&self) -> SymEigen {
        let half_tr = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        let angle = if self.xy == 0.0 && half_diff == 0.0 {
            0.0
        } else {
            0.5 * (2.0 * self.xy).atan2(self.xx - self.yy)
        };
        SymEigen {
            large: half_tr + r,
            small: half_tr - r,
            major: Vec2::new(angle.cos(), angle.sin()),
        }
    }

    /// Applies `f` to the eigenvalues.
    pub fn map_eigen(&self, f: impl Fn(f64) -> f64) -> Sym2 {
        let e = self.eigen();
        Sym2::from_eigen(f(e.large), f(e.small), e.major)
    }

    pub fn log(&self) -> Sym2 {
        self.map_eigen(f64::ln)
    }

    pub fn exp(&self) -> Sym2 {
        self.map_eigen(f64::exp)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    pub fn quad(&self, v: Vec2) -> f64 {
        self.xx * v.x * v.x + 2.0 * self.xy * v.x * v.y + self.yy * v.y * v.y
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.xx * v.x + self.xy * v.y,
            self.xy * v.x + self.yy * v.y,
        )
    }

    pub fn as_mat(&self) -> Mat2 {
        Mat2::new(self.xx, self.xy, self.xy, self.yy)
    }

    /// Entrywise maximum norm.
    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    pub fn is_spd(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => (
            &[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8],
            &[1.0, 1.0],
        ),
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[0.555_555_555_555_555_6, 0.888_888_888_888_888_8, 0.555_555_555_555_555_6],
        ),
        _ => (
            &[
                -0.906_179_845_938_664,
                -0.538_469_310_105_683_1,
                0.0,
                0.538_469_310_105_683_1,
                0.906_179_845_938_664,
            ],
            &[
                0.236_926_885_056_189_1,
                0.478_628_670_499_366_5,
                0.568_888_888_888_888_9,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_1,
            ],
        ),
    };
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_roundtrip() {
        let g = Sym2::new(3.0, 1.2, -0.5);
        let e = g.eigen();
        let back = Sym2::from_eigen(e.large, e.small, e.major);
        assert!((back - g).max_abs() < 1e-14);
        assert!(e.large >= e.small);
        let gv = g.mul_vec(e.major);
        assert!((gv - e.major * e.large).norm() < 1e-13);
    }

    #[test]
    fn log_exp_inverse() {
        let g = Sym2::new(4.0, -1.0, 2.0);
        assert!((g.log().exp() - g).max_abs() < 1e-13);
    }

    #[test]
    fn diagonal_and_scalar_eigen() {
        let e = Sym2::new(1.0, 0.0, 4.0).eigen();
        assert_eq!(e.large, 4.0);
        assert_eq!(e.small, 1.0);
        assert!((e.major.y.abs() - 1.0).abs() < 1e-15);
        let s = Sym2::scalar(2.0).eigen();
        assert_eq!((s.large, s.small), (2.0, 2.0));
    }

    #[test]
    fn gauss_five_integrates_degree_nine() {
        let (x, w) = gauss_legendre_unit(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-14);
    }
}
