//! Symmetric quadrature on triangles.

/// A rule in barycentric coordinates; weights sum to one, so integrals are
/// `area * Σ w f(λ)`.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

const SQRT15: f64 = 3.872_983_346_207_417;
const A1: f64 = (6.0 - SQRT15) / 21.0;
const A2: f64 = (6.0 + SQRT15) / 21.0;
const B1: f64 = 1.0 - 2.0 * A1;
const B2: f64 = 1.0 - 2.0 * A2;
const W1: f64 = (155.0 - SQRT15) / 1200.0;
const W2: f64 = (155.0 + SQRT15) / 1200.0;
const THIRD: f64 = 1.0 / 3.0;

/// Seven-point rule exact for polynomials of degree 5.
pub const DEGREE5: TriangleRule = TriangleRule {
    points: &[
        [THIRD, THIRD, THIRD],
        [A1, A1, B1],
        [A1, B1, A1],
        [B1, A1, A1],
        [A2, A2, B2],
        [A2, B2, A2],
        [B2, A2, A2],
    ],
    weights: &[9.0 / 40.0, W1, W1, W1, W2, W2, W2],
};

/// Three-point edge-midpoint rule exact for quadratics.
pub const DEGREE2: TriangleRule = TriangleRule {
    points: &[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    weights: &[THIRD, THIRD, THIRD],
};

impl TriangleRule {
    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}
