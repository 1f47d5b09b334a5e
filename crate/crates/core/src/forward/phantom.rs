//! Piecewise constant targets.

use crate::geom::Vec2;
use crate::mesh::TriMesh;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Inclusion {
    Disc {
        center: [f64; 2],
        radius: f64,
        value: f64,
    },
    /// `c + s R(rotation) (cos t + 0.65 cos 2t − 0.65, 1.5 sin t)`.
    Kite {
        center: [f64; 2],
        scale: f64,
        #[serde(default)]
        rotation: f64,
        value: f64,
    },
    /// Counterclockwise or clockwise simple polygon.
    Polygon { vertices: Vec<[f64; 2]>, value: f64 },
}

const KITE_SAMPLES: usize = 720;

impl Inclusion {
    pub fn value(&self) -> f64 {
        match self {
            Inclusion::Disc { value, .. }
            | Inclusion::Kite { value, .. }
            | Inclusion::Polygon { value, .. } => *value,
        }
    }

    /// Boundary as a closed polygon (curved shapes are sampled finely).
    pub fn outline(&self) -> Vec<Vec2> {
        match self {
            Inclusion::Disc { center, radius, .. } => (0..KITE_SAMPLES)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / KITE_SAMPLES as f64;
                    Vec2::new(center[0] + radius * t.cos(), center[1] + radius * t.sin())
                })
                .collect(),
            Inclusion::Kite {
                center,
                scale,
                rotation,
                ..
            } => {
                let (sr, cr) = rotation.sin_cos();
                (0..KITE_SAMPLES)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / KITE_SAMPLES as f64;
                        let x = t.cos() + 0.65 * (2.0 * t).cos() - 0.65;
                        let y = 1.5 * t.sin();
                        Vec2::new(
                            center[0] + scale * (cr * x - sr * y),
                            center[1] + scale * (sr * x + cr * y),
                        )
                    })
                    .collect()
            }
            Inclusion::Polygon { vertices, .. } => {
                vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect()
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Inclusion::Disc { center, radius, .. } => {
                (p - Vec2::new(center[0], center[1])).norm2() <= radius * radius
            }
            _ => point_in_polygon(&self.outline(), p),
        }
    }

    /// Exact area for discs and polygons; curved shapes use the outline.
    pub fn area(&self) -> f64 {
        match self {
            Inclusion::Disc { radius, .. } => PI * radius * radius,
            _ => polygon_area(&self.outline()).abs(),
        }
    }
}

/// Even-odd rule.
pub fn point_in_polygon(poly: &[Vec2], p: Vec2) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + n - 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub inclusions: Vec<Inclusion>,
}

/// Source strength of the default Darcy phantom.
pub const DARCY_AMPLITUDE: f64 = 30.0;

impl Phantom {
    /// Disc of value 1.2 and kite of value 1.0 in the unit disc.
    pub fn tomography_default() -> Phantom {
        Phantom {
            background: 0.0,
            inclusions: vec![
                Inclusion::Disc {
                    center: [-0.35, 0.30],
                    radius: 0.28,
                    value: 1.2,
                },
                Inclusion::Kite {
                    center: [0.35, -0.25],
                    scale: 0.22,
                    rotation: 0.0,
                    value: 1.0,
                },
            ],
        }
    }

    /// Two rectangles with sources `±DARCY_AMPLITUDE` in the unit square.
    pub fn darcy_default() -> Phantom {
        let rect = |x0: f64, y0: f64, x1: f64, y1: f64, value: f64| Inclusion::Polygon {
            vertices: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
            value,
        };
        Phantom {
            background: 0.0,
            inclusions: vec![
                rect(0.2, 0.55, 0.45, 0.8, DARCY_AMPLITUDE),
                rect(0.55, 0.2, 0.8, 0.45, -DARCY_AMPLITUDE),
            ],
        }
    }

    /// Value at a point; later inclusions override earlier ones.
    pub fn value_at(&self, p: Vec2) -> f64 {
        self.inclusions
            .iter()
            .rev()
            .find(|inc| inc.contains(p))
            .map_or(self.background, Inclusion::value)
    }
}

/// Nodal values of the phantom by point membership of each vertex.
pub fn make_phantom(phantom: &Phantom, mesh: &TriMesh) -> Vec<f64> {
    let outlines: Vec<Option<Vec<Vec2>>> = phantom
        .inclusions
        .iter()
        .map(|inc| match inc {
            Inclusion::Disc { .. } => None,
            _ => Some(inc.outline()),
        })
        .collect();
    mesh.vertices()
        .iter()
        .map(|&p| {
            for (inc, outline) in phantom.inclusions.iter().zip(&outlines).rev() {
                let inside = match outline {
                    Some(poly) => point_in_polygon(poly, p),
                    None => inc.contains(p),
                };
                if inside {
                    return inc.value();
                }
            }
            phantom.background
        })
        .collect()
}
