//! Observation operators and synthetic targets.

pub mod darcy;
pub mod data;
pub mod phantom;
pub mod tomo;

pub use darcy::{assemble_darcy_operators, darcy_forward_matrix, observation_grid, DarcyOperator, P2Space};
pub use data::{add_noise, NoiseLevel, SyntheticData};
pub use phantom::{make_phantom, Inclusion, Phantom, DARCY_AMPLITUDE};
pub use tomo::{tomo_apply, tomo_system_matrix, trace_ray, FanBeamGeometry, Ray, RaySegment, TomoOperator};

use crate::sparse::{CsrMatrix, DenseMatrix, LinOp};

/// Forward matrix restricted to the unknowns, sparse or dense.
#[derive(Debug, Clone)]
pub enum ForwardMatrix {
    Sparse(CsrMatrix),
    Dense(DenseMatrix),
}

impl ForwardMatrix {
    /// Divides every row by `s` (noise whitening).
    pub fn scaled(&self, s: f64) -> ForwardMatrix {
        match self {
            ForwardMatrix::Sparse(a) => ForwardMatrix::Sparse(a.scale_rows(&vec![1.0 / s; a.nrows()])),
            ForwardMatrix::Dense(a) => {
                let mut a = a.clone();
                a.scale(1.0 / s);
                ForwardMatrix::Dense(a)
            }
        }
    }
}

impl LinOp for ForwardMatrix {
    fn nrows(&self) -> usize {
        match self {
            ForwardMatrix::Sparse(a) => a.nrows(),
            ForwardMatrix::Dense(a) => a.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            ForwardMatrix::Sparse(a) => a.ncols(),
            ForwardMatrix::Dense(a) => a.ncols(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            ForwardMatrix::Sparse(a) => a.apply(x, y),
            ForwardMatrix::Dense(a) => a.apply(x, y),
        }
    }

    fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        match self {
            ForwardMatrix::Sparse(a) => a.apply_t(x, y),
            ForwardMatrix::Dense(a) => a.apply_t(x, y),
        }
    }
}
