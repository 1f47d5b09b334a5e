//! Adaptive anisotropic meshing for hierarchical Bayesian inversion of linear
//! problems on triangulated planar domains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forward;
pub mod clement;
pub mod geom;
pub mod ias;
pub mod mesh;
pub mod metric;
pub mod pipeline;
pub mod quadrature;
pub mod remesh;
pub mod sparse;
pub mod whitney;

pub use error::{Error, Result};
