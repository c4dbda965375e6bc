//! Exact sampling from the Harish-Chandra–Itzykson–Zuber density on unitary
//! orbits, by way of Gelfand–Tsetlin polytopes, and its application to
//! differentially private rank-k projections.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
pub mod error;
pub mod fiber;
pub mod gt;
pub mod io;
pub mod linalg;
pub mod orbit;
pub mod sampler;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
pub use gt::{build_polytope, rayleigh_map, reduce_exponent, GtPolytope, RayleighTriangle};
pub use linalg::{HermitianMatrix, UnitaryMatrix, C64};
pub use sampler::{Mode, SamplerConfig};
