//! Numerical laboratory for the parabolic Anderson model `∂v/∂t = Δᵈv + ξv`
//! with almost-bounded i.i.d. potentials.
//!
//! The numerical kernels are generic over [`scalar::Real`]; the aliases below
//! fix the scalar to `f64`, which is what the stochastic modules use.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confinement;
pub mod continuum;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod variational;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Grid = grid::GridSpec<f64>;
pub type Function = grid::GridFunction<f64>;
pub type Eigen = spectral::EigenResult<f64>;
pub type Operator = spectral::LatticeOperator<f64>;
pub type Variational = variational::VariationalResult<f64>;
pub type Shape = confinement::ShapeDistance<f64>;
pub type Window = confinement::ShapeWindow<f64>;
pub type Pieces = continuum::PiecewiseConstant<f64>;
