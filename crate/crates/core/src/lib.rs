//! Pseudo-spectral laboratory for the damped critical Klein-Gordon equation
//!
//! ```text
//! u_tt - Lap u + u + u^5 + a(x)^2 u_t = g(t, x)      on the flat torus T^d
//! ```
//!
//! in dimensions 1 to 3: simulation, energy and decay diagnostics, geometric
//! control checks, exact control by the Hilbert Uniqueness Method, and
//! concentrating-data experiments.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`). The aliases at the crate root fix `f64`.

// `!(x > 0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hum;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid64 = spectral::TorusGrid<f64>;
pub type Grid32 = spectral::TorusGrid<f32>;
pub type Field64 = spectral::Field<f64>;
pub type Field32 = spectral::Field<f32>;
pub type State64 = dynamics::State<f64>;
pub type State32 = dynamics::State<f32>;
pub type Stepper64 = dynamics::Stepper<f64>;
pub type Stepper32 = dynamics::Stepper<f32>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type Damping64 = dynamics::DampingProfile<f64>;
pub type Region64 = geometry::ControlRegion<f64>;
pub type Adjoint64 = hum::AdjointDatum<f64>;
