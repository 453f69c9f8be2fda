//! Torus discretization, Fourier transforms and the norms used as diagnostics.

mod field;
mod grid;
mod norms;
pub mod snapshot;
mod transform;

pub use field::Field;
pub use grid::TorusGrid;
pub use norms::{besov_norm, gradient_norm, lp_norm, sobolev_norm, sobolev_norm_of};
pub use transform::{apply_spectral_multiplier, dealiased_power, derivative, gradient, Spectrum};
