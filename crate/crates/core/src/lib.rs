//! Pseudospectral laboratory for wave breaking in nonlocal perturbations of
//! the Burgers equation `u_t + (u²/2)_x = N[u]`.
//!
//! The crate is organised bottom-up: [`spectral`] provides the periodic grid
//! and Fourier machinery, [`operators`] realises `N` for each model,
//! [`criteria`] evaluates the explicit breaking criteria, [`evolution`]
//! integrates the equation, and [`diagnostics`] ties them together.

pub mod criteria;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod operators;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
