//! Pseudospectral toolkit for the semiclassical nonlinear Schrödinger equation
//!
//! ```text
//! iε ∂_t ψ + ε² Δψ - b |ψ|^{2σ} ψ = 0
//! ```
//!
//! with Wigner-transform diagnostics and Wiener–Sobolev (`A^s`) norms.

pub mod acceptance;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod grid;
pub mod initial_data;
pub mod io;
pub mod norms;
pub mod phase_space;
pub mod regime;
pub mod sweep;
pub mod tables;

pub use error::{Error, Result};
