//! Spectral simulation and numerical verification for the periodic nonlinear
//! Schrödinger equation with white-noise dispersion,
//! `i du = Δu ∘ dW_t + |u|^{p-1} u dt` on the 2π-torus.

pub mod campaigns;
pub mod error;
pub mod flow;
pub mod moments;
pub mod paths;
pub mod resonance;
pub mod spectral;
pub mod stats;
pub mod witness;

pub use error::{Error, Result};
