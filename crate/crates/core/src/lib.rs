//! Spectral simulation and fluctuation analysis for the stochastic
//! Cahn-Hilliard equation
//!
//! ```text
//! du = -Δ(Δu - f(u)) dt + sqrt(eps) sigma(u) dW,   x in [0, pi]^d,
//! ```
//!
//! with Neumann boundary conditions and space-time white noise.
//!
//! The crate provides the cosine eigenbasis and norms ([`spectral`],
//! [`norms`]), the modal Green function ([`green`]), deterministic and
//! stochastic exponential-Euler integrators ([`pde`], [`spde`]), the
//! moderate-deviation rate function ([`rate`]), Monte Carlo studies
//! ([`lab`]) and the configuration-driven experiment harness ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::wrong_self_convention)]

pub mod error;
pub mod green;
pub mod grid;
pub mod harness;
pub mod lab;
pub mod mc;
pub mod model;
pub mod norms;
pub mod pde;
pub mod rate;
mod scheme;
pub mod spde;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
pub use grid::GridSpec;
pub use model::{Cubic, HFamily, InitialDatum, ModelSpec, ScalingSpec, Sigma};
pub use norms::NormSpec;
pub use pde::Control;
pub use scheme::BLOW_UP_THRESHOLD;
pub use spde::NoisePath;
pub use spectral::{Field, SpectralField};
pub use trajectory::Trajectory;
