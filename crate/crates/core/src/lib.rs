//! Synthesis, multiscale statistics and singular quadrature for a skewed
//! multifractal random field on the periodic unit interval.
//!
//! The field is a fractional kernel `phi` applied to white noise that has
//! been reweighted by a Gaussian multiplicative chaos and coupled to itself
//! through an odd kernel `k`. [`synth`] produces realizations, [`stats`]
//! measures increment moments on them, [`special`] evaluates the
//! deterministic integrals that predict those moments, and [`model`] holds
//! the closed-form scaling laws.

pub mod conv;
pub mod error;
pub mod io;
pub mod kernels;
pub mod model;
pub mod special;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use model::{ModelParams, Variant};
