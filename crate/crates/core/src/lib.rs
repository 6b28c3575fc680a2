//! Chordal SLE in the upper half-plane.
//!
//! [`loewner`] builds traces from sampled driving functions by composing
//! vertical-slit maps. [`diffusion`] covers the angular diffusion and its
//! eigenproblem. [`estimators`] holds the Monte Carlo hitting estimates,
//! power-law fits and the partition sum. [`fractal`] does box counting and
//! swallowing diagnostics. Every random quantity is a function of an
//! explicit `u64` seed; see [`rng`].

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod estimators;
pub mod fractal;
pub mod loewner;
pub mod rng;

pub use error::{Result, SleError};
