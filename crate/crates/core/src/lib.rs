//! Simulation of single-photon absorption by a three-level Λ emitter driven
//! by a single-photon source through a unidirectional (cascaded) channel.
//!
//! - [`space`] and [`operator`]: dense linear algebra on small product spaces.
//! - [`cascade`]: the physical models and their Hamiltonians.
//! - [`trajectory`]: Monte Carlo wavefunction ensembles.
//! - [`lindblad`]: the master equation, used as ground truth.
//! - [`obe`]: closed-form weak-drive results for the lone target.
//! - [`config`], [`runner`] and [`plot`]: sweep orchestration and export.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod config;
pub mod error;
mod kernel;
pub mod lindblad;
pub mod obe;
pub mod operator;
pub mod plot;
pub mod runner;
pub mod space;
pub mod trajectory;

pub use error::{Error, Result};
