//! Fourier-domain feature attribution for small neural networks.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`fourier`]: exact 2D DFTs, spectral energy and component deletion.
//! - [`nn`]: a minimal differentiable-model kernel (forward, cross-entropy,
//!   exact input gradients, seeded SGD training) plus dataset ingestion and
//!   a planted-frequency oracle dataset.
//! - [`attribution`]: the fast Fourier correlation scorer and the spatial
//!   and Fourier-domain baselines it is compared against.
//! - [`game`]: deletion-game evaluation with relative-confidence curves and
//!   AUC in either domain under equal-count budgets.
//! - [`analysis`]: high-score feature characteristics, maintain-rate curves,
//!   misclassification correction and spatial rendering of deleted features.

pub mod analysis;
pub mod attribution;
pub mod error;
pub mod fourier;
pub mod game;
pub mod io;
pub mod nn;

pub use error::{Error, Result};
