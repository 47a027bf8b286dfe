//! Numerical laboratory for multilinear restriction estimates.
//!
//! Modules follow the pipeline: [`frames`] and [`lattice`] describe the geometry,
//! [`partition`] builds Fourier-compact windows, [`extension`] evaluates extension
//! operators, [`loomis_whitney`] handles the discrete inequalities and
//! [`experiments`] drives sweeps and emits reports.

pub mod error;
pub mod experiments;
pub mod extension;
pub mod frames;
pub mod lattice;
pub mod loomis_whitney;
pub mod partition;
pub mod quadrature;

pub use error::{Error, Result};
