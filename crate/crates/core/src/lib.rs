//! Conditional variable screening for ultrahigh-dimensional linear models.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: complement bases, projections, pseudo-inverses, least squares.
//! - [`datagen`]: covariance families, coefficient rules and seeded dataset sampling.
//! - [`screeners`]: one-shot scores (SIS, CSIS, HOLP, COLP), ranking and truncation.
//! - [`pathwise`]: FOLP and forward regression solution paths, EBIC selection.
//! - [`harness`]: Monte-Carlo runner, screening / post-selection metrics, CSV output.
//! - [`classify`]: post-screening classification of labelled tabular data.
//!
//! Indices are 0-based everywhere in the library; the CLI and the JSON run
//! configuration use 1-based indices.

pub mod classify;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod pathwise;
pub mod screeners;

pub use error::{Error, Result};
pub use linalg::{IndexSet, Matrix, Vector};
