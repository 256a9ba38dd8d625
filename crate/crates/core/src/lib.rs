//! Duo-landmark kernel spectral joint embeddings of two noisy datasets that
//! share a feature space.
//!
//! The pipeline screens the pair for alignability, builds the rectangular
//! Gaussian kernel between the datasets with a percentile bandwidth, and
//! embeds both sides through the singular vectors of the scaled kernel.
//! Random-matrix diagnostics flag pairs whose spectrum is pure noise.

pub mod data;
pub mod diagnostics;
pub mod embedding;
pub mod evaluation;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod kernel;
pub mod pipeline;
pub mod linalg;
pub mod neighbors;
pub mod rng;
pub mod screening;
pub mod simulation;

pub use data::{center_columns, load_csv, save_csv, DataMatrix, LabeledPartition};
pub use error::{Error, Result};
pub use exec::Exec;
pub use faer;
