//! Column-streaming matrix completion with adaptive sampling.
//!
//! Columns of a low-rank matrix arrive one at a time and each is observed
//! on a small random subset of rows. A column that the current basis
//! cannot explain is measured in full and becomes a basis column; every
//! other column is completed from its samples.
//!
//! * [`tracker`] handles bounded deterministic noise on every column.
//! * [`exact`] recovers the matrix exactly when a few columns are replaced
//!   by random noise, and names those columns.
//! * [`datagen`] builds seeded test instances and [`harness`] runs
//!   experiments over them.

pub mod datagen;
pub mod error;
pub mod exact;
pub mod harness;
pub mod linalg;
pub mod matrix_io;
pub mod report;
pub mod sampling;
pub mod tracker;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
