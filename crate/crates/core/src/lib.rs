//! Pseudo-spectral simulation of the forced critical SQG equation on the unit
//! torus, with numerical diagnostics for its dissipative estimates.

pub mod checkpoint;
pub mod diagnostics;
pub mod dissipation;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod holder;
pub mod operators;

pub use error::{Result, SqgError};
pub use field::{Mode, SpectralField, TruncatedField};
pub use grid::TorusGrid;
