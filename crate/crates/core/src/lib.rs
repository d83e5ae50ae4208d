//! Entanglement structures on graphs and hypergraphs, restrictions and
//! degenerations between them, and exact recovery of states and expectation
//! values from degenerations by Lagrange interpolation in the formal
//! parameter. Boundary-MPS contraction with non-uniform bond dimensions
//! provides the lattice-scale evaluation backend.

pub mod boundary;
pub mod conversions;
mod error;
pub mod interpolation;
pub mod json;
pub mod linalg;
pub mod observable;
pub mod structures;
pub mod tensor;
pub mod zoo;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Relative singular-value cutoff used for rank decisions unless a caller
/// supplies its own.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
