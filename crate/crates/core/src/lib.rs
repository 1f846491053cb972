//! Numerical laboratory for sparse Hamiltonian simulation with `sqrt(d)`
//! scaling in the subordinate `1 -> 2` norm.
//!
//! Everything is measured against dense ground truth: oracles are built from
//! explicit fixed-point matrices, block-encodings are checked by extracting
//! their top-left block, and simulated evolutions are compared with `expm_i`.

pub mod blockenc;
pub mod costmodel;
pub mod dyson;
pub mod error;
pub mod gadgets;
pub mod instances;
pub mod numerics;
pub mod oracles;
pub mod recursion;
pub mod sparsesim;
pub mod suites;

pub use error::{Error, Result};
