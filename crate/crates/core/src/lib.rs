//! Exact arithmetic for Weyl-invariant Jacobi forms on the E8 lattice.

pub mod checks;
pub mod e8;
pub mod error;
pub mod generators;
pub mod int;
pub mod jacobi;
pub mod linalg;
pub mod orbit_ring;
pub mod qseries;
pub mod structure;

pub use error::{Error, Result};
