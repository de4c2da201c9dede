//! Finite truncated models of mixed q-deformed Araki-Woods algebras.

pub mod cli;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod modular;
pub mod ops;
pub mod perm;
pub mod probability;

pub use error::{Error, Result};
