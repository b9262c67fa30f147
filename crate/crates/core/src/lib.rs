//! Resistor networks and random walks on lattices whose edge resistances are
//! `exp(γ φ)` for a white-noise approximation `φ` of the Gaussian free field.

pub mod error;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod measure;
pub mod network;
pub mod resistance;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
