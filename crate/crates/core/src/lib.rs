//! Simulation of four-dimensional BB84 key distribution with hybrid
//! polarisation/OAM photon modes, deterministic analysers, sifting and
//! security analysis.

pub mod angle;
pub mod channel;
pub mod codebook;
pub mod detection;
pub mod error;
pub mod hilbert;
pub mod optics;
pub mod protocol;
pub mod rng;
pub mod security;

pub use error::{Error, Result};
