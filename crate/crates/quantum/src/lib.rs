//! Quantum-side analyses of max-k-XORSAT: QAOA energies on the biregular
//! hypertree with a statevector cross-check, and an exact small-code
//! simulation of Regev's reduction with imperfect decoders.

pub mod error;
pub mod optim;
pub mod qaoa;
pub mod regev;

pub use error::{Error, Result};
