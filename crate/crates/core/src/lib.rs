//! Classical side of the max-k-XORSAT workbench.
//!
//! Instances are `D`-regular max-`k`-XORSAT problems `min |Bx - v|` whose
//! transposed constraint matrix `B^T` is drawn from Gallager's ensemble.
//! The crate provides:
//!
//! - [`gf2`]: bit-packed linear algebra over F2,
//! - [`ensemble`]: instance sampling, the block partition and short-cycle audits,
//! - [`theory`]: closed-form predictions (erasure threshold, FGUM and Turbo
//!   Prange scores, `sigma_D`, large-`D` asymptotics),
//! - [`solvers`]: Prange, Turbo Prange, simulated annealing and greedy,
//! - [`fgum`]: Monte Carlo of the block-erasure channel induced by the
//!   fine-grained unambiguous measurement,
//! - [`bp`]: sum-product decoding and density evolution on the BSC.

pub mod bp;
pub mod ensemble;
pub mod error;
pub mod fgum;
pub mod gf2;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use gf2::{GF2Matrix, GF2Vector};
