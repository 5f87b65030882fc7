//! Random standard quadratic programs over the simplex with GOE data.
//!
//! The crate is `no_std` and only needs `alloc`. It covers standard-normal
//! primitives, instance sampling, exact small-n solving, the pairwise edge
//! events that govern two-point optimizers, and deterministic quadrature of
//! the finite-n probabilities together with their asymptotic forms.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod events;
pub mod gauss;
pub mod goe;
pub mod quad;
pub mod solver;
pub mod terms;

pub use error::{Error, Result};
