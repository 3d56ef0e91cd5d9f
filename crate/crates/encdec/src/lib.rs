//! Encoding-decoding circuits under coherent errors.
//!
//! A register of `N` qubits is scrambled by an encoder `U`, hit by a uniform
//! Z rotation on every qubit, unscrambled by `U^dag`, and the last `N - k`
//! qubits are measured. The crate simulates this for Clifford and Haar
//! encoders, measures fidelity, magic and participation entropy of the
//! decoded logical state, evaluates the closed-form predictions for their
//! averages, and computes the replica averages behind those predictions.

pub mod clifford;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod haar;
pub mod harness;
pub mod metrics;
pub mod pauli;
pub mod replica;
pub mod scaling;
pub mod theory;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/clifford.md")]
    mod clifford {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/haar.md")]
    mod haar {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/replica.md")]
    mod replica {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
