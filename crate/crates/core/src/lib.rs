//! Seeded simulations of two-party communication protocols: message
//! compression by rejection sampling and correctors, privacy loss, exact
//! remote state preparation, and entanglement experiments.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cinfo;
pub mod cproto;
pub mod entres;
pub mod error;
pub mod ersp;
pub mod linalg;
pub mod par;
pub mod qmath;
pub mod qproto;
pub mod rng;

pub use error::{Error, Result};
