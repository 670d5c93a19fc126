//! Simulation of optically pumped nuclear polarization near an NV centre.

// `!(x > 0.0)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod liouville;
pub mod multispin;
pub mod physmodel;
pub mod rates;
pub mod singlespin;

pub use error::{DnpError, Result};
