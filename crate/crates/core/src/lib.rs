//! Identification of an unknown pure state as one of two unknown reference
//! states, with joint and two-party (LOCC) measurements.

pub mod error;
pub mod linalg;
pub mod minerr;
pub mod povm;
pub mod report;
pub mod simulate;
pub mod symmetry;
pub mod unambiguous;

pub use error::{Error, Result};
