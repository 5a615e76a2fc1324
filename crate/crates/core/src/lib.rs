#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bogoliubov;
pub mod cli;
pub mod coulomb;
pub mod error;
pub mod graf_schenker;
pub mod instability;
pub mod lieb_thirring;
pub mod numerics;
pub mod operators;
pub mod report;
pub mod rng;
pub mod thermo;

pub use error::{Error, Result};
pub use report::{Check, EnergyReport};
