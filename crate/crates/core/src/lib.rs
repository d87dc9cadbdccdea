//! Alternating-minimization phase retrieval under complex Gaussian sensing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altmin;
pub mod complex;
pub mod dynamics;
pub mod error;
pub mod expectations;
pub mod experiments;
pub mod probes;
pub mod rng;
pub mod sensing;
pub mod stats;

pub use error::{Error, Result};
