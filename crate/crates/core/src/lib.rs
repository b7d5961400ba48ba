//! Controllability analysis and steering-control synthesis for linear systems
//! with a unit delay and distributed-delay kernels.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod expfn;
pub mod io;
pub mod model;
pub mod numeric;
pub mod simulator;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use numeric::C64;
