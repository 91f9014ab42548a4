//! Power-based compensation of slowly diverging output oscillations with
//! online estimation of the biased harmonic's frequency, amplitude and bias.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod ksweep;
pub mod lti;
pub mod plant;
pub mod powerctl;
pub mod sim;

pub use error::{ConfigError, Error, Result};
