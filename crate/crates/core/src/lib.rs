// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advisors;
pub mod baselines;
pub mod error;
pub mod game;
pub mod harness;
pub mod learner;
pub mod matlac;
pub mod matlql;
pub mod schedule;
pub mod tables;
pub mod theory;
pub mod trainer;

pub use error::{Error, Result};
