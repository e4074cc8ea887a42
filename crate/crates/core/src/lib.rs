#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod io;
pub mod locator;
pub mod pipeline;
pub mod simulator;

pub use error::{Error, Result};
