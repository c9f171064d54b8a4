#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod arbitrage;
pub mod cli;
pub mod counterexample;
pub mod curve;
pub mod error;
pub mod fx;
pub mod measure;
pub mod poly;
pub mod pricer;
pub mod quad;
pub mod sample;
pub mod simplex;
pub mod smooth;

pub use error::{Error, Result};
