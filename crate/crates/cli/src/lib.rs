//! Run configuration and command bodies behind the `perfcem` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
