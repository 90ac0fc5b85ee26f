#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalogue;
pub mod cli;
pub mod error;
pub mod frames;
pub mod hermitian;
pub mod jet;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod riemann;
pub mod theorems;
pub mod twistor;

pub use error::{Error, Result};
