#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cross;
pub mod error;
pub mod linalg;
pub mod lowrank;
pub mod oracle;
pub mod precond;
pub mod problems;

pub use error::{Error, Result};
pub mod reference;
pub mod solver;
