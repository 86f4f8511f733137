#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Scenario runner behind the `mlz` binary.

pub mod output;
pub mod runner;
pub mod scenario;

pub use runner::{run, Failure, Outcome};
pub use scenario::{load, validate, Issue, Scenario};
