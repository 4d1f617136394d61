//! Scenario files, run persistence, the `marketflow` command-line tool and
//! the HTTP service, on top of `marketflow-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attributes;
pub mod cli;
pub mod error;
pub mod export;
pub mod report;
pub mod runs;
pub mod scenario;
pub mod server;
pub mod trajectory;

pub use error::{Diagnostic, Error, Result};
