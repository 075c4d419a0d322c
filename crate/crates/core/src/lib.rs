//! Method-level fault localization from coverage spectra and crash-report
//! stack traces.
//!
//! The pipeline parses a stack trace ([`stacktrace`]), loads a bug's
//! coverage matrix ([`coverage`]) and ranks methods by suspiciousness with
//! plain Ochiai ([`sbfl`]), stack position ([`baselines`]) or the
//! trace-proxied combination in [`sbest`]. [`eval`] and [`harness`] score
//! rankings against ground truth; [`callgraph`] measures how far the trace
//! lies from the fault.

pub mod baselines;
pub mod bug;
pub mod callgraph;
pub mod cli;
pub mod coverage;
pub mod error;
pub mod eval;
pub mod harness;
pub mod method;
pub mod sbest;
pub mod sbfl;
pub mod stacktrace;
pub mod warning;

pub use error::{Error, Result};
pub use method::MethodId;
