//! Evaluation and positivity experiments for
//! `f_n(x) = d^n/dx^n ( x^n / (1 - e^{-x}) )`.
//!
//! Four independent representations of `f_n` live in [`feval`]; [`analysis`]
//! runs the sign scans and identity checks over them, and [`report`] / [`cli`]
//! turn the results into reproducible JSON/CSV artefacts.

pub mod analysis;
pub mod arith;
pub mod cli;
pub mod error;
pub mod feval;
pub mod orthopoly;
pub mod polygamma;
pub mod precision;
pub mod report;

pub use error::{Error, Result};
pub use precision::{PrecisionContext, RealScalar};
