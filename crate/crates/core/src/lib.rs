//! Similar-shape prediction of daily load curves.
//!
//! Daily load segments are rescaled by their maximum; the next day's shape is
//! a kernel-weighted average of all past shapes, weighted by closeness to a
//! reference built from recent same-group days with similar temperatures.

pub mod baselines;
pub mod cli;
pub mod domain;
pub mod error;
pub mod evaluation;
pub mod ingestion;
pub mod predictor;
pub mod reference;
pub mod synthetic;

pub use error::{Result, SspError};
