//! Data from the shape-function model and the Monte Carlo consistency
//! experiment.
//!
//! Each day draws a temperature profile from a finite pool, shifts it by a
//! Gaussian offset, maps it through the shape function of the day's group and
//! adds white noise.

mod experiment;
mod model;

pub use experiment::{
    consistency_experiment, experiment_csv, DeltaSchedule, ExperimentConfig, ExperimentRow,
    ExperimentTable, LengthSummary, PowerSchedule, WindowSchedule,
};
pub use model::{
    day_rng, default_shape_functions, default_temperature_pool, generate, DayTruth, ShapeFunction,
    ShapeKind, SyntheticData, SyntheticSpec,
};
