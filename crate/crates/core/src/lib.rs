//! Stochastic claims reserving on run-off triangles, and the machinery for
//! comparing reserving methods by proper scoring rules.
//!
//! The crate covers the five parametric development models (log-normal,
//! negative binomial, Poisson, over-dispersed Poisson, gamma), the residual
//! bootstrap and two ratio-resampling methods, sample-based evaluation
//! (CRPS, energy score, PIT, P-P curves, interval coverage, MSEP), a
//! reproducible Monte Carlo study harness, and the four-actuary examples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chainladder;
pub mod examples;
pub mod harness;
pub mod models;
pub mod resampling;
pub mod rng;
pub mod sampling;
pub mod scoring;
pub mod triangle;

pub use chainladder::{
    fit_chain_ladder, ChainLadderError, ChainLadderFit, DevFactors, PayoutPattern, ResidualAdjustment, VariancePower,
};
pub use examples::{analytic_msep, run_example, ActuaryKind, ExampleReport, MsepReference, Setting};
pub use harness::{
    emit_report, run_study, run_study_with_threads, Method, Preset, StudyConfig, StudyError, StudyReport,
};
pub use models::{fit, generate_scenario, ModelError, ModelKind, ModelParams, ParametricPredictor, ScenarioTruth};
pub use resampling::{BootstrapConfig, Diagnostics, Prediction, ResamplingError, UnifnormVariance};
pub use rng::{derive_seed, stream, StreamRng};
pub use scoring::{PredictiveSample, ScenarioScore};
pub use triangle::{parse_csv, CsvOptions, Flavor, Mask, Target, Triangle, TriangleError, UltimateClaim};
