//! Deviation tests for marked point patterns.
//!
//! The crate estimates mark-weighted K-functions, turns them into transformed and scaled
//! residuals, collapses those into global deviation measures and ranks the data among
//! mark permutations (the random labelling test). Simulators for inhibitory and
//! Cox-process alternatives, a power-study harness and exact power for two toy examples
//! sit on top.

pub mod deviation;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod mctest;
pub mod models;
pub mod pattern;
pub mod residuals;
pub mod rng;
pub mod toypower;

pub use deviation::{deviation_measure, DeviationKind};
pub use error::{Error, Result};
pub use estimators::{
    estimate_chat_f, estimate_kf, transform, translational_factor, EdgeCorrection,
    MarkTestFunction, PairGeometry, Transformation,
};
pub use mctest::{compute_t0, permute_marks, run_test, PermutationEnsemble, T0Mode, TestConfig, TestResult, T0};
pub use pattern::{
    mark_summary, pairwise_distances, window_grid, FunctionEstimate, MarkSummary, MarkedPattern,
    RGrid, Window,
};
pub use residuals::{build_null_distribution, compute_residuals, NullDistribution, ScalingKind};
pub use models::{simulate, GaussianFieldSpec, ModelFamily, ModelSpec, Simulator};
pub use toypower::{folded_normal_cdf, toy_power_curve, PowerPoint, ToyCase};
pub use harness::{estimate_power, run_power_study, PowerRow, PowerTable, StudyConfig};
