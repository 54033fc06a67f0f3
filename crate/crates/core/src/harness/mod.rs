//! Experiment driver: configuration, estimators, reference solutions, rate
//! fits, studies and output files.

pub mod config;
pub mod estimate;
pub mod fit;
pub mod output;
pub mod reference;
pub mod study;

pub use config::{ErrorMode, ExperimentConfig, ObservableSpec, SamplerKind, TimeReference};
pub use estimate::{
    generating_vector, mc_estimate, qmc_estimate, run_estimate, standard_error, EstimatorResult,
    Problem,
};
pub use fit::{fit_rate, FitAxis, RateFit};
pub use reference::{reference_problem, reference_solution, ReferenceSolution};
pub use study::{
    matched_reference_config, rms_errors_against, run_sample_study, run_time_study,
    sampled_reference, time_study_reference, Study, StudyRow,
};
