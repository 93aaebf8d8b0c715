//! Error metrics, FOM caching, configuration, and multi-trial studies.

mod cache;
mod config;
pub mod io;
mod metrics;
mod problem;
mod study;

pub use cache::FomCache;
pub use config::{AcquisitionConfig, BasisConfig, ProblemConfig, StudyConfig, StudySettings, TimeConfig, PRESETS};
pub use metrics::{
    geometric_mean, instability_fraction, projection_error, projection_integrals, quantile, relative_rom_error,
    total_error, trapezoid, ErrorIntegrals, NormKind,
};
pub use problem::Problem;
pub use study::{
    aggregate, read_study, run_study, write_report, write_study, AcquisitionRow, CampaignOutcome, MetricsRow, Study,
    StudyResult, TrialAggregate, TrialResult,
};
