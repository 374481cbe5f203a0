//! Experiment orchestration: configuration, trial execution, statistics and
//! output.

pub mod cache;
pub mod config;
pub mod metrics;
pub mod record;
pub mod runner;
pub mod summary;

pub use config::{ExperimentConfig, Method};
pub use metrics::{geometric_stats, relative_error, ErrorNorm, GeometricStats};
pub use record::{ExperimentOutput, OutputFormat, RecordRow, TrialFailure, CSV_HEADER};
pub use runner::{run_experiment, run_prepared, Prepared};
pub use summary::{curve, loglog_slope, sample_counts, CurvePoint, Metric};
