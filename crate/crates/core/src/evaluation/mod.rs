//! Error metrics, the four-model comparison protocol and parameter sweeps.

mod experiment;
mod metrics;
mod report;
mod sweep;

pub use experiment::{run_experiment, run_experiment_with, ExperimentConfig, ExperimentError, RunArtifacts, Stage};
pub use metrics::{evaluate, mae, rmse, Metrics, MAX_RATING, MIN_RATING};
pub use report::{EvaluationReport, Metric, ModelKind, RunRow, SummaryRow};
pub use sweep::{sweep, SweepParameter, SweepPoint, SweepReport, SweepRun, SweepSpec};
