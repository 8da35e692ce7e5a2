//! Training orchestration: the run loop, periodic evaluation, metrics files
//! and the four-arm ablation.

mod ablation;
mod metrics;
mod run;

pub use ablation::{run_ablation, run_ablation_seeds, AblationArm, AblationSummary, Variant, SUMMARY_HEADER};
pub use metrics::{read_metrics_csv, smooth, write_metrics_csv, MetricsRow, MetricsWriter, METRICS_HEADER};
pub(crate) use run::split_sections;
pub use run::{evaluate, run_training, run_training_with, Learner, RunConfig, RunOutput, Trainer, RUN_KEYS};
