//! The repair loop, checkpoint evaluation and batch experiments.

pub mod autotos;
pub mod cleanlog;
pub mod evaluate;
pub mod experiment;
pub mod record;

pub use autotos::{run_autotos, RunConfig};
pub use cleanlog::clean_log;
pub use evaluate::{evaluate_checkpoints, evaluate_components, Evaluation, InstanceResult, OptimumCache};
pub use experiment::{run_experiment, summarize, ExperimentConfig, ExperimentError, RunEntry, Summary};
pub use record::{Accuracies, Checkpoint, Event, Phase, RunRecord, RunStatus, Snapshot, Step};
