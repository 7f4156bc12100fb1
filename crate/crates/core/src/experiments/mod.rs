//! Cross-lingual and multilingual transfer experiments: train/test
//! matrices, F1 aggregation, reports and latent-space dumps.

pub mod config;
pub mod latents;
pub mod metrics;
pub mod report;
pub mod runner;

pub use config::{ConfigFile, DataRef, ExperimentConfig, Task, TrainSpec};
pub use latents::{export_latents, pca_2d, LatentDump, LatentPoint, Separation};
pub use metrics::{aggregate, compute_f1};
pub use report::{export_report, render_report, Report};
pub use runner::{
    experiment_dir, load_all_results, load_blm_splits, load_run_result, load_sentence_splits,
    run_experiment, run_experiments, CellResult, RunRecord, RunResult, Splits, EMBEDDINGS_FILE,
};
