//! Experiment orchestration: seeded streams, per-step losses, smoothing and
//! summaries, and named recipes for the standard systems.

mod analysis;
mod config;
mod output;
mod run;

pub use analysis::{decile_summary, mean_curve, smooth, spectral_gap, DecileSummary};
pub use config::{load_config, parse_override, recipe, Disturbance, ExperimentConfig, Observe, SystemKind, RECIPES};
pub use output::{summary_json, write_run};
pub use run::{generate_episode, run_experiment, seed_list, stream, Episode, PredictorRecord, RunRecord, SeedRun};
