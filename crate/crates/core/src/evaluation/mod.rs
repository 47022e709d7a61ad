//! Test-set evaluation, the experiment grid and the results table.

mod evaluate;
mod experiment;
mod grid;
mod results;

pub use evaluate::{evaluate, label_subset, predict_class, Accuracy};
pub use experiment::{
    prepare_data, synthetic_manifest, synthetic_noise_banks, synthetic_ood_manifest, CorpusConfig, ExperimentConfig, ExtraTestSet,
    ManifestCorpus, PreparedData, SyntheticCorpus, TestSet,
};
pub use grid::{run_cell, run_grid, FailedCell, GridOutcome, FAILURES_FILE, RESULTS_FILE};
pub use results::{
    load_results, read_results, save_results, sort_results, write_results, EvalResult, TrainCondition,
    RESULTS_HEADER,
};
