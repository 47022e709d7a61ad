use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;

use super::evaluate::evaluate;
use super::experiment::{ExperimentConfig, PreparedData};
use super::results::{load_results, save_results, EvalResult, TrainCondition};
use crate::error::{Error, Result};
use crate::models::{save_model, Model, ModelSpec};
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::training::{train, TrainConfig};

/// A grid cell whose training or evaluation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedCell {
    pub model_id: String,
    pub train_condition: TrainCondition,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub results: Vec<EvalResult>,
    pub failures: Vec<FailedCell>,
    /// Cells trained in this invocation (the rest were already complete).
    pub trained: usize,
}

pub const RESULTS_FILE: &str = "results.csv";
pub const FAILURES_FILE: &str = "failures.csv";

fn write_failures(failures: &[FailedCell], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model_id", "train_condition", "reason"])?;
    for f in failures {
        w.write_record([f.model_id.as_str(), f.train_condition.as_str(), &f.reason])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Trains and evaluates one (spec, condition) cell.
pub fn run_cell<T: Scalar>(
    spec: &ModelSpec,
    condition: TrainCondition,
    config: &ExperimentConfig,
    data: &PreparedData<T>,
) -> Result<(Model<T>, crate::training::TrainHistory, Vec<EvalResult>)> {
    let spec = ModelSpec::new(spec.family, spec.width_factor, spec.depth).with_io(data.dims, data.labels.len());
    let (train_set, valid_set) = data
        .train
        .get(&condition)
        .ok_or_else(|| Error::Config(format!("condition {condition} was not prepared")))?;
    let root = SeedStream::new(config.seed);
    // Same initialization for a spec under every condition.
    let mut init_rng = root.child("init").child(&spec.id()).rng();
    let model = Model::<T>::build(&spec, &mut init_rng)?;
    let tc = TrainConfig {
        seed: root.child("train").child(&spec.id()).child(condition.as_str()).seed(),
        specaug: (condition == TrainCondition::Specaug).then(|| config.specaug.clone()),
        ..config.train.clone()
    };
    let out = train(model, train_set, valid_set, &tc)?;
    let results = data
        .tests
        .iter()
        .map(|t| {
            let acc = evaluate(&out.best, &t.data, t.subset.as_deref(), tc.frames)?;
            EvalResult::new(
                &spec,
                out.best.param_count,
                condition,
                config.feature_type.as_str(),
                &t.name,
                acc.correct,
                acc.n,
                config.seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out.best, out.history, results))
}

/// Runs every (spec, condition) cell of `config`, skipping cells whose rows
/// already exist in `output_dir/results.csv`.
///
/// Results are rewritten after each finished cell. Failed cells are
/// collected and written to `failures.csv` instead of stopping the grid.
pub fn run_grid<T: Scalar>(config: &ExperimentConfig, data: &PreparedData<T>) -> Result<GridOutcome> {
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results_path = out_dir.join(RESULTS_FILE);
    let existing = if results_path.exists() {
        load_results(&results_path)?
    } else {
        Vec::new()
    };
    let test_names: Vec<&str> = data.tests.iter().map(|t| t.name.as_str()).collect();
    let done: BTreeSet<(String, TrainCondition)> = {
        let have: BTreeSet<_> = existing.iter().map(|r| r.cell()).collect();
        config
            .models
            .iter()
            .flat_map(|s| config.conditions.iter().map(move |c| (s.id(), *c)))
            .filter(|(id, c)| test_names.iter().all(|t| have.contains(&(id.clone(), *c, t.to_string()))))
            .collect()
    };
    let cells: Vec<(ModelSpec, TrainCondition)> = config
        .models
        .iter()
        .flat_map(|s| config.conditions.iter().map(move |c| (*s, *c)))
        .filter(|(s, c)| !done.contains(&(s.id(), *c)))
        .collect();
    // Partial rows of unfinished cells are recomputed.
    let kept: Vec<EvalResult> = existing
        .into_iter()
        .filter(|r| done.contains(&(r.model_id.clone(), r.train_condition)))
        .collect();
    let state = Mutex::new((kept, Vec::<FailedCell>::new()));
    let trained = cells.len();

    let work = || {
        cells.par_iter().try_for_each(|(spec, cond)| -> Result<()> {
            log::info!("training {} on {cond}", spec.id());
            let cell = run_cell(spec, *cond, config, data).and_then(|(model, history, rows)| {
                let dir = out_dir.join("models").join(cond.as_str());
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let ckpt = dir.join(format!("{}.rlmd", spec.id()));
                save_model(&model, &ckpt)?;
                data.labels.save(&ckpt.with_extension("labels"))?;
                history.write_csv(&dir.join(format!("{}.history.csv", spec.id())))?;
                Ok(rows)
            });
            let mut guard = state.lock().expect("results lock");
            match cell {
                Ok(rows) => {
                    guard.0.extend(rows);
                    save_results(&guard.0, &results_path)?;
                }
                Err(e) => {
                    log::warn!("cell {} / {cond} failed: {e}", spec.id());
                    guard.1.push(FailedCell {
                        model_id: spec.id(),
                        train_condition: *cond,
                        reason: e.to_string(),
                    });
                }
            }
            Ok(())
        })
    };
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    }

    let (mut results, mut failures) = state.into_inner().expect("results lock");
    super::results::sort_results(&mut results)?;
    save_results(&results, &results_path)?;
    failures.sort_by(|a, b| (&a.model_id, a.train_condition).cmp(&(&b.model_id, b.train_condition)));
    let fail_path = out_dir.join(FAILURES_FILE);
    if failures.is_empty() {
        if fail_path.exists() {
            std::fs::remove_file(&fail_path).map_err(|e| Error::io(&fail_path, e))?;
        }
    } else {
        write_failures(&failures, &fail_path)?;
    }
    Ok(GridOutcome {
        results,
        failures,
        trained,
    })
}
