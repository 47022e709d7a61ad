use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use robustline::audio::{write_wav_as, CorpusManifest, WavEncoding};
use robustline::corruption::{build_parallel_noisy_sets, write_mix_records, NoiseBank, SnrRange};
use robustline::evaluation::{
    evaluate, load_results, prepare_data, run_cell, run_grid, synthetic_manifest, synthetic_noise_banks,
    synthetic_ood_manifest, write_results, CorpusConfig, EvalResult, ExperimentConfig, ExtraTestSet, ManifestCorpus,
    TrainCondition, FAILURES_FILE, RESULTS_FILE,
};
use robustline::features::{write_external_features, FeatureConfig, FeatureExtractor, FeatureType};
use robustline::metrics::{analyze, save_analysis, write_analysis, EpsilonPolicy};
use robustline::models::{load_model, save_model};
use robustline::report::{scatter_svg, series_from_results, SvgOptions};
use robustline::seed::SeedStream;
use robustline::training::LabelMap;
use robustline::Model32;

use crate::cli::{AnalyzeArgs, Command, ConfigArgs, CorruptArgs, EvaluateArgs, FeaturizeArgs, GridArgs, PlotArgs, TrainArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] robustline::Error),
    #[error("{0} grid cell(s) failed, see {1}")]
    CellsFailed(usize, PathBuf),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Synth(a) => synth(&a),
        Command::Corrupt(a) => corrupt(&a),
        Command::Featurize(a) => featurize(&a),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::Grid(a) => grid(&a),
        Command::Analyze(a) => analyze_cmd(&a),
        Command::Plot(a) => plot(&a),
    }
}

fn mkdir(p: &Path) -> CliResult {
    fs::create_dir_all(p).map_err(|e| robustline::Error::Io {
        path: p.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn write_text(p: &Path, text: &str) -> CliResult {
    fs::write(p, text).map_err(|e| robustline::Error::Io {
        path: p.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Config file (or defaults) with flag overrides applied.
fn resolve(a: &ConfigArgs, workers: Option<usize>) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    if let Some(f) = a.feature {
        cfg.feature_type = f;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn echo_config(cfg: &ExperimentConfig) -> CliResult {
    mkdir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join("config.toml"), &cfg.to_toml()?)
}

fn synth(a: &ConfigArgs) -> CliResult {
    let cfg = resolve(a, None)?;
    let CorpusConfig::Synthetic(s) = &cfg.corpus else {
        return Err(CliError::Usage("synth needs a synthetic corpus config".into()));
    };
    let out = &cfg.output_dir;
    let fs_hz = cfg.features.sample_rate;
    let manifest = synthetic_manifest(s, SeedStream::new(cfg.seed).child("splits").seed())?;
    let labels: Vec<String> = manifest.labels().into_iter().collect();
    let ood = synthetic_ood_manifest(s, &labels);

    let materialize = |m: &CorpusManifest, sub: &str| -> CliResult<CorpusManifest> {
        mkdir(&out.join(sub))?;
        let mut written = CorpusManifest::new(Vec::with_capacity(m.len()));
        written.base_dir = out.clone();
        for (i, e) in m.entries.iter().enumerate() {
            let clip = m.load_audio::<f64>(e, fs_hz)?;
            let rel = format!("{sub}/{i:05}.wav");
            write_wav_as(&clip, out.join(&rel), WavEncoding::Float32)?;
            let mut e = e.clone();
            e.path = rel;
            written.entries.push(e);
        }
        Ok(written)
    };
    materialize(&manifest, "audio")?.write(out.join("manifest.csv"))?;
    materialize(&ood, "ood")?.write(out.join("ood_manifest.csv"))?;

    let banks = synthetic_noise_banks(s, fs_hz)?;
    let mut dirs = Vec::new();
    for (kind, bank) in ["env", "imp", "ext"].into_iter().zip(&banks) {
        let dir = out.join("noise").join(kind);
        mkdir(&dir)?;
        for src in &bank.sources {
            write_wav_as(&src.clip, dir.join(format!("{}.wav", src.id)), WavEncoding::Float32)?;
        }
        dirs.push(dir);
    }

    let mut file_cfg = cfg.clone();
    file_cfg.corpus = CorpusConfig::Manifests(ManifestCorpus {
        manifest: out.join("manifest.csv"),
        env_noise_dir: Some(dirs[0].clone()),
        imp_noise_dir: Some(dirs[1].clone()),
        ext_noise_dir: Some(dirs[2].clone()),
        extra_tests: vec![ExtraTestSet {
            name: "speaker_ood".into(),
            manifest: out.join("ood_manifest.csv"),
            labels: Some(labels[..s.ood_classes].to_vec()),
        }],
    });
    file_cfg.output_dir = out.join("run");
    write_text(&out.join("experiment.toml"), &file_cfg.to_toml()?)?;
    echo_config(&cfg)?;
    println!(
        "wrote {} clips, {} OOD clips and {} noise files to {}",
        manifest.len(),
        ood.len(),
        banks.iter().map(NoiseBank::len).sum::<usize>(),
        out.display()
    );
    Ok(())
}

fn corrupt(a: &CorruptArgs) -> CliResult {
    let snr = SnrRange::new(a.snr_min, a.snr_max).map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = CorpusManifest::read(&a.manifest)?;
    let env = NoiseBank::<f64>::from_dir(&a.env_noise)?;
    let imp = NoiseBank::<f64>::from_dir(&a.imp_noise)?;
    let sets = build_parallel_noisy_sets(&manifest, &env, &imp, snr, a.seed, a.sample_rate, &a.out)?;
    sets.env.write(a.out.join("env.csv"))?;
    sets.imp.write(a.out.join("imp.csv"))?;
    sets.env_imp.write(a.out.join("env_imp.csv"))?;
    write_mix_records(&sets.records, a.out.join("mix_records.csv"))?;
    println!("corrupted {} utterances into {}", sets.records.len(), a.out.display());
    Ok(())
}

fn featurize(a: &FeaturizeArgs) -> CliResult {
    if a.feature == FeatureType::External {
        return Err(CliError::Usage("cannot extract external features".into()));
    }
    let fc = match &a.config {
        Some(p) => ExperimentConfig::load(p)?.features,
        None => FeatureConfig::default(),
    };
    let manifest = CorpusManifest::read(&a.manifest)?;
    let extractor = FeatureExtractor::<f64>::new(&fc)?;
    mkdir(&a.out.join("features"))?;
    let mut out = CorpusManifest::new(Vec::with_capacity(manifest.len()));
    for (i, e) in manifest.entries.iter().enumerate() {
        let clip = manifest.load_audio::<f64>(e, fc.sample_rate)?;
        let f = extractor.extract(&clip, a.feature)?;
        let rel = format!("features/{i:06}.rlft");
        write_external_features(&f.data, a.out.join(&rel))?;
        let mut e = e.clone();
        e.path = rel;
        out.entries.push(e);
    }
    out.write(a.out.join("manifest.csv"))?;
    println!("featurized {} entries ({}) into {}", out.len(), a.feature, a.out.display());
    Ok(())
}

fn checkpoint_dir(cfg: &ExperimentConfig, cond: TrainCondition) -> PathBuf {
    cfg.output_dir.join("models").join(cond.as_str())
}

fn train(a: &TrainArgs) -> CliResult {
    let mut cfg = resolve(&a.common, None)?;
    cfg.models = vec![a.model];
    cfg.conditions = vec![a.condition];
    echo_config(&cfg)?;
    let data = prepare_data::<f32>(&cfg)?;
    let (model, history, results) = run_cell(&a.model, a.condition, &cfg, &data)?;
    let dir = checkpoint_dir(&cfg, a.condition);
    mkdir(&dir)?;
    let ckpt = dir.join(format!("{}.rlmd", a.model.id()));
    save_model(&model, &ckpt)?;
    data.labels.save(&ckpt.with_extension("labels"))?;
    history.write_csv(&dir.join(format!("{}.history.csv", a.model.id())))?;
    let best = &history.epochs[history.best_epoch];
    println!(
        "{} on {}: best epoch {} (valid error {:.4}), checkpoint {}",
        a.model.id(),
        a.condition,
        best.epoch,
        best.valid_err,
        ckpt.display()
    );
    for r in &results {
        println!("  {:<16} accuracy {:.4}", r.test_set, r.accuracy);
    }
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> CliResult {
    let model: Model32 = load_model(&a.checkpoint)?;
    let labels_path = a.labels.clone().unwrap_or_else(|| a.checkpoint.with_extension("labels"));
    let labels = LabelMap::load(&labels_path)?;
    let mut cfg = resolve(&a.common, None)?;
    cfg.models = vec![model.spec];
    cfg.conditions = vec![TrainCondition::Clean];
    let data = prepare_data::<f32>(&cfg)?;
    if data.labels != labels {
        return Err(robustline::Error::InvalidArgument(format!(
            "label inventory of {} does not match the corpus",
            labels_path.display()
        ))
        .into());
    }
    let rows = data
        .tests
        .iter()
        .map(|t| {
            let acc = evaluate(&model, &t.data, t.subset.as_deref(), cfg.train.frames)?;
            EvalResult::new(
                &model.spec,
                model.param_count,
                a.condition,
                cfg.feature_type.as_str(),
                &t.name,
                acc.correct,
                acc.n,
                cfg.seed,
            )
        })
        .collect::<robustline::Result<Vec<_>>>()?;
    match &a.results {
        Some(p) => robustline::evaluation::save_results(&rows, p)?,
        None => write_results(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn grid(a: &GridArgs) -> CliResult {
    if a.workers == Some(0) {
        return Err(CliError::Usage("--workers must be positive".into()));
    }
    let cfg = resolve(&a.common, a.workers)?;
    echo_config(&cfg)?;
    let data = prepare_data::<f32>(&cfg)?;
    let outcome = run_grid(&cfg, &data)?;
    println!(
        "trained {} cell(s); {} result rows in {}",
        outcome.trained,
        outcome.results.len(),
        cfg.output_dir.join(RESULTS_FILE).display()
    );
    if !outcome.failures.is_empty() {
        return Err(CliError::CellsFailed(outcome.failures.len(), cfg.output_dir.join(FAILURES_FILE)));
    }
    Ok(())
}

fn analyze_cmd(a: &AnalyzeArgs) -> CliResult {
    if !(a.epsilon > 0.0) {
        return Err(CliError::Usage("--epsilon must be positive".into()));
    }
    let policy = if a.exclude {
        EpsilonPolicy::Exclude { epsilon: a.epsilon }
    } else {
        EpsilonPolicy::Clamp { epsilon: a.epsilon }
    };
    let results = load_results(&a.results)?;
    let rows: Vec<_> = analyze(&results, a.baseline, &a.id_set, policy)?
        .into_iter()
        .filter(|r| r.condition == a.other)
        .collect();
    if rows.is_empty() {
        return Err(robustline::Error::Empty(format!("no results for condition {}", a.other)).into());
    }
    match &a.out {
        Some(p) => save_analysis(&rows, p)?,
        None => {
            let mut out = std::io::stdout().lock();
            write_analysis(&rows, &mut out)?;
            let _ = out.flush();
        }
    }
    Ok(())
}

fn plot(a: &PlotArgs) -> CliResult {
    let results = load_results(&a.results)?;
    let conditions = if a.conditions.is_empty() {
        let mut c: Vec<TrainCondition> = results.iter().map(|r| r.train_condition).collect();
        c.sort();
        c.dedup();
        c
    } else {
        a.conditions.clone()
    };
    let series = series_from_results(&results, &conditions, &a.id_set, &a.test_set)?;
    let options = SvgOptions {
        title: a.title.clone(),
        x_label: format!("{} (ID) accuracy", a.id_set),
        y_label: format!("{} (noisy / OOD) accuracy", a.test_set),
        show_fit: !a.no_fit,
        ..SvgOptions::default()
    };
    let csv = scatter_svg(&series, &a.out, &options)?;
    println!("wrote {} and {}", a.out.display(), csv.display());
    Ok(())
}
