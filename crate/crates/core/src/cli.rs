//! Command-line surface: `generate`, `analyze`, `train`, `evaluate` and
//! `predict`.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 for data
//! or artifact errors, 4 when a prediction is inconclusive.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{decision_times, positive_negative_distance, AnalysisConfig, DecisionTimes};
use crate::artifact::{load_predictor, save_predictor, PredictorArtifact, PredictorMeta};
use crate::config::{GeneratorConfig, RunConfig};
use crate::datagen::{DrivingGenConfig, NavalGenConfig};
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, imcr, training_indices, CvOutcome, ImcrReport, Prediction, Strategy,
};
use crate::signals::{load_dataset, load_signals, save_dataset, LabeledDataset, Signal};
use crate::weights::uniform_weight_matrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

pub const RUN_FILE: &str = "run.json";
pub const LOG_FILE: &str = "train.log";

#[derive(Debug, Parser)]
#[command(
    name = "prefix-stl",
    version,
    about = "Learn weighted STL classifiers and predict labels of signal prefixes"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled dataset and its metadata.
    Generate(GenerateArgs),
    /// Emit the positive-negative distance curve and the decision times.
    Analyze(AnalyzeArgs),
    /// Cross-validate and store one predictor per fold.
    Train(TrainArgs),
    /// Held-out IMCR of stored predictors, optionally against a baseline.
    Evaluate(EvaluateArgs),
    /// Predict labels of prefix signals with a stored predictor.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    Naval,
    Driving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Baseline {
    UniformWeights,
    AllTimes,
}

impl Baseline {
    fn name(self) -> &'static str {
        match self {
            Baseline::UniformWeights => "uniform-weights",
            Baseline::AllTimes => "all-times",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<GeneratorKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV to write; metadata goes next to it with a `.json` extension.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV (default: the configured dataset or generator).
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    /// Output directory (default: the configured `out`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub min_gap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory written by `train`.
    #[arg(short, long)]
    pub model: PathBuf,
    /// Dataset CSV (default: the dataset recorded at training time).
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// IMCR CSV to write (default: inside the model directory).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(short, long)]
    pub model: PathBuf,
    /// Fold whose predictor is used, starting at 1.
    #[arg(long, default_value_t = 1)]
    pub fold: usize,
    /// Prefix CSV: `signal_id,time,x1..xn` with an optional `label` column.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Prediction time (default: last sample of each prefix).
    #[arg(short, long)]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Inconclusive,
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Inconclusive) => EXIT_INCONCLUSIVE,
        Err(e) if e.is_data_error() => EXIT_DATA,
        Err(_) => EXIT_CONFIG,
    }
}

pub fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(e.to_string()))?;
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    init_threads(cli.threads)?;
    match &cli.command {
        Command::Generate(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            match (a.kind, &cfg.datagen) {
                (Some(GeneratorKind::Naval), GeneratorConfig::Driving(_)) => {
                    cfg.datagen = GeneratorConfig::Naval(NavalGenConfig::default())
                }
                (Some(GeneratorKind::Driving), GeneratorConfig::Naval(_)) => {
                    cfg.datagen = GeneratorConfig::Driving(DrivingGenConfig::default())
                }
                _ => {}
            }
            if let Some(seed) = a.seed {
                cfg.datagen.set_seed(seed);
            }
            let data = cmd_generate(&cfg.datagen, &a.output)?;
            println!(
                "wrote {} signals (T = {}, n = {}) to {}",
                data.len(),
                data.horizon(),
                data.dim(),
                a.output.display()
            );
        }
        Command::Analyze(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if let Some(g) = a.min_gap {
                cfg.analysis.min_gap = g;
            }
            cfg.validate()?;
            let data = match &a.data {
                Some(p) => load_dataset(p)?,
                None => cfg.dataset()?,
            };
            let out = a.out.clone().unwrap_or_else(|| cfg.out.clone());
            let times = cmd_analyze(&data, &cfg.analysis, &out)?;
            println!("{} decision times: {:?}", times.len(), times.as_slice());
        }
        Command::Train(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(f) = a.folds {
                cfg.folds = f;
            }
            if let Some(d) = a.max_depth {
                cfg.tree.max_depth = d;
            }
            if let Some(d) = &a.data {
                cfg.dataset = Some(d.clone());
            }
            if let Some(o) = &a.out {
                cfg.out = o.clone();
            }
            cfg.validate()?;
            let data = cfg.dataset()?;
            let out = cfg.out.clone();
            let cv = cmd_train(&data, &cfg, &out)?;
            for f in &cv.folds {
                println!(
                    "fold {}: {} formulas, decision times {:?}",
                    f.fold + 1,
                    f.model.formulas.len(),
                    f.model.decision_times.as_slice()
                );
            }
            println!("artifacts written to {}", out.display());
        }
        Command::Evaluate(a) => {
            let data = match &a.data {
                Some(p) => load_dataset(p)?,
                None => load_run_config(&a.model)?.dataset()?,
            };
            let report = cmd_evaluate(&a.model, &data, a.baseline)?;
            let name = a
                .baseline
                .map_or("imcr.csv".to_string(), |b| format!("imcr-{}.csv", b.name()));
            let output = a.output.clone().unwrap_or_else(|| a.model.join(name));
            write(&output, &report.to_csv())?;
            println!(
                "TMCR at T = {}, mean IMCR = {} ({})",
                report.mean.last().copied().unwrap_or(f64::NAN),
                report.mean_over_time(),
                output.display()
            );
        }
        Command::Predict(a) => {
            if a.fold == 0 {
                return Err(Error::Usage("folds are numbered from 1".into()));
            }
            let artifact = load_predictor(fold_dir(&a.model, a.fold - 1))?;
            let signals = load_signals(&a.input)
                .map_err(|e| Error::Usage(format!("{}: {e}", a.input.display())))?;
            let rows = cmd_predict(&artifact, &signals, a.t)?;
            let mut inconclusive = false;
            println!("signal_id,t,prediction,score");
            for (id, t, p) in rows {
                match p {
                    Prediction::Decided { label, score } => {
                        println!("{id},{t},{},{score}", label.sign())
                    }
                    Prediction::Inconclusive => {
                        inconclusive = true;
                        println!("{id},{t},inconclusive,");
                    }
                }
            }
            if inconclusive {
                return Ok(Outcome::Inconclusive);
            }
        }
    }
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct DatasetMeta<'a> {
    signals: usize,
    horizon: usize,
    dim: usize,
    positive_class: &'a str,
    negative_class: &'a str,
    positives: usize,
    negatives: usize,
    generator: &'a GeneratorConfig,
}

/// Writes the generated dataset to `output` and its metadata next to it.
pub fn cmd_generate(generator: &GeneratorConfig, output: &Path) -> Result<LabeledDataset> {
    let data = generator.generate()?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_dataset(&data, output)?;
    let (positive_class, negative_class) = generator.class_names();
    let meta = DatasetMeta {
        signals: data.len(),
        horizon: data.horizon(),
        dim: data.dim(),
        positive_class,
        negative_class,
        positives: data.count(crate::Label::Positive),
        negatives: data.count(crate::Label::Negative),
        generator,
    };
    write(
        &output.with_extension("json"),
        &(serde_json::to_string_pretty(&meta)? + "\n"),
    )?;
    Ok(data)
}

/// Writes `curve.csv` (`t,d2pn`) and `decision_times.csv` (`k,t_k`) to `out`.
pub fn cmd_analyze(
    data: &LabeledDataset,
    cfg: &AnalysisConfig,
    out: &Path,
) -> Result<DecisionTimes> {
    let curve = positive_negative_distance(data)?;
    let times = decision_times(&curve, data.horizon(), cfg)?;
    let mut c = String::from("t,d2pn\n");
    for (t, v) in curve.values.iter().enumerate() {
        let _ = writeln!(c, "{t},{v}");
    }
    let mut d = String::from("k,t_k\n");
    for (k, t) in times.iter().enumerate() {
        let _ = writeln!(d, "{},{t}", k + 1);
    }
    write(&out.join("curve.csv"), &c)?;
    write(&out.join("decision_times.csv"), &d)?;
    Ok(times)
}

pub fn fold_dir(out: &Path, fold: usize) -> PathBuf {
    out.join(format!("fold{}", fold + 1))
}

fn load_run_config(model: &Path) -> Result<RunConfig> {
    let path = model.join(RUN_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn training_log(cv: &CvOutcome, data: &LabeledDataset) -> String {
    let mut log = String::new();
    for f in &cv.folds {
        let m = &f.model;
        let _ = writeln!(
            log,
            "fold {}: {} training signals, {} held out",
            f.fold + 1,
            data.len() - f.heldout.len(),
            f.heldout.len()
        );
        let _ = writeln!(log, "  decision times: {:?}", m.decision_times.as_slice());
        for (k, lf) in m.formulas.iter().enumerate() {
            let _ = writeln!(
                log,
                "  formula {} at t={} horizon={} node gains {:?}",
                k + 1,
                lf.decision_time,
                lf.formula.horizon(),
                lf.tree.root.gains()
            );
            let _ = writeln!(log, "    {}", lf.formula);
        }
        for r in &m.weight_fits {
            let _ = writeln!(
                log,
                "  weights at t={} over formulas {:?}: loss {} -> {}",
                r.time,
                r.formula_ids.iter().map(|k| k + 1).collect::<Vec<_>>(),
                r.fit.initial_loss,
                r.fit.final_loss
            );
        }
    }
    log
}

/// Cross-validates the framework and writes one artifact per fold, the run
/// configuration and a training log under `out`.
pub fn cmd_train(data: &LabeledDataset, cfg: &RunConfig, out: &Path) -> Result<CvOutcome> {
    cfg.validate()?;
    let pipeline = cfg.pipeline();
    let cv = cross_validate(data, Strategy::Framework, &pipeline)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(
        &out.join(RUN_FILE),
        &(serde_json::to_string_pretty(cfg)? + "\n"),
    )?;
    for f in &cv.folds {
        let meta = PredictorMeta::describe(
            &f.model,
            f.fold + 1,
            crate::eval::fold_seed(pipeline.seed, f.fold),
            f.heldout.clone(),
            f.heldout
                .iter()
                .map(|&i| data.signals()[i].id().to_string())
                .collect(),
        );
        save_predictor(
            fold_dir(out, f.fold),
            &PredictorArtifact {
                meta,
                predictor: f.model.predictor.clone(),
            },
        )?;
    }
    write(&out.join(LOG_FILE), &training_log(&cv, data))?;
    Ok(cv)
}

fn load_folds(model: &Path) -> Result<Vec<PredictorArtifact>> {
    let mut folds = Vec::new();
    while fold_dir(model, folds.len()).is_dir() {
        folds.push(load_predictor(fold_dir(model, folds.len()))?);
    }
    if folds.is_empty() {
        return Err(Error::Artifact(format!(
            "no fold directories in {}",
            model.display()
        )));
    }
    Ok(folds)
}

fn check_heldout(meta: &PredictorMeta, data: &LabeledDataset) -> Result<()> {
    if meta.dim != data.dim() || meta.horizon != data.horizon() {
        return Err(Error::Artifact(format!(
            "predictor expects n = {}, T = {}; dataset has n = {}, T = {}",
            meta.dim,
            meta.horizon,
            data.dim(),
            data.horizon()
        )));
    }
    for (&i, id) in meta.heldout.iter().zip(&meta.heldout_ids) {
        if data.signals().get(i).map(Signal::id) != Some(id.as_str()) {
            return Err(Error::Artifact(format!(
                "held-out signal `{id}` is not row {i} of the dataset"
            )));
        }
    }
    Ok(())
}

/// Held-out IMCR of every stored fold; a baseline swaps the weights or
/// retrains with classifiers at every time step.
pub fn cmd_evaluate(
    model: &Path,
    data: &LabeledDataset,
    baseline: Option<Baseline>,
) -> Result<ImcrReport> {
    let folds = load_folds(model)?;
    let pipeline = match baseline {
        Some(Baseline::AllTimes) => Some(load_run_config(model)?.pipeline()),
        _ => None,
    };
    let curves = folds
        .par_iter()
        .map(|a| {
            check_heldout(&a.meta, data)?;
            let test = data.subset(&a.meta.heldout)?;
            let predictor = match baseline {
                None => a.predictor.clone(),
                Some(Baseline::UniformWeights) => a.predictor.with_weights(
                    uniform_weight_matrix(a.predictor.formulas(), a.meta.horizon),
                )?,
                Some(Baseline::AllTimes) => {
                    let cfg = pipeline.as_ref().expect("loaded above");
                    let train = data.subset(&training_indices(data.len(), &a.meta.heldout))?;
                    crate::eval::train(&train, Strategy::AllTimes, cfg, a.meta.seed)?.predictor
                }
            };
            imcr(&predictor, &test)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImcrReport::from_folds(curves))
}

/// Predictions at time `t`, or at the last sample of each prefix.
pub fn cmd_predict(
    artifact: &PredictorArtifact,
    signals: &[(Signal, Option<crate::Label>)],
    t: Option<usize>,
) -> Result<Vec<(String, usize, Prediction)>> {
    let p = &artifact.predictor;
    signals
        .iter()
        .map(|(s, _)| {
            if s.dim() != p.dim() {
                return Err(Error::Usage(format!(
                    "signal `{}` has {} components, the predictor expects {}",
                    s.id(),
                    s.dim(),
                    p.dim()
                )));
            }
            let t = t.unwrap_or(s.horizon());
            if t > s.horizon() || t > p.horizon() {
                return Err(Error::Usage(format!(
                    "t = {t} needs samples the prefix `{}` (last time {}) or the predictor (T = {}) lacks",
                    s.id(),
                    s.horizon(),
                    p.horizon()
                )));
            }
            Ok((s.id().to_string(), t, p.predict(&s.view(), t)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        assert_eq!(exit_code(&Ok(Outcome::Done)), 0);
        assert_eq!(exit_code(&Ok(Outcome::Inconclusive)), 4);
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::Usage("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::EmptyDataset)), 3);
    }

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "prefix-stl",
            "--threads",
            "2",
            "evaluate",
            "--model",
            "out",
            "--baseline",
            "uniform-weights",
        ])
        .unwrap();
        assert_eq!(cli.threads, Some(2));
        match cli.command {
            Command::Evaluate(a) => assert_eq!(a.baseline, Some(Baseline::UniformWeights)),
            other => panic!("parsed {other:?}"),
        }
        assert!(Cli::try_parse_from(["prefix-stl", "train", "--folds", "x"]).is_err());
    }
}
