//! Prefix prediction, misclassification metrics and the cross-validated
//! learning pipeline with its two baselines.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    decision_times, positive_negative_distance, AnalysisConfig, DecisionTimes, DistanceCurve,
};
use crate::error::{Error, Result};
use crate::optim::derive_seed;
use crate::signals::{Label, LabeledDataset, SignalView};
use crate::stl::{robustness, StlFormula, WstlFormula};
use crate::tree::{learn_formula_set, LearnedFormula, TreeConfig};
use crate::weights::{
    learn_weight_matrix, uniform_weight_matrix, FitRecord, WeightConfig, WeightMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Decided {
        label: Label,
        score: f64,
    },
    /// No formula carries weight at this time.
    Inconclusive,
}

impl Prediction {
    pub fn label(&self) -> Option<Label> {
        match self {
            Prediction::Decided { label, .. } => Some(*label),
            Prediction::Inconclusive => None,
        }
    }
}

/// Weighted-sum predictor over a formula set with time-variant weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    wstl: WstlFormula,
    horizons: Vec<usize>,
    dim: usize,
}

impl Predictor {
    pub fn new(formulas: Vec<StlFormula>, weights: WeightMatrix, dim: usize) -> Result<Predictor> {
        if let Some(f) = formulas.iter().find(|f| f.max_component() >= dim) {
            return Err(Error::ComponentOutOfRange {
                component: f.max_component() + 1,
                dimension: dim,
            });
        }
        if weights.cols() == 0 {
            return Err(Error::Artifact("weight matrix has no columns".into()));
        }
        let horizons = formulas.iter().map(StlFormula::horizon).collect();
        Ok(Predictor {
            wstl: WstlFormula::new(formulas, weights)?,
            horizons,
            dim,
        })
    }

    pub fn formulas(&self) -> &[StlFormula] {
        &self.wstl.conjuncts
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.wstl.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signal horizon `T`.
    pub fn horizon(&self) -> usize {
        self.wstl.weights.cols() - 1
    }

    /// Same formulas with different weights.
    pub fn with_weights(&self, weights: WeightMatrix) -> Result<Predictor> {
        Predictor::new(self.wstl.conjuncts.clone(), weights, self.dim)
    }

    fn score(&self, t: usize, rho: impl Fn(usize) -> Result<f64>) -> Result<Prediction> {
        let mut total = 0.0;
        let mut active = false;
        for (k, &h) in self.horizons.iter().enumerate() {
            let w = self.wstl.weights.get(k, t);
            if h <= t && w > 0.0 {
                active = true;
                total += w * rho(k)?;
            }
        }
        if !active {
            return Ok(Prediction::Inconclusive);
        }
        let label = if total >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        };
        Ok(Prediction::Decided {
            label,
            score: total,
        })
    }

    /// Label of the prefix `s[0:t]` from the sign of the weighted robustness sum.
    ///
    /// A zero sum predicts the positive class.
    pub fn predict(&self, signal: &SignalView<'_>, t: usize) -> Result<Prediction> {
        if t > self.horizon() {
            return Err(Error::TimeOutOfRange {
                t,
                max: self.horizon(),
            });
        }
        if signal.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: signal.dim(),
            });
        }
        let prefix = signal.signal().prefix(t.min(signal.last()))?;
        if prefix.last() < t {
            return Err(Error::HorizonExceedsPrefix {
                needed: t,
                last: prefix.last(),
            });
        }
        self.score(t, |k| robustness(&prefix, &self.wstl.conjuncts[k], 0))
    }
}

fn misclassified(prediction: Prediction, truth: Label) -> f64 {
    match prediction {
        Prediction::Decided { label, .. } => f64::from(u8::from(label != truth)),
        // a fair coin is wrong half the time
        Prediction::Inconclusive => 0.5,
    }
}

/// Fraction of prefixes `s[0:t]` whose predicted label is wrong.
pub fn tmcr(predictor: &Predictor, dataset: &LabeledDataset, t: usize) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut wrong = 0.0;
    for (signal, label) in dataset.iter() {
        wrong += misclassified(predictor.predict(&signal.view(), t)?, label);
    }
    Ok(wrong / dataset.len() as f64)
}

/// TMCR for every `t = 0..=T`.
///
/// Robustness of each formula is computed once per signal; it is the same on
/// every prefix that covers the formula's horizon.
pub fn imcr(predictor: &Predictor, dataset: &LabeledDataset) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.horizon() != predictor.horizon() {
        return Err(Error::DimensionMismatch {
            expected: predictor.horizon() + 1,
            found: dataset.horizon() + 1,
        });
    }
    let per_signal: Vec<Vec<f64>> = dataset
        .signals()
        .par_iter()
        .zip(dataset.labels().par_iter())
        .map(|(signal, &label)| {
            let view = signal.view();
            let rhos = predictor
                .formulas()
                .iter()
                .map(|f| robustness(&view, f, 0))
                .collect::<Result<Vec<f64>>>()?;
            (0..=predictor.horizon())
                .map(|t| Ok(misclassified(predictor.score(t, |k| Ok(rhos[k]))?, label)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = dataset.len() as f64;
    Ok((0..=predictor.horizon())
        .map(|t| per_signal.iter().map(|row| row[t]).sum::<f64>() / n)
        .collect())
}

/// Per-fold IMCR curves and their pointwise mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ImcrReport {
    pub per_fold: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl ImcrReport {
    pub fn from_folds(per_fold: Vec<Vec<f64>>) -> ImcrReport {
        let len = per_fold.first().map_or(0, Vec::len);
        let mean = (0..len)
            .map(|t| per_fold.iter().map(|f| f[t]).sum::<f64>() / per_fold.len() as f64)
            .collect();
        ImcrReport { per_fold, mean }
    }

    /// Average of the mean curve over all time steps.
    pub fn mean_over_time(&self) -> f64 {
        self.mean.iter().sum::<f64>() / self.mean.len().max(1) as f64
    }

    /// CSV with header `t,tmcr_fold1,...,tmcr_mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for f in 1..=self.per_fold.len() {
            let _ = write!(out, ",tmcr_fold{f}");
        }
        out.push_str(",tmcr_mean\n");
        for t in 0..self.mean.len() {
            let _ = write!(out, "{t}");
            for fold in &self.per_fold {
                let _ = write!(out, ",{}", fold[t]);
            }
            let _ = writeln!(out, ",{}", self.mean[t]);
        }
        out
    }
}

/// Held-out index sets of a stratified `k`-fold split.
///
/// Each class is shuffled with `seed` and dealt round-robin; the negatives
/// continue where the positives stopped so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config("at least 2 folds are required".into()));
    }
    if labels.len() < folds {
        return Err(Error::Config(format!(
            "{} signals cannot fill {folds} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for class in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            out[next % folds].push(i);
            next += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Decision times from signal analysis, learned weights.
    #[default]
    Framework,
    /// A classifier at every time step, learned weights.
    AllTimes,
    /// Decision times from signal analysis, uniform weights.
    UniformWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub folds: usize,
    pub seed: u64,
    pub analysis: AnalysisConfig,
    pub tree: TreeConfig,
    pub weights: WeightConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            folds: 3,
            seed: 0,
            analysis: AnalysisConfig::default(),
            tree: TreeConfig::default(),
            weights: WeightConfig::default(),
        }
    }
}

/// Everything learned from one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub strategy: Strategy,
    pub curve: Option<DistanceCurve>,
    pub decision_times: DecisionTimes,
    pub formulas: Vec<LearnedFormula>,
    pub weight_fits: Vec<FitRecord>,
    pub predictor: Predictor,
}

/// Runs signal analysis, formula learning and weight learning on `train`.
pub fn train(
    train: &LabeledDataset,
    strategy: Strategy,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<TrainedModel> {
    train.require_both_classes()?;
    let horizon = train.horizon();
    let (curve, times) = match strategy {
        Strategy::AllTimes => (None, DecisionTimes::all(horizon)),
        Strategy::Framework | Strategy::UniformWeights => {
            let curve = positive_negative_distance(train)?;
            let times = decision_times(&curve, horizon, &cfg.analysis)?;
            (Some(curve), times)
        }
    };
    let learned = learn_formula_set(train, &times, &cfg.tree, seed)?;
    let formulas: Vec<StlFormula> = learned.iter().map(|l| l.formula.clone()).collect();
    let (weights, weight_fits) = match strategy {
        Strategy::UniformWeights => (uniform_weight_matrix(&formulas, horizon), Vec::new()),
        Strategy::Framework | Strategy::AllTimes => {
            let w = learn_weight_matrix(train, &formulas, &cfg.weights)?;
            (w.weights, w.fits)
        }
    };
    Ok(TrainedModel {
        strategy,
        curve,
        decision_times: times,
        predictor: Predictor::new(formulas, weights, train.dim())?,
        formulas: learned,
        weight_fits,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub heldout: Vec<usize>,
    pub model: TrainedModel,
    pub imcr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<FoldOutcome>,
    pub report: ImcrReport,
}

/// Seed used for the trees of fold `fold`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, 1000 + fold as u64)
}

/// Indices not in `heldout`, in ascending order.
pub fn training_indices(len: usize, heldout: &[usize]) -> Vec<usize> {
    (0..len)
        .filter(|i| heldout.binary_search(i).is_err())
        .collect()
}

/// Stratified cross-validation of one strategy.
pub fn cross_validate(
    dataset: &LabeledDataset,
    strategy: Strategy,
    cfg: &PipelineConfig,
) -> Result<CvOutcome> {
    let folds = stratified_folds(dataset.labels(), cfg.folds, cfg.seed)?;
    let outcomes = folds
        .into_par_iter()
        .enumerate()
        .map(|(fold, heldout)| {
            let train_set = dataset.subset(&training_indices(dataset.len(), &heldout))?;
            let test_set = dataset.subset(&heldout)?;
            let model = train(&train_set, strategy, cfg, fold_seed(cfg.seed, fold))?;
            let imcr = imcr(&model.predictor, &test_set)?;
            log::info!(
                "fold {} ({strategy:?}): {} decision times, mean held-out TMCR {:.4}",
                fold + 1,
                model.decision_times.len(),
                imcr.iter().sum::<f64>() / imcr.len() as f64
            );
            Ok(FoldOutcome {
                fold,
                heldout,
                model,
                imcr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = ImcrReport::from_folds(outcomes.iter().map(|f| f.imcr.clone()).collect());
    Ok(CvOutcome {
        folds: outcomes,
        report,
    })
}

pub fn run_pipeline(dataset: &LabeledDataset, cfg: &PipelineConfig) -> Result<CvOutcome> {
    cross_validate(dataset, Strategy::Framework, cfg)
}

pub fn baseline_all_times(dataset: &LabeledDataset, cfg: &PipelineConfig) -> Result<CvOutcome> {
    cross_validate(dataset, Strategy::AllTimes, cfg)
}

pub fn baseline_uniform_weights(
    dataset: &LabeledDataset,
    cfg: &PipelineConfig,
) -> Result<CvOutcome> {
    cross_validate(dataset, Strategy::UniformWeights, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Signal;
    use crate::stl::parse;

    fn dataset() -> LabeledDataset {
        // positives rise above 1 from t = 1, negatives stay below
        let mut signals = Vec::new();
        let mut labels = Vec::new();
        for i in 0..6 {
            let pos = i % 2 == 0;
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|t| {
                    let v = if t == 0 {
                        0.0
                    } else if pos {
                        2.0
                    } else {
                        -1.0
                    };
                    vec![v + 0.01 * i as f64]
                })
                .collect();
            signals.push(Signal::from_rows(format!("s{i}"), &rows).unwrap());
            labels.push(if pos {
                Label::Positive
            } else {
                Label::Negative
            });
        }
        LabeledDataset::new(signals, labels).unwrap()
    }

    fn predictor(text: &str, weights: Vec<Vec<f64>>) -> Predictor {
        Predictor::new(
            vec![parse(text).unwrap()],
            WeightMatrix::from_rows(weights).unwrap(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_are_inconclusive() {
        let p = predictor("F[1,1](x1 > 1)", vec![vec![0.0, 0.0, 0.0]]);
        let d = dataset();
        assert_eq!(
            p.predict(&d.signals()[0].view(), 2).unwrap(),
            Prediction::Inconclusive
        );
        assert_eq!(tmcr(&p, &d, 2).unwrap(), 0.5);
    }

    #[test]
    fn sign_rules() {
        let s = Signal::from_rows("s", &[vec![0.5]]).unwrap();
        let p = predictor("x1 > 1", vec![vec![1.0]]);
        assert_eq!(
            p.predict(&s.view(), 0).unwrap().label(),
            Some(Label::Negative)
        );
        let zero = predictor("x1 >= 0.5", vec![vec![1.0]]);
        assert_eq!(
            zero.predict(&s.view(), 0).unwrap(),
            Prediction::Decided {
                label: Label::Positive,
                score: 0.0
            }
        );
    }

    #[test]
    fn perfect_inverted_and_composed_metrics() {
        let d = dataset();
        let good = predictor("F[1,1](x1 > 0.5)", vec![vec![0.0, 1.0, 1.0]]);
        assert_eq!(tmcr(&good, &d, 1).unwrap(), 0.0);
        let bad = predictor("F[1,1](x1 < 0.5)", vec![vec![0.0, 1.0, 1.0]]);
        assert_eq!(tmcr(&bad, &d, 1).unwrap(), 1.0);
        assert_eq!(imcr(&good, &d).unwrap(), vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn imcr_matches_pointwise_tmcr() {
        let d = dataset();
        let p = Predictor::new(
            vec![
                parse("F[0,1](x1 > 0.5)").unwrap(),
                parse("x1 < 0.005").unwrap(),
            ],
            WeightMatrix::from_rows(vec![vec![0.0, 0.3, 2.0], vec![1.0, 0.2, 0.1]]).unwrap(),
            1,
        )
        .unwrap();
        let curve = imcr(&p, &d).unwrap();
        for (t, v) in curve.iter().enumerate() {
            assert_eq!(*v, tmcr(&p, &d, t).unwrap());
        }
    }

    #[test]
    fn predictor_rejects_bad_inputs() {
        let p = predictor("x1 > 0", vec![vec![1.0, 1.0]]);
        let wide = Signal::from_rows("w", &[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            p.predict(&wide.view(), 1),
            Err(Error::DimensionMismatch { .. })
        ));
        let short = Signal::from_rows("s", &[vec![0.0]]).unwrap();
        assert!(p.predict(&short.view(), 1).is_err());
        assert!(matches!(
            p.predict(&short.view(), 5),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn folds_partition_the_dataset() {
        let labels: Vec<Label> = (0..20)
            .map(|i| {
                if i % 3 == 0 {
                    Label::Positive
                } else {
                    Label::Negative
                }
            })
            .collect();
        let folds = stratified_folds(&labels, 3, 7).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        for f in &folds {
            let pos = f.iter().filter(|&&i| labels[i] == Label::Positive).count();
            assert!((2..=3).contains(&pos));
        }
        assert_eq!(folds, stratified_folds(&labels, 3, 7).unwrap());
    }

    #[test]
    fn report_csv_layout() {
        let r = ImcrReport::from_folds(vec![vec![0.5, 0.25], vec![0.5, 0.75]]);
        assert_eq!(
            r.to_csv(),
            "t,tmcr_fold1,tmcr_fold2,tmcr_mean\n0,0.5,0.5,0.5\n1,0.25,0.75,0.5\n"
        );
    }
}
