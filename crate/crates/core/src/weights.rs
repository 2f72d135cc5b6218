//! Time-variant formula weights.
//!
//! At every time `t` the formulas split into those already decidable on a
//! prefix of length `t + 1` and the rest. Whenever the decidable set grows, a
//! robustness matrix is extended with the new formulas only and a fresh weight
//! vector is fit; otherwise the previous weights carry over.
//!
//! The weight model is a single linear layer without bias over robustness
//! features, weights kept non-negative by a softplus reparameterization and
//! trained with full-batch gradient descent on the logistic loss
//! `mean_i log(1 + exp(-y_i * sum_k w_k r_ik))`. Each feature column is scaled
//! by its root mean square before training; the learned weights are divided by
//! the same scale so they apply to raw robustness values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Label, LabeledDataset, PrefixDataset};
use crate::stl::{robustness, StlFormula};

/// `K x (T + 1)` non-negative weights, column `t` is `w(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> WeightMatrix {
        WeightMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<WeightMatrix> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in &rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            if r.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Artifact(
                    "weights must be finite and non-negative".into(),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(WeightMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize) -> f64 {
        self.data[k * self.cols + t]
    }

    pub fn set(&mut self, k: usize, t: usize, w: f64) {
        self.data[k * self.cols + t] = w;
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.rows).map(|k| self.get(k, t)).collect()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    fn copy_column(&mut self, from: usize, to: usize) {
        for k in 0..self.rows {
            let w = self.get(k, from);
            self.set(k, to, w);
        }
    }
}

/// Indices into `F` of the formulas decidable at `t` (`le`) and the rest.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormulaPartition {
    pub le: Vec<usize>,
    pub gt: Vec<usize>,
}

pub fn partition_formulas(formulas: &[StlFormula], t: usize) -> FormulaPartition {
    let (le, gt) = (0..formulas.len()).partition(|&k| formulas[k].horizon() <= t);
    FormulaPartition { le, gt }
}

/// Robustness of every signal against a subset of formulas; one column per
/// formula, identified by its index in `F`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RobustnessMatrix {
    pub formula_ids: Vec<usize>,
    pub columns: Vec<Vec<f64>>,
}

impl RobustnessMatrix {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_of(&self, formula_id: usize) -> Option<&[f64]> {
        self.formula_ids
            .iter()
            .position(|&k| k == formula_id)
            .map(|c| self.columns[c].as_slice())
    }
}

/// Result of extending a robustness matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessUpdate {
    pub matrix: RobustnessMatrix,
    /// Robustness evaluations performed; `N` per new column.
    pub evaluations: usize,
}

/// Robustness matrix for `le` on `data`, copying columns already present in
/// `previous` and evaluating only the formulas that are new.
///
/// Reused columns stay valid because the robustness of a formula on a prefix
/// no longer changes once the prefix covers its horizon.
pub fn compute_robustness_incremental(
    formulas: &[StlFormula],
    le: &[usize],
    data: &PrefixDataset<'_>,
    previous: &RobustnessMatrix,
) -> Result<RobustnessUpdate> {
    if let Some(stale) = previous.formula_ids.iter().find(|k| !le.contains(k)) {
        return Err(Error::Config(format!(
            "previous robustness matrix holds formula {stale} which is not decidable"
        )));
    }
    let mut evaluations = 0;
    let mut columns = Vec::with_capacity(le.len());
    for &k in le {
        match previous.column_of(k) {
            Some(col) => columns.push(col.to_vec()),
            None => {
                let col = (0..data.len())
                    .map(|i| robustness(&data.view(i), &formulas[k], 0))
                    .collect::<Result<Vec<f64>>>()?;
                evaluations += col.len();
                columns.push(col);
            }
        }
    }
    Ok(RobustnessUpdate {
        matrix: RobustnessMatrix {
            formula_ids: le.to_vec(),
            columns,
        },
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Kept for configuration stability; full-batch descent draws no random numbers.
    pub seed: u64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            epochs: 500,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[inline]
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

#[inline]
pub fn softplus_inverse(w: f64) -> f64 {
    w + (-(-w).exp_m1()).ln()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss over scaled robustness features as a function of the
/// unconstrained parameters `u` (weights are `softplus(u)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateLoss {
    /// Feature columns, one per formula.
    pub features: Vec<Vec<f64>>,
    /// `+1` / `-1` per sample.
    pub targets: Vec<f64>,
}

impl SurrogateLoss {
    fn margins(&self, u: &[f64]) -> Vec<f64> {
        let n = self.targets.len();
        let mut scores = vec![0.0; n];
        for (col, &uk) in self.features.iter().zip(u) {
            let w = softplus(uk);
            for (s, &z) in scores.iter_mut().zip(col) {
                *s += w * z;
            }
        }
        scores
            .iter()
            .zip(&self.targets)
            .map(|(s, y)| y * s)
            .collect()
    }

    pub fn loss(&self, u: &[f64]) -> f64 {
        let m = self.margins(u);
        m.iter().map(|&m| softplus(-m)).sum::<f64>() / m.len() as f64
    }

    /// Analytic `dL/du`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let m = self.margins(u);
        let n = m.len() as f64;
        // dL/dscore_i = -y_i * sigmoid(-m_i) / N
        let dscore: Vec<f64> = m
            .iter()
            .zip(&self.targets)
            .map(|(&m, &y)| -y * sigmoid(-m) / n)
            .collect();
        self.features
            .iter()
            .zip(u)
            .map(|(col, &uk)| {
                let dw: f64 = col.iter().zip(&dscore).map(|(z, d)| z * d).sum();
                dw * sigmoid(uk)
            })
            .collect()
    }
}

/// Outcome of one weight fit.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    /// Non-negative weights on the raw robustness scale, one per column.
    pub weights: Vec<f64>,
    /// Root-mean-square scale of each column (1 for all-zero columns).
    pub scales: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Fits non-negative weights for the columns of `r` against `labels`.
///
/// Returns the parameters with the lowest loss seen, so `final_loss` never
/// exceeds `initial_loss`.
pub fn learn_weights(
    r: &RobustnessMatrix,
    labels: &[Label],
    cfg: &WeightConfig,
) -> Result<WeightFit> {
    if r.cols() == 0 {
        return Err(Error::EmptyDataset);
    }
    if r.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: r.rows(),
            found: labels.len(),
        });
    }
    let scales: Vec<f64> = r
        .columns
        .iter()
        .map(|col| {
            let rms = (col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64).sqrt();
            if rms > 0.0 && rms.is_finite() {
                rms
            } else {
                1.0
            }
        })
        .collect();
    let problem = SurrogateLoss {
        features: r
            .columns
            .iter()
            .zip(&scales)
            .map(|(col, s)| col.iter().map(|v| v / s).collect())
            .collect(),
        targets: labels.iter().map(|l| l.sign()).collect(),
    };
    let mut u = vec![softplus_inverse(1.0 / r.cols() as f64); r.cols()];
    let initial_loss = problem.loss(&u);
    let mut best = (initial_loss, u.clone());
    for _ in 0..cfg.epochs {
        let g = problem.gradient(&u);
        for (uk, gk) in u.iter_mut().zip(&g) {
            *uk -= cfg.learning_rate * gk;
        }
        let loss = problem.loss(&u);
        if loss < best.0 {
            best = (loss, u.clone());
        }
    }
    let (final_loss, u) = best;
    Ok(WeightFit {
        weights: u
            .iter()
            .zip(&scales)
            .map(|(&uk, s)| softplus(uk) / s)
            .collect(),
        scales,
        initial_loss,
        final_loss,
    })
}

/// Record of one weight fit inside [`learn_weight_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub time: usize,
    pub formula_ids: Vec<usize>,
    pub fit: WeightFit,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightLearning {
    pub weights: WeightMatrix,
    pub fits: Vec<FitRecord>,
}

/// Learns `w(t)` for `t = 1..=T`; `w(0)` is the zero vector.
pub fn learn_weight_matrix(
    dataset: &LabeledDataset,
    formulas: &[StlFormula],
    cfg: &WeightConfig,
) -> Result<WeightLearning> {
    let horizon = dataset.horizon();
    let mut weights = WeightMatrix::zeros(formulas.len(), horizon + 1);
    let mut fits = Vec::new();
    let mut previous = FormulaPartition::default();
    let mut matrix = RobustnessMatrix::default();
    for t in 1..=horizon {
        let part = partition_formulas(formulas, t);
        if part.le == previous.le {
            weights.copy_column(t - 1, t);
        } else {
            let prefix = dataset.prefix(t)?;
            let update = compute_robustness_incremental(formulas, &part.le, &prefix, &matrix)?;
            matrix = update.matrix;
            let fit = learn_weights(&matrix, dataset.labels(), cfg)?;
            for (&k, &w) in part.le.iter().zip(&fit.weights) {
                weights.set(k, t, w);
            }
            log::debug!(
                "t={t} formulas={} loss {:.4} -> {:.4}",
                part.le.len(),
                fit.initial_loss,
                fit.final_loss
            );
            fits.push(FitRecord {
                time: t,
                formula_ids: part.le.clone(),
                fit,
                evaluations: update.evaluations,
            });
        }
        previous = part;
    }
    Ok(WeightLearning { weights, fits })
}

/// `1 / |F_t|` for every decidable formula at `t`, zero otherwise.
pub fn uniform_weight_matrix(formulas: &[StlFormula], horizon: usize) -> WeightMatrix {
    let mut weights = WeightMatrix::zeros(formulas.len(), horizon + 1);
    for t in 0..=horizon {
        let le = partition_formulas(formulas, t).le;
        if le.is_empty() {
            continue;
        }
        let w = 1.0 / le.len() as f64;
        for k in le {
            weights.set(k, t, w);
        }
    }
    weights
}
