//! On-disk predictor artifacts.
//!
//! A trained fold is a directory holding
//! - `formulas.stl`: one formula per line, in weight-row order;
//! - `weights.csv`: `K` rows of `T + 1` comma-separated weights, no header;
//! - `predictor.json`: dimensions, held-out signals, decision times and
//!   per-formula training details.
//!
//! Numbers are written in shortest round-trip form, so loading restores the
//! exact predictor.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Predictor, Strategy, TrainedModel};
use crate::stl::{parse, StlFormula};
use crate::weights::WeightMatrix;

pub const FORMULAS_FILE: &str = "formulas.stl";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const META_FILE: &str = "predictor.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaMeta {
    pub decision_time: usize,
    pub horizon: usize,
    /// Impurity gain of every internal tree node, pre-order.
    pub node_gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub time: usize,
    pub formulas: Vec<usize>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorMeta {
    pub fold: usize,
    pub strategy: Strategy,
    pub dim: usize,
    pub horizon: usize,
    /// Seed the fold's trees were grown with.
    pub seed: u64,
    /// Dataset row indices and ids of the held-out signals.
    pub heldout: Vec<usize>,
    pub heldout_ids: Vec<String>,
    pub decision_times: Vec<usize>,
    pub formulas: Vec<FormulaMeta>,
    pub weight_fits: Vec<FitMeta>,
}

impl PredictorMeta {
    pub fn describe(
        model: &TrainedModel,
        fold: usize,
        seed: u64,
        heldout: Vec<usize>,
        heldout_ids: Vec<String>,
    ) -> PredictorMeta {
        PredictorMeta {
            fold,
            strategy: model.strategy,
            dim: model.predictor.dim(),
            horizon: model.predictor.horizon(),
            seed,
            heldout,
            heldout_ids,
            decision_times: model.decision_times.as_slice().to_vec(),
            formulas: model
                .formulas
                .iter()
                .map(|f| FormulaMeta {
                    decision_time: f.decision_time,
                    horizon: f.formula.horizon(),
                    node_gains: f.tree.root.gains(),
                })
                .collect(),
            weight_fits: model
                .weight_fits
                .iter()
                .map(|r| FitMeta {
                    time: r.time,
                    formulas: r.formula_ids.clone(),
                    initial_loss: r.fit.initial_loss,
                    final_loss: r.fit.final_loss,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorArtifact {
    pub meta: PredictorMeta,
    pub predictor: Predictor,
}

pub fn formulas_to_text(formulas: &[StlFormula]) -> String {
    formulas.iter().map(|f| format!("{f}\n")).collect()
}

pub fn formulas_from_text(text: &str) -> Result<Vec<StlFormula>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse)
        .collect()
}

pub fn weights_to_csv(weights: &WeightMatrix) -> String {
    let mut out = String::new();
    for k in 0..weights.rows() {
        let row: Vec<String> = weights.row(k).iter().map(|w| format!("{w}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn weights_from_csv(text: &str) -> Result<WeightMatrix> {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| Error::Malformed {
                        line: i + 1,
                        message: format!("weight `{v}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    WeightMatrix::from_rows(rows)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn save_predictor(dir: impl AsRef<Path>, artifact: &PredictorArtifact) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(
        &dir.join(FORMULAS_FILE),
        &formulas_to_text(artifact.predictor.formulas()),
    )?;
    write(
        &dir.join(WEIGHTS_FILE),
        &weights_to_csv(artifact.predictor.weights()),
    )?;
    let mut meta = serde_json::to_string_pretty(&artifact.meta)?;
    meta.push('\n');
    write(&dir.join(META_FILE), &meta)
}

pub fn load_predictor(dir: impl AsRef<Path>) -> Result<PredictorArtifact> {
    let dir = dir.as_ref();
    let formulas = formulas_from_text(&read(&dir.join(FORMULAS_FILE))?)?;
    let weights = weights_from_csv(&read(&dir.join(WEIGHTS_FILE))?)?;
    let meta: PredictorMeta = serde_json::from_str(&read(&dir.join(META_FILE))?)?;
    if weights.rows() != formulas.len() {
        return Err(Error::Artifact(format!(
            "{} formulas but {} weight rows",
            formulas.len(),
            weights.rows()
        )));
    }
    if weights.cols() != meta.horizon + 1 {
        return Err(Error::Artifact(format!(
            "weights have {} columns, horizon {} needs {}",
            weights.cols(),
            meta.horizon,
            meta.horizon + 1
        )));
    }
    let predictor = Predictor::new(formulas, weights, meta.dim)?;
    Ok(PredictorArtifact { meta, predictor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn artifact() -> PredictorArtifact {
        let formulas = vec![
            parse("G[0,2](x1 >= 0.1)").unwrap(),
            parse("(F[1,1](x2 < -3.25)) or (not (x1 > 1e-7))").unwrap(),
        ];
        let weights = WeightMatrix::from_rows(vec![
            vec![0.0, 0.0, 0.1 + 0.2, 1.0 / 3.0],
            vec![0.0, 2.5e-12, 7.0, 7.0],
        ])
        .unwrap();
        PredictorArtifact {
            meta: PredictorMeta {
                fold: 0,
                strategy: Strategy::Framework,
                dim: 2,
                horizon: 3,
                seed: 11,
                heldout: vec![1],
                heldout_ids: vec!["b".into()],
                decision_times: vec![2, 3],
                formulas: vec![],
                weight_fits: vec![],
            },
            predictor: Predictor::new(formulas, weights, 2).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let a = artifact();
        save_predictor(dir.path(), &a).unwrap();
        assert_eq!(load_predictor(dir.path()).unwrap(), a);
    }

    #[test]
    fn inconsistent_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_predictor(dir.path(), &artifact()).unwrap();
        fs::write(dir.path().join(WEIGHTS_FILE), "1,2,3,4\n").unwrap();
        assert!(matches!(
            load_predictor(dir.path()),
            Err(Error::Artifact(_))
        ));
        fs::write(dir.path().join(WEIGHTS_FILE), "1,2,3\n1,2,x\n").unwrap();
        assert!(matches!(
            load_predictor(dir.path()),
            Err(Error::Malformed { .. })
        ));
    }
}
