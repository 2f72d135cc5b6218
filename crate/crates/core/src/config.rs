//! Run configuration, read from TOML. Every field has a default, so an empty
//! file is a valid configuration.
//!
//! ```toml
//! seed = 0
//! folds = 3
//! dataset = "naval.csv"
//! out = "out"
//!
//! [tree]
//! max_depth = 2
//!
//! [pso]
//! swarm_size = 40
//! iterations = 50
//!
//! [weights]
//! epochs = 500
//! learning_rate = 0.05
//!
//! [analysis]
//! min_gap = 1
//!
//! [datagen]
//! kind = "naval"
//! normal = 100
//! anomalous = 100
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::datagen::{generate_driving, generate_naval, DrivingGenConfig, NavalGenConfig};
use crate::error::{Error, Result};
use crate::eval::PipelineConfig;
use crate::optim::PsoConfig;
use crate::signals::LabeledDataset;
use crate::tree::TreeConfig;
use crate::weights::WeightConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorConfig {
    Naval(NavalGenConfig),
    Driving(DrivingGenConfig),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::Naval(NavalGenConfig::default())
    }
}

impl GeneratorConfig {
    pub fn generate(&self) -> Result<LabeledDataset> {
        match self {
            GeneratorConfig::Naval(c) => generate_naval(c),
            GeneratorConfig::Driving(c) => generate_driving(c),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            GeneratorConfig::Naval(c) => c.seed = seed,
            GeneratorConfig::Driving(c) => c.seed = seed,
        }
    }

    /// Name of the generated positive and negative classes.
    pub fn class_names(&self) -> (&'static str, &'static str) {
        match self {
            GeneratorConfig::Naval(_) => ("normal", "anomalous"),
            GeneratorConfig::Driving(_) => ("safe", "aggressive"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSection {
    pub max_depth: usize,
    pub min_samples: usize,
}

impl Default for TreeSection {
    fn default() -> Self {
        let d = TreeConfig::default();
        TreeSection {
            max_depth: d.max_depth,
            min_samples: d.min_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    /// Dataset CSV; when absent the `datagen` section is used.
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub tree: TreeSection,
    pub pso: PsoConfig,
    pub weights: WeightConfig,
    pub analysis: AnalysisConfig,
    pub datagen: GeneratorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            folds: 3,
            dataset: None,
            out: PathBuf::from("out"),
            tree: TreeSection::default(),
            pso: PsoConfig::default(),
            weights: WeightConfig::default(),
            analysis: AnalysisConfig::default(),
            datagen: GeneratorConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if !(self.weights.learning_rate > 0.0) {
            return Err(Error::Config(
                "weights.learning_rate must be positive".into(),
            ));
        }
        if self.analysis.min_gap == 0 {
            return Err(Error::Config("analysis.min_gap must be at least 1".into()));
        }
        self.tree_config().validate()
    }

    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.tree.max_depth,
            min_samples: self.tree.min_samples,
            pso: self.pso,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            folds: self.folds,
            seed: self.seed,
            analysis: self.analysis,
            tree: self.tree_config(),
            weights: self.weights,
        }
    }

    /// The configured dataset file, or the generator output.
    pub fn dataset(&self) -> Result<LabeledDataset> {
        match &self.dataset {
            Some(path) => crate::signals::load_dataset(path),
            None => self.datagen.generate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.pipeline().tree.max_depth, 2);
        assert_eq!(cfg.pipeline().folds, 3);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::from_toml(
            "seed = 9\nfolds = 4\n[tree]\nmax_depth = 3\n[pso]\nswarm_size = 10\n\
             [datagen]\nkind = \"driving\"\nsafe = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.tree_config().max_depth, 3);
        assert_eq!(cfg.tree_config().pso.swarm_size, 10);
        assert_eq!(cfg.tree_config().pso.iterations, 50);
        match cfg.datagen {
            GeneratorConfig::Driving(d) => assert_eq!((d.safe, d.aggressive), (4, 150)),
            other => panic!("unexpected generator {other:?}"),
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig {
            seed: 5,
            dataset: Some(PathBuf::from("data.csv")),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            "folds = 1",
            "[tree]\nmax_depth = 0",
            "bogus = 1",
            "folds = \"x\"",
        ] {
            assert!(
                matches!(RunConfig::from_toml(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
