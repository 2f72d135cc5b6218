//! Learning time-variant weighted STL classifiers for partially observed
//! signals.
//!
//! The pipeline picks decision times from the distance between the positive
//! and negative classes, grows one STL decision tree per decision time on the
//! prefixes ending there, and learns per-time weights that combine the
//! robustness of every formula already decidable at the current time.
//!
//! ```
//! use prefix_stl::datagen::{generate_naval, NavalGenConfig};
//! use prefix_stl::eval::{train, PipelineConfig, Strategy};
//!
//! let data = generate_naval(&NavalGenConfig { normal: 10, anomalous: 10, ..Default::default() })?;
//! let model = train(&data, Strategy::Framework, &PipelineConfig::default(), 0)?;
//! let signal = data.signals()[0].view();
//! let at_end = model.predictor.predict(&signal, data.horizon())?;
//! assert!(at_end.label().is_some());
//! # Ok::<(), prefix_stl::Error>(())
//! ```

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod artifact;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod optim;
pub mod signals;
pub mod stl;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use eval::{Prediction, Predictor};
pub use signals::{Label, LabeledDataset, Signal, SignalView};
pub use stl::{robustness, satisfies, StlFormula};
