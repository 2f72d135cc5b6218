//! Signal analysis: the positive-negative distance curve and the decision
//! times extracted from the zeros of its discrete derivatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Label, LabeledDataset};

/// `values[t]` is the summed squared distance between every positive and
/// every negative signal at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCurve {
    pub values: Vec<f64>,
}

impl DistanceCurve {
    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// Sorted, duplicate-free decision times in `[1, T]`, always containing `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTimes(Vec<usize>);

impl DecisionTimes {
    /// Validates and normalizes an explicit set of decision times.
    pub fn new(mut times: Vec<usize>, horizon: usize) -> Result<DecisionTimes> {
        times.push(horizon);
        times.sort_unstable();
        times.dedup();
        if let Some(&bad) = times.iter().find(|&&t| t == 0 || t > horizon) {
            return Err(Error::TimeOutOfRange {
                t: bad,
                max: horizon,
            });
        }
        Ok(DecisionTimes(times))
    }

    /// Every time step `1..=T`.
    pub fn all(horizon: usize) -> DecisionTimes {
        DecisionTimes((1..=horizon.max(1)).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Decision times closer than this are merged; `1` disables merging.
    pub min_gap: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { min_gap: 1 }
    }
}

pub fn positive_negative_distance(dataset: &LabeledDataset) -> Result<DistanceCurve> {
    dataset.require_both_classes()?;
    let (pos, neg): (Vec<_>, Vec<_>) = dataset
        .iter()
        .partition(|(_, label)| *label == Label::Positive);
    let dim = dataset.dim();
    let values = (0..=dataset.horizon())
        .into_par_iter()
        .map(|t| {
            let mut total = 0.0;
            for j in 0..dim {
                for (h, _) in &pos {
                    let a = h.value(t, j);
                    for (g, _) in &neg {
                        let d = a - g.value(t, j);
                        total += d * d;
                    }
                }
            }
            total
        })
        .collect();
    Ok(DistanceCurve { values })
}

/// Start indices of the zero-crossings of `diff`.
///
/// A run of exact zeros is reported once at its first index; a strict sign
/// change between `diff[i - 1]` and `diff[i]` is reported at `i`.
fn zero_crossings(diff: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < diff.len() {
        if diff[i] == 0.0 {
            out.push(i);
            while i < diff.len() && diff[i] == 0.0 {
                i += 1;
            }
            continue;
        }
        if i > 0 && diff[i - 1] != 0.0 && (diff[i - 1] > 0.0) != (diff[i] > 0.0) {
            out.push(i);
        }
        i += 1;
    }
    out
}

/// Decision times from the first and second forward differences of `curve`.
///
/// With `d1(t) = v(t+1) - v(t)`, a sign change between `d1(t-1)` and `d1(t)`
/// marks a local extremum at `t`; a run of zero `d1` starting at `t` marks a
/// plateau starting at `t`. The second difference `d2(t) = d1(t+1) - d1(t)` is
/// centred on `t + 1`, so its events are shifted by one. Results are clamped to
/// `[1, T]` and always include `T`.
pub fn decision_times(
    curve: &DistanceCurve,
    horizon: usize,
    config: &AnalysisConfig,
) -> Result<DecisionTimes> {
    if curve.values.len() != horizon + 1 {
        return Err(Error::DimensionMismatch {
            expected: horizon + 1,
            found: curve.values.len(),
        });
    }
    if horizon == 0 {
        return Err(Error::TimeOutOfRange { t: 0, max: 0 });
    }
    let v = &curve.values;
    let d1: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<f64> = d1.windows(2).map(|w| w[1] - w[0]).collect();

    let mut times: Vec<usize> = zero_crossings(&d1);
    // zeros of d2 inside a plateau are already covered by the plateau start
    times.extend(
        zero_crossings(&d2)
            .into_iter()
            .filter(|&i| !(d1[i] == 0.0 && d1[i + 1] == 0.0))
            .map(|i| i + 1),
    );
    for t in times.iter_mut() {
        *t = (*t).clamp(1, horizon);
    }
    times.push(horizon);
    times.sort_unstable();
    times.dedup();

    if config.min_gap > 1 {
        // |d2| centred on t, used to pick the survivor of a merged cluster
        let curvature = |t: usize| {
            if t >= 1 {
                d2.get(t - 1).map_or(0.0, |c| c.abs())
            } else {
                0.0
            }
        };
        let mut merged: Vec<usize> = Vec::with_capacity(times.len());
        for t in times {
            match merged.last_mut() {
                Some(prev) if t - *prev < config.min_gap => {
                    if t == horizon || (*prev != horizon && curvature(t) > curvature(*prev)) {
                        *prev = t;
                    }
                }
                _ => merged.push(t),
            }
        }
        times = merged;
    }
    Ok(DecisionTimes(times))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Signal;

    fn dataset(pos: &[&[f64]], neg: &[&[f64]]) -> LabeledDataset {
        let mut signals = Vec::new();
        let mut labels = Vec::new();
        for (k, s) in pos.iter().enumerate() {
            let rows: Vec<Vec<f64>> = s.iter().map(|&v| vec![v]).collect();
            signals.push(Signal::from_rows(format!("p{k}"), &rows).unwrap());
            labels.push(Label::Positive);
        }
        for (k, s) in neg.iter().enumerate() {
            let rows: Vec<Vec<f64>> = s.iter().map(|&v| vec![v]).collect();
            signals.push(Signal::from_rows(format!("n{k}"), &rows).unwrap());
            labels.push(Label::Negative);
        }
        LabeledDataset::new(signals, labels).unwrap()
    }

    #[test]
    fn hand_computed_curve() {
        let d = dataset(&[&[0.0, 2.0]], &[&[1.0, 0.0]]);
        assert_eq!(
            positive_negative_distance(&d).unwrap().values,
            vec![1.0, 4.0]
        );
    }

    #[test]
    fn identical_classes_give_zero_curve() {
        let d = dataset(&[&[0.3, 2.0, -1.0]], &[&[0.3, 2.0, -1.0]]);
        assert!(positive_negative_distance(&d)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn single_class_is_rejected() {
        let d = dataset(&[&[0.0], &[1.0]], &[]);
        assert!(matches!(
            positive_negative_distance(&d),
            Err(Error::SingleClass)
        ));
    }

    fn curve(values: Vec<f64>) -> DistanceCurve {
        DistanceCurve { values }
    }

    #[test]
    fn convex_monotone_curve_yields_only_horizon() {
        let c = curve((0..=10).map(|t| (t * t) as f64 + t as f64).collect());
        let times = decision_times(&c, 10, &AnalysisConfig::default()).unwrap();
        assert_eq!(times.as_slice(), &[10]);
    }

    #[test]
    fn interior_maximum_is_found() {
        let c = curve((0..=10).map(|t| -((t as f64 - 5.0).powi(2))).collect());
        let times = decision_times(&c, 10, &AnalysisConfig::default()).unwrap();
        assert!(times.as_slice().contains(&5));
        assert_eq!(times.as_slice().last(), Some(&10));
    }

    #[test]
    fn plateau_reported_at_first_index() {
        let c = curve(vec![0.0, 1.0, 3.0, 3.0, 3.0, 2.5, 1.0]);
        let times = decision_times(&c, 6, &AnalysisConfig::default()).unwrap();
        assert!(times.as_slice().contains(&2));
        assert!(!times.as_slice().contains(&3));
    }

    #[test]
    fn flat_curve_is_degenerate_but_valid() {
        let c = curve(vec![0.0; 8]);
        let times = decision_times(&c, 7, &AnalysisConfig::default()).unwrap();
        assert_eq!(times.as_slice(), &[1, 7]);
    }

    #[test]
    fn min_gap_merges_clusters_and_keeps_horizon() {
        let c = curve(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let raw = decision_times(&c, 10, &AnalysisConfig::default()).unwrap();
        let merged = decision_times(&c, 10, &AnalysisConfig { min_gap: 3 }).unwrap();
        assert!(merged.len() < raw.len());
        assert_eq!(merged.as_slice().last(), Some(&10));
        assert!(merged
            .as_slice()
            .windows(2)
            .all(|w| w[1] - w[0] >= 3 || w[1] == 10));
    }

    #[test]
    fn explicit_times_are_normalized() {
        let t = DecisionTimes::new(vec![5, 3, 5], 9).unwrap();
        assert_eq!(t.as_slice(), &[3, 5, 9]);
        assert!(DecisionTimes::new(vec![0], 9).is_err());
        assert_eq!(DecisionTimes::all(4).as_slice(), &[1, 2, 3, 4]);
    }
}
