//! Split search for the tree learner: impurity measures and a particle swarm
//! over first-order primitive valuations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Label, PrefixDataset, SignalView};
use crate::stl::{satisfies, PrimitiveKind, PstlPrimitive, Relation, StlFormula};

/// Class mass of a sample set; counts, or summed sample weights.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassMass {
    pub positive: f64,
    pub negative: f64,
}

impl ClassMass {
    pub fn total(&self) -> f64 {
        self.positive + self.negative
    }

    pub fn add(&mut self, label: Label, weight: f64) {
        match label {
            Label::Positive => self.positive += weight,
            Label::Negative => self.negative += weight,
        }
    }

    pub fn from_labels(labels: impl IntoIterator<Item = Label>) -> ClassMass {
        let mut m = ClassMass::default();
        for l in labels {
            m.add(l, 1.0);
        }
        m
    }
}

/// Node impurity and the gain of a binary split.
pub trait Impurity: Sync {
    fn impurity(&self, mass: ClassMass) -> f64;

    /// `I(parent) - sum_c |c|/|parent| * I(c)` for the split `satisfied` /
    /// `parent - satisfied`.
    fn gain(&self, parent: ClassMass, satisfied: ClassMass) -> Result<f64> {
        let total = parent.total();
        if total <= 0.0 {
            return Err(Error::EmptyDataset);
        }
        let violated = ClassMass {
            positive: parent.positive - satisfied.positive,
            negative: parent.negative - satisfied.negative,
        };
        Ok(self.impurity(parent)
            - satisfied.total() / total * self.impurity(satisfied)
            - violated.total() / total * self.impurity(violated))
    }
}

/// Misclassification impurity `min(p_pos, p_neg)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Misclassification;

impl Impurity for Misclassification {
    fn impurity(&self, mass: ClassMass) -> f64 {
        let total = mass.total();
        if total <= 0.0 {
            0.0
        } else {
            mass.positive.min(mass.negative) / total
        }
    }
}

/// Misclassification gain of splitting `parent` into `satisfied` and the rest.
pub fn impurity_gain(parent: ClassMass, satisfied: ClassMass) -> Result<f64> {
    Misclassification.gain(parent, satisfied)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 40,
            iterations: 50,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config("pso.swarm_size must be at least 2".into()));
        }
        if self.iterations < 1 {
            return Err(Error::Config("pso.iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub position: Vec<f64>,
    pub fitness: f64,
    pub evaluations: usize,
    /// Global best after initialization and after every iteration.
    pub history: Vec<f64>,
}

/// Maximizes `fitness` over the box `bounds` with a global-best particle swarm.
///
/// Positions leaving the box are clamped and the offending velocity component
/// is zeroed. The global best only ever improves.
pub fn pso_maximize<F>(bounds: &[(f64, f64)], cfg: &PsoConfig, mut fitness: F) -> PsoOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = bounds.len();
    let span: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let sample = |rng: &mut ChaCha8Rng, lo: f64, width: f64| {
        if width > 0.0 {
            lo + width * rng.random::<f64>()
        } else {
            lo
        }
    };

    let mut positions: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| {
            (0..dim)
                .map(|d| sample(&mut rng, bounds[d].0, span[d]))
                .collect()
        })
        .collect();
    let mut velocities: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|_| {
            (0..dim)
                .map(|d| sample(&mut rng, -0.25 * span[d], 0.5 * span[d]))
                .collect()
        })
        .collect();
    let mut personal = positions.clone();
    let mut personal_fit: Vec<f64> = positions.iter().map(|p| fitness(p)).collect();
    let mut evaluations = cfg.swarm_size;

    let mut best = 0;
    for i in 1..cfg.swarm_size {
        if personal_fit[i] > personal_fit[best] {
            best = i;
        }
    }
    let mut global = personal[best].clone();
    let mut global_fit = personal_fit[best];
    let mut history = vec![global_fit];

    for _ in 0..cfg.iterations {
        for i in 0..cfg.swarm_size {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let mut v = cfg.inertia * velocities[i][d]
                    + cfg.cognitive * r1 * (personal[i][d] - positions[i][d])
                    + cfg.social * r2 * (global[d] - positions[i][d]);
                v = v.clamp(-span[d], span[d]);
                let mut x = positions[i][d] + v;
                let (lo, hi) = bounds[d];
                if x < lo || x > hi {
                    x = x.clamp(lo, hi);
                    v = 0.0;
                }
                velocities[i][d] = v;
                positions[i][d] = x;
            }
        }
        // fitness is pure; evaluate the whole swarm before updating bests
        let fits: Vec<f64> = positions.iter().map(|p| fitness(p)).collect();
        evaluations += fits.len();
        for (i, f) in fits.into_iter().enumerate() {
            if f > personal_fit[i] {
                personal_fit[i] = f;
                personal[i].clone_from(&positions[i]);
            }
            if f > global_fit {
                global_fit = f;
                global.clone_from(&positions[i]);
            }
        }
        history.push(global_fit);
    }
    PsoOutcome {
        position: global,
        fitness: global_fit,
        evaluations,
        history,
    }
}

/// Parameter box for primitives on one prefix dataset node.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub cutoff: usize,
    /// Observed `(min, max)` per component over the node's prefixes.
    pub thresholds: Vec<(f64, f64)>,
}

impl ParamSpace {
    pub fn observe(data: &PrefixDataset<'_>, members: &[usize]) -> ParamSpace {
        let dim = data.dim();
        let mut thresholds = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for &i in members {
            let s = data.view(i);
            for t in 0..=data.cutoff() {
                for (j, range) in thresholds.iter_mut().enumerate() {
                    let v = s.value(t, j);
                    range.0 = range.0.min(v);
                    range.1 = range.1.max(v);
                }
            }
        }
        ParamSpace {
            cutoff: data.cutoff(),
            thresholds,
        }
    }

    /// Decodes a particle `[t0, t1, threshold]`: times are rounded and put in
    /// order, the threshold is clamped to the observed range.
    pub fn decode(
        &self,
        kind: PrimitiveKind,
        component: usize,
        relation: Relation,
        x: &[f64],
    ) -> PstlPrimitive {
        let time = |v: f64| (v.round().max(0.0) as usize).min(self.cutoff);
        let (mut start, mut end) = (time(x[0]), time(x[1]));
        if start > end {
            std::mem::swap(&mut start, &mut end);
        }
        let (lo, hi) = self.thresholds[component];
        PstlPrimitive {
            kind,
            component,
            relation,
            start,
            end,
            threshold: x[2].clamp(lo, hi),
        }
    }

    fn bounds(&self, component: usize) -> [(f64, f64); 3] {
        let c = self.cutoff as f64;
        [(0.0, c), (0.0, c), self.thresholds[component]]
    }
}

/// The best split found for a node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub primitive: PstlPrimitive,
    pub gain: f64,
}

impl SplitCandidate {
    pub fn formula(&self) -> StlFormula {
        self.primitive.to_formula()
    }
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    mix_seed(seed, salt.wrapping_add(1))
}

/// Searches the primitive family for the valuation maximizing the impurity
/// gain of `partition(S, path ∧ ψ)` over the node `members`.
///
/// One swarm runs per (kind, component, relation) in that order. Ties keep the
/// earlier kind, then the smaller horizon. The threshold of the winner is moved
/// to the midpoint between the two observed values around it, which keeps the
/// partition and leaves no member with zero robustness.
pub fn optimize_primitive(
    data: &PrefixDataset<'_>,
    members: &[usize],
    path: Option<&StlFormula>,
    kinds: &[PrimitiveKind],
    impurity: &dyn Impurity,
    cfg: &PsoConfig,
) -> Result<Option<SplitCandidate>> {
    if members.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    let space = ParamSpace::observe(data, members);
    let in_path: Vec<bool> = match path {
        Some(p) => members
            .iter()
            .map(|&i| satisfies(&data.view(i), p, 0))
            .collect::<Result<_>>()?,
        None => vec![true; members.len()],
    };
    let parent = ClassMass::from_labels(members.iter().map(|&i| data.label(i)));
    let views: Vec<(SignalView<'_>, Label)> = members
        .iter()
        .map(|&i| (data.view(i), data.label(i)))
        .collect();

    let split_gain = |p: &PstlPrimitive| -> f64 {
        let mut sat = ClassMass::default();
        for ((view, label), &inside) in views.iter().zip(&in_path) {
            if inside && p.robustness(view) >= 0.0 {
                sat.add(*label, 1.0);
            }
        }
        impurity.gain(parent, sat).unwrap_or(0.0)
    };

    let mut best: Option<SplitCandidate> = None;
    let mut run = 0u64;
    for &kind in kinds {
        for component in 0..data.dim() {
            for relation in Relation::ALL {
                run += 1;
                let swarm = PsoConfig {
                    seed: derive_seed(cfg.seed, run),
                    ..*cfg
                };
                let outcome = pso_maximize(&space.bounds(component), &swarm, |x| {
                    split_gain(&space.decode(kind, component, relation, x))
                });
                let primitive = space.decode(kind, component, relation, &outcome.position);
                let candidate = SplitCandidate {
                    gain: outcome.fitness,
                    primitive,
                };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        candidate.gain > b.gain
                            || (candidate.gain == b.gain
                                && candidate.primitive.kind == b.primitive.kind
                                && candidate.primitive.horizon() < b.primitive.horizon())
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
    }
    Ok(best.map(|mut b| {
        let extrema: Vec<f64> = views
            .iter()
            .zip(&in_path)
            .filter(|(_, &inside)| inside)
            .map(|((v, _), _)| window_extremum(&b.primitive, v))
            .collect();
        b.primitive.threshold = snap_threshold(&b.primitive, &extrema);
        b
    }))
}

fn window_extremum(p: &PstlPrimitive, s: &SignalView<'_>) -> f64 {
    // robustness = score(extremum, threshold), invert it
    let rho = p.robustness(s);
    match p.relation {
        Relation::Ge => rho + p.threshold,
        Relation::Lt => p.threshold - rho,
    }
}

fn snap_threshold(p: &PstlPrimitive, extrema: &[f64]) -> f64 {
    let c = p.threshold;
    // Ge satisfied iff e >= c; Lt satisfied iff e <= c
    let (below, above): (Vec<f64>, Vec<f64>) = match p.relation {
        Relation::Ge => extrema.iter().partition(|&&e| e < c),
        Relation::Lt => extrema.iter().partition(|&&e| e <= c),
    };
    let lower = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let upper = above.iter().copied().fold(f64::INFINITY, f64::min);
    if lower.is_finite() && upper.is_finite() {
        let mid = 0.5 * (lower + upper);
        if mid > lower && mid < upper {
            return mid;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{LabeledDataset, Signal};

    fn mass(p: f64, n: f64) -> ClassMass {
        ClassMass {
            positive: p,
            negative: n,
        }
    }

    #[test]
    fn perfect_split_of_balanced_parent() {
        assert_eq!(impurity_gain(mass(5.0, 5.0), mass(5.0, 0.0)).unwrap(), 0.5);
    }

    #[test]
    fn empty_child_gives_zero_gain() {
        assert_eq!(impurity_gain(mass(3.0, 7.0), mass(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(impurity_gain(mass(3.0, 7.0), mass(3.0, 7.0)).unwrap(), 0.0);
    }

    #[test]
    fn empty_parent_is_an_error() {
        assert!(impurity_gain(mass(0.0, 0.0), mass(0.0, 0.0)).is_err());
    }

    #[test]
    fn gain_is_bounded_by_parent_impurity() {
        for p in 0..6 {
            for n in 0..6 {
                if p + n == 0 {
                    continue;
                }
                for sp in 0..=p {
                    for sn in 0..=n {
                        let parent = mass(p as f64, n as f64);
                        let g = impurity_gain(parent, mass(sp as f64, sn as f64)).unwrap();
                        let bound = Misclassification.impurity(parent);
                        assert!(g >= -1e-12 && g <= bound + 1e-12, "{p} {n} {sp} {sn}: {g}");
                    }
                }
            }
        }
    }

    #[test]
    fn pso_finds_a_smooth_maximum() {
        let cfg = PsoConfig::default();
        let out = pso_maximize(&[(-5.0, 5.0), (-5.0, 5.0)], &cfg, |x| {
            -(x[0] - 1.0).powi(2) - (x[1] + 2.0).powi(2)
        });
        assert!(out.fitness > -1e-3, "{}", out.fitness);
        assert_eq!(out.evaluations, cfg.swarm_size * (cfg.iterations + 1));
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn pso_is_deterministic() {
        let cfg = PsoConfig {
            seed: 9,
            ..PsoConfig::default()
        };
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[0].cos();
        let a = pso_maximize(&[(0.0, 10.0)], &cfg, f);
        let b = pso_maximize(&[(0.0, 10.0)], &cfg, f);
        assert_eq!(a, b);
    }

    fn one_dim(pos: &[Vec<f64>], neg: &[Vec<f64>]) -> LabeledDataset {
        let mut signals = Vec::new();
        let mut labels = Vec::new();
        for (k, s) in pos.iter().chain(neg).enumerate() {
            let rows: Vec<Vec<f64>> = s.iter().map(|&v| vec![v]).collect();
            signals.push(Signal::from_rows(format!("s{k}"), &rows).unwrap());
            labels.push(if k < pos.len() {
                Label::Positive
            } else {
                Label::Negative
            });
        }
        LabeledDataset::new(signals, labels).unwrap()
    }

    #[test]
    fn separable_instance_is_split_perfectly() {
        let pos: Vec<Vec<f64>> = (0..6).map(|k| vec![6.0 + k as f64 * 0.3; 8]).collect();
        let neg: Vec<Vec<f64>> = (0..6).map(|k| vec![1.0 + k as f64 * 0.5; 8]).collect();
        let d = one_dim(&pos, &neg);
        let prefix = d.prefix(7).unwrap();
        let members: Vec<usize> = (0..d.len()).collect();
        let best = optimize_primitive(
            &prefix,
            &members,
            None,
            &PrimitiveKind::ALL,
            &Misclassification,
            &PsoConfig::default(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(best.gain, 0.5);
        assert!(best.primitive.horizon() <= 7);
        // the snapped threshold leaves no member on the boundary
        let mut sat = Vec::new();
        let mut viol = Vec::new();
        for i in 0..d.len() {
            let rho = best.primitive.robustness(&prefix.view(i));
            assert_ne!(rho, 0.0);
            if rho > 0.0 {
                sat.push(d.labels()[i]);
            } else {
                viol.push(d.labels()[i]);
            }
        }
        assert!(sat.iter().all(|&l| l == sat[0]));
        assert!(viol.iter().all(|&l| l == viol[0]));
        assert_ne!(sat[0], viol[0]);
    }

    #[test]
    fn indistinguishable_classes_give_zero_gain() {
        let same: Vec<Vec<f64>> = (0..4).map(|_| vec![2.0, 3.0, 1.0]).collect();
        let d = one_dim(&same, &same);
        let prefix = d.prefix(2).unwrap();
        let members: Vec<usize> = (0..d.len()).collect();
        let best = optimize_primitive(
            &prefix,
            &members,
            None,
            &PrimitiveKind::ALL,
            &Misclassification,
            &PsoConfig::default(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(best.gain, 0.0);
    }

    #[test]
    fn decode_repairs_order_and_clamps() {
        let space = ParamSpace {
            cutoff: 10,
            thresholds: vec![(0.0, 1.0)],
        };
        let p = space.decode(PrimitiveKind::Always, 0, Relation::Ge, &[7.6, 2.2, 3.0]);
        assert_eq!((p.start, p.end), (2, 8));
        assert_eq!(p.threshold, 1.0);
    }
}
