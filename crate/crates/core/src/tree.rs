//! Decision trees over first-order primitives, grown on a prefix dataset, and
//! their translation into a single STL formula.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::DecisionTimes;
use crate::error::{Error, Result};
use crate::optim::{derive_seed, optimize_primitive, ClassMass, Misclassification, PsoConfig};
use crate::signals::{Label, LabeledDataset, PrefixDataset, SignalView};
use crate::stl::{satisfies, Comparison, PrimitiveKind, StlFormula};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples: usize,
    pub pso: PsoConfig,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 2,
            min_samples: 1,
            pso: PsoConfig::default(),
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        self.pso.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: Label,
        positives: usize,
        negatives: usize,
    },
    /// `left` holds the samples satisfying `formula`, `right` the rest.
    Internal {
        formula: StlFormula,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Split gains in pre-order.
    pub fn gains(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_gains(&mut out);
        out
    }

    fn collect_gains(&self, out: &mut Vec<f64>) {
        if let TreeNode::Internal {
            gain, left, right, ..
        } = self
        {
            out.push(*gain);
            left.collect_gains(out);
            right.collect_gains(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub cutoff: usize,
    /// Threshold above every value of `x1` seen in training; `x1 >= c` is the
    /// canonical false formula.
    pub false_threshold: f64,
}

impl DecisionTree {
    /// Class of `signal` by walking the tree; node formulas are checked at time 0.
    pub fn classify(&self, signal: &SignalView<'_>) -> Result<Label> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(*label),
                TreeNode::Internal {
                    formula,
                    left,
                    right,
                    ..
                } => {
                    node = if satisfies(signal, formula, 0)? {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Always-false formula `x1 >= c`.
    pub fn falsum(&self) -> StlFormula {
        StlFormula::predicate(0, Comparison::Ge, self.false_threshold)
    }
}

/// Gains at or below this are rounding noise, not an improvement.
const MIN_GAIN: f64 = 1e-12;

fn false_threshold(data: &LabeledDataset) -> f64 {
    let (lo, hi) = data.component_range(0);
    hi + (hi - lo).max(1.0)
}

fn majority(mass: ClassMass) -> Label {
    // ties go to the negative class
    if mass.positive > mass.negative {
        Label::Positive
    } else {
        Label::Negative
    }
}

fn grow(
    data: &PrefixDataset<'_>,
    members: &[usize],
    path: Option<&StlFormula>,
    depth: usize,
    node_id: u64,
    cfg: &TreeConfig,
) -> Result<TreeNode> {
    let mass = ClassMass::from_labels(members.iter().map(|&i| data.label(i)));
    let leaf = || TreeNode::Leaf {
        label: majority(mass),
        positives: mass.positive as usize,
        negatives: mass.negative as usize,
    };
    let pure = mass.positive == 0.0 || mass.negative == 0.0;
    if depth >= cfg.max_depth || pure || members.len() < cfg.min_samples {
        return Ok(leaf());
    }
    let pso = PsoConfig {
        seed: derive_seed(cfg.pso.seed, node_id),
        ..cfg.pso
    };
    let best = optimize_primitive(
        data,
        members,
        path,
        &PrimitiveKind::ALL,
        &Misclassification,
        &pso,
    )?;
    let Some(best) = best.filter(|b| b.gain > MIN_GAIN) else {
        return Ok(leaf());
    };
    let formula = best.formula();
    let mut sat = Vec::new();
    let mut viol = Vec::new();
    for &i in members {
        if satisfies(&data.view(i), &formula, 0)? {
            sat.push(i);
        } else {
            viol.push(i);
        }
    }
    log::debug!(
        "cutoff={} node={node_id} gain={} split={}/{} formula={formula}",
        data.cutoff(),
        best.gain,
        sat.len(),
        viol.len()
    );
    let left_path = match path {
        Some(p) => p.clone().and(formula.clone()),
        None => formula.clone(),
    };
    let right_path = match path {
        Some(p) => p.clone().and(formula.clone().not()),
        None => formula.clone().not(),
    };
    let left = grow(data, &sat, Some(&left_path), depth + 1, 2 * node_id, cfg)?;
    let right = grow(
        data,
        &viol,
        Some(&right_path),
        depth + 1,
        2 * node_id + 1,
        cfg,
    )?;
    Ok(TreeNode::Internal {
        formula,
        gain: best.gain,
        left: Box::new(left),
        right: Box::new(right),
    })
}

/// Grows a tree on `S[0:cutoff]` starting from an empty path at depth 0.
pub fn build_tree(data: &PrefixDataset<'_>, cfg: &TreeConfig) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    let members: Vec<usize> = (0..data.len()).collect();
    let root = grow(data, &members, None, 0, 1, cfg)?;
    Ok(DecisionTree {
        root,
        cutoff: data.cutoff(),
        false_threshold: false_threshold(data.base()),
    })
}

fn positive_paths(node: &TreeNode, path: &mut Vec<StlFormula>, out: &mut Vec<Vec<StlFormula>>) {
    match node {
        TreeNode::Leaf { label, .. } => {
            if *label == Label::Positive {
                out.push(path.clone());
            }
        }
        TreeNode::Internal {
            formula,
            left,
            right,
            ..
        } => {
            path.push(formula.clone());
            positive_paths(left, path, out);
            path.pop();
            path.push(formula.clone().not());
            positive_paths(right, path, out);
            path.pop();
        }
    }
}

/// Disjunction over root-to-positive-leaf paths of the conjunction of the edge
/// formulas. A tree without positive leaves becomes the false formula, a
/// single positive leaf its negation.
pub fn tree_to_stl(tree: &DecisionTree) -> StlFormula {
    let mut paths = Vec::new();
    positive_paths(&tree.root, &mut Vec::new(), &mut paths);
    let clauses = paths.into_iter().map(|literals| {
        literals
            .into_iter()
            .reduce(StlFormula::and)
            .unwrap_or_else(|| tree.falsum().not())
    });
    clauses
        .reduce(StlFormula::or)
        .unwrap_or_else(|| tree.falsum())
}

/// A formula learned at one decision time.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFormula {
    pub decision_time: usize,
    pub formula: StlFormula,
    pub tree: DecisionTree,
}

/// One tree per decision time, each grown on `S[0:t_k]`.
///
/// The swarm seed of each tree depends only on `seed` and `t_k`.
pub fn learn_formula_set(
    dataset: &LabeledDataset,
    times: &DecisionTimes,
    cfg: &TreeConfig,
    seed: u64,
) -> Result<Vec<LearnedFormula>> {
    times
        .as_slice()
        .par_iter()
        .map(|&t| {
            let prefix = dataset.prefix(t)?;
            let tree_cfg = TreeConfig {
                pso: PsoConfig {
                    seed: derive_seed(seed ^ cfg.pso.seed, t as u64),
                    ..cfg.pso
                },
                ..*cfg
            };
            let tree = build_tree(&prefix, &tree_cfg)?;
            Ok(LearnedFormula {
                decision_time: t,
                formula: tree_to_stl(&tree),
                tree,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Signal;
    use crate::stl::parse;

    fn leaf(label: Label) -> TreeNode {
        TreeNode::Leaf {
            label,
            positives: 0,
            negatives: 0,
        }
    }

    fn internal(text: &str, left: TreeNode, right: TreeNode) -> TreeNode {
        TreeNode::Internal {
            formula: parse(text).unwrap(),
            gain: 0.1,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn tree(root: TreeNode) -> DecisionTree {
        DecisionTree {
            root,
            cutoff: 20,
            false_threshold: 100.0,
        }
    }

    #[test]
    fn translation_of_small_trees() {
        assert_eq!(
            tree_to_stl(&tree(leaf(Label::Positive))).to_string(),
            "not (x1 >= 100)"
        );
        assert_eq!(
            tree_to_stl(&tree(leaf(Label::Negative))).to_string(),
            "x1 >= 100"
        );
        let single = tree(internal(
            "G[1,3](x1 > 2)",
            leaf(Label::Positive),
            leaf(Label::Negative),
        ));
        assert_eq!(tree_to_stl(&single), parse("G[1,3](x1 > 2)").unwrap());
    }

    #[test]
    fn depth_two_translation_shape() {
        let t = tree(internal(
            "G[11,16](x2 > 23.33)",
            internal(
                "F[15,18](x2 <= 33.83)",
                leaf(Label::Positive),
                leaf(Label::Negative),
            ),
            internal(
                "G[4,13](x1 > 42.69)",
                leaf(Label::Positive),
                leaf(Label::Negative),
            ),
        ));
        let expected = parse(
            "(G[11,16](x2 > 23.33) and F[15,18](x2 <= 33.83)) \
             or (not G[11,16](x2 > 23.33) and G[4,13](x1 > 42.69))",
        )
        .unwrap();
        assert_eq!(tree_to_stl(&t), expected);
        assert_eq!(t.depth(), 2);
    }

    fn separable() -> LabeledDataset {
        let mut signals = Vec::new();
        let mut labels = Vec::new();
        for k in 0..10 {
            let high = k % 2 == 0;
            let rows: Vec<Vec<f64>> = (0..12)
                .map(|t| {
                    let base = if high && t >= 4 { 5.0 } else { 1.0 };
                    vec![base + 0.1 * k as f64]
                })
                .collect();
            signals.push(Signal::from_rows(format!("s{k}"), &rows).unwrap());
            labels.push(if high {
                Label::Positive
            } else {
                Label::Negative
            });
        }
        LabeledDataset::new(signals, labels).unwrap()
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let d = separable();
        let only_pos = d.subset(&[0, 2, 4]).unwrap();
        let t = build_tree(&only_pos.prefix(11).unwrap(), &TreeConfig::default()).unwrap();
        assert!(matches!(
            t.root,
            TreeNode::Leaf {
                label: Label::Positive,
                ..
            }
        ));
    }

    #[test]
    fn separable_set_needs_one_split() {
        let d = separable();
        let cfg = TreeConfig {
            max_depth: 1,
            ..TreeConfig::default()
        };
        let prefix = d.prefix(11).unwrap();
        let t = build_tree(&prefix, &cfg).unwrap();
        assert_eq!(t.depth(), 1);
        let phi = tree_to_stl(&t);
        assert!(phi.horizon() <= 11);
        for (i, (_, label)) in prefix.iter().enumerate() {
            assert_eq!(t.classify(&prefix.view(i)).unwrap(), label);
            assert_eq!(
                satisfies(&prefix.view(i), &phi, 0).unwrap(),
                label == Label::Positive
            );
        }
    }

    #[test]
    fn leaf_tie_goes_negative() {
        let mass = ClassMass {
            positive: 2.0,
            negative: 2.0,
        };
        assert_eq!(majority(mass), Label::Negative);
    }

    #[test]
    fn formula_set_members_are_independent() {
        let d = separable();
        let cfg = TreeConfig::default();
        let all =
            learn_formula_set(&d, &DecisionTimes::new(vec![3, 6], 11).unwrap(), &cfg, 4).unwrap();
        let fewer =
            learn_formula_set(&d, &DecisionTimes::new(vec![6], 11).unwrap(), &cfg, 4).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(fewer.len(), 2);
        assert_eq!(all[1], fewer[0]);
        assert_eq!(all[2], fewer[1]);
        for lf in &all {
            assert!(lf.formula.horizon() <= lf.decision_time);
        }
    }
}
