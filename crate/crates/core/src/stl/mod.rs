//! Signal Temporal Logic over discrete-time signals.
//!
//! Formulas are built from predicates `x_j ~ c`, negation, binary conjunction
//! and disjunction, and the bounded operators `G[a,b]` (always) and `F[a,b]`
//! (eventually). Robustness follows the usual quantitative semantics; a
//! formula is satisfied exactly when its robustness is non-negative.
//!
//! Strict and non-strict comparisons share one quantitative meaning: `>` and
//! `>=` both score `x - c`, `<` and `<=` both score `c - x`. The written
//! comparison is kept so formulas print back the way they were read.

mod parse;

use std::fmt;

pub use parse::parse;

use crate::error::{Error, Result};
use crate::signals::SignalView;
use crate::weights::WeightMatrix;

/// Comparison as written in a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    pub fn relation(self) -> Relation {
        match self {
            Comparison::Lt | Comparison::Le => Relation::Lt,
            Comparison::Gt | Comparison::Ge => Relation::Ge,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

/// Canonical predicate relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `x_j >= c`, robustness `x_j - c`.
    Ge,
    /// `x_j < c`, robustness `c - x_j`.
    Lt,
}

impl Relation {
    pub const ALL: [Relation; 2] = [Relation::Ge, Relation::Lt];

    pub fn comparison(self) -> Comparison {
        match self {
            Relation::Ge => Comparison::Ge,
            Relation::Lt => Comparison::Lt,
        }
    }

    #[inline]
    pub fn score(self, value: f64, threshold: f64) -> f64 {
        match self {
            Relation::Ge => value - threshold,
            Relation::Lt => threshold - value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predicate {
    /// 0-based component index; printed as `x{component + 1}`.
    pub component: usize,
    pub comparison: Comparison,
    pub threshold: f64,
}

impl Predicate {
    pub fn relation(&self) -> Relation {
        self.comparison.relation()
    }
}

/// Closed integer interval `[start, end]` with `start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    start: usize,
    end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Interval> {
        if start > end {
            return Err(Error::Syntax {
                position: 0,
                message: format!("interval [{start},{end}] has start after end"),
            });
        }
        Ok(Interval { start, end })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula {
    Predicate(Predicate),
    Not(Box<StlFormula>),
    And(Box<StlFormula>, Box<StlFormula>),
    Or(Box<StlFormula>, Box<StlFormula>),
    Always(Interval, Box<StlFormula>),
    Eventually(Interval, Box<StlFormula>),
}

impl StlFormula {
    pub fn predicate(component: usize, comparison: Comparison, threshold: f64) -> StlFormula {
        StlFormula::Predicate(Predicate {
            component,
            comparison,
            threshold,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> StlFormula {
        StlFormula::Not(Box::new(self))
    }

    pub fn and(self, rhs: StlFormula) -> StlFormula {
        StlFormula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: StlFormula) -> StlFormula {
        StlFormula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn always(start: usize, end: usize, body: StlFormula) -> Result<StlFormula> {
        Ok(StlFormula::Always(
            Interval::new(start, end)?,
            Box::new(body),
        ))
    }

    pub fn eventually(start: usize, end: usize, body: StlFormula) -> Result<StlFormula> {
        Ok(StlFormula::Eventually(
            Interval::new(start, end)?,
            Box::new(body),
        ))
    }

    /// Number of time steps past the evaluation time needed to decide the formula.
    pub fn horizon(&self) -> usize {
        match self {
            StlFormula::Predicate(_) => 0,
            StlFormula::Not(f) => f.horizon(),
            StlFormula::And(a, b) | StlFormula::Or(a, b) => a.horizon().max(b.horizon()),
            StlFormula::Always(i, f) | StlFormula::Eventually(i, f) => i.end + f.horizon(),
        }
    }

    /// Largest 0-based component index referenced.
    pub fn max_component(&self) -> usize {
        match self {
            StlFormula::Predicate(p) => p.component,
            StlFormula::Not(f) | StlFormula::Always(_, f) | StlFormula::Eventually(_, f) => {
                f.max_component()
            }
            StlFormula::And(a, b) | StlFormula::Or(a, b) => {
                a.max_component().max(b.max_component())
            }
        }
    }

    /// Nesting depth; a predicate has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            StlFormula::Predicate(_) => 0,
            StlFormula::Not(f) | StlFormula::Always(_, f) | StlFormula::Eventually(_, f) => {
                1 + f.depth()
            }
            StlFormula::And(a, b) | StlFormula::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn check(&self, signal: &SignalView<'_>, t: usize) -> Result<()> {
        let needed = t + self.horizon();
        if needed > signal.last() {
            return Err(Error::HorizonExceedsPrefix {
                needed,
                last: signal.last(),
            });
        }
        if self.max_component() >= signal.dim() {
            return Err(Error::ComponentOutOfRange {
                component: self.max_component() + 1,
                dimension: signal.dim(),
            });
        }
        Ok(())
    }

    fn rho(&self, s: &SignalView<'_>, t: usize) -> f64 {
        match self {
            StlFormula::Predicate(p) => p.relation().score(s.value(t, p.component), p.threshold),
            StlFormula::Not(f) => -f.rho(s, t),
            StlFormula::And(a, b) => a.rho(s, t).min(b.rho(s, t)),
            StlFormula::Or(a, b) => a.rho(s, t).max(b.rho(s, t)),
            StlFormula::Always(i, f) => (t + i.start..=t + i.end)
                .map(|tau| f.rho(s, tau))
                .fold(f64::INFINITY, f64::min),
            StlFormula::Eventually(i, f) => (t + i.start..=t + i.end)
                .map(|tau| f.rho(s, tau))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Robustness of `formula` on `signal` at time `t`.
///
/// Fails with [`Error::HorizonExceedsPrefix`] when `t + horizon` lies past the
/// last visible sample.
pub fn robustness(signal: &SignalView<'_>, formula: &StlFormula, t: usize) -> Result<f64> {
    formula.check(signal, t)?;
    Ok(formula.rho(signal, t))
}

/// Boolean satisfaction: robustness `>= 0`.
pub fn satisfies(signal: &SignalView<'_>, formula: &StlFormula, t: usize) -> Result<bool> {
    Ok(robustness(signal, formula, t)? >= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    Always,
    Eventually,
}

impl PrimitiveKind {
    /// Search order of the first-order primitive family.
    pub const ALL: [PrimitiveKind; 2] = [PrimitiveKind::Always, PrimitiveKind::Eventually];
}

/// A valuated first-order primitive `G[t0,t1](x_j ~ c)` or `F[t0,t1](x_j ~ c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PstlPrimitive {
    pub kind: PrimitiveKind,
    pub component: usize,
    pub relation: Relation,
    pub start: usize,
    pub end: usize,
    pub threshold: f64,
}

impl PstlPrimitive {
    pub fn horizon(&self) -> usize {
        self.end
    }

    pub fn to_formula(&self) -> StlFormula {
        let body =
            StlFormula::predicate(self.component, self.relation.comparison(), self.threshold);
        let interval = Interval {
            start: self.start.min(self.end),
            end: self.end.max(self.start),
        };
        match self.kind {
            PrimitiveKind::Always => StlFormula::Always(interval, Box::new(body)),
            PrimitiveKind::Eventually => StlFormula::Eventually(interval, Box::new(body)),
        }
    }

    /// Robustness at time 0 computed directly from the window extremum.
    pub fn robustness(&self, s: &SignalView<'_>) -> f64 {
        let window = (self.start..=self.end).map(|t| s.value(t, self.component));
        let extremum = match (self.kind, self.relation) {
            (PrimitiveKind::Always, Relation::Ge) | (PrimitiveKind::Eventually, Relation::Lt) => {
                window.fold(f64::INFINITY, f64::min)
            }
            _ => window.fold(f64::NEG_INFINITY, f64::max),
        };
        self.relation.score(extremum, self.threshold)
    }
}

/// Weighted conjunction of formulas whose weights vary over time.
///
/// Only the weighted-sum reading is supported: see [`crate::eval::Predictor`].
#[derive(Debug, Clone, PartialEq)]
pub struct WstlFormula {
    pub conjuncts: Vec<StlFormula>,
    pub weights: WeightMatrix,
}

impl WstlFormula {
    pub fn new(conjuncts: Vec<StlFormula>, weights: WeightMatrix) -> Result<WstlFormula> {
        if conjuncts.len() != weights.rows() {
            return Err(Error::DimensionMismatch {
                expected: conjuncts.len(),
                found: weights.rows(),
            });
        }
        Ok(WstlFormula { conjuncts, weights })
    }
}

impl fmt::Display for StlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StlFormula::Predicate(p) => write!(
                f,
                "x{} {} {}",
                p.component + 1,
                p.comparison.symbol(),
                p.threshold
            ),
            StlFormula::Not(a) => write!(f, "not ({a})"),
            StlFormula::And(a, b) => write!(f, "({a}) and ({b})"),
            StlFormula::Or(a, b) => write!(f, "({a}) or ({b})"),
            StlFormula::Always(i, a) => write!(f, "G[{},{}]({a})", i.start, i.end),
            StlFormula::Eventually(i, a) => write!(f, "F[{},{}]({a})", i.start, i.end),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Signal;

    fn constant(value: f64, len: usize, dim: usize) -> Signal {
        Signal::from_rows("c", &vec![vec![value; dim]; len]).unwrap()
    }

    #[test]
    fn always_on_constant_signal() {
        let s = constant(3.0, 8, 1);
        let phi = parse("G[2,5](x1 < 4)").unwrap();
        assert_eq!(robustness(&s.view(), &phi, 0).unwrap(), 1.0);
    }

    #[test]
    fn horizon_exceeding_prefix_is_an_error() {
        let s = constant(0.0, 20, 2);
        let phi = parse("F[3,10](x2 > 4)").unwrap();
        assert_eq!(phi.horizon(), 10);
        let prefix = s.prefix(7).unwrap();
        assert!(matches!(
            robustness(&prefix, &phi, 0),
            Err(Error::HorizonExceedsPrefix {
                needed: 10,
                last: 7
            })
        ));
        assert!(robustness(&s.prefix(10).unwrap(), &phi, 0).is_ok());
    }

    #[test]
    fn horizons() {
        assert_eq!(parse("G[2,5](x1 < 4)").unwrap().horizon(), 5);
        assert_eq!(parse("x1 >= 0").unwrap().horizon(), 0);
        assert_eq!(parse("F[15,18](x2 <= 33.83)").unwrap().horizon(), 18);
        assert_eq!(
            parse("G[1,2](F[0,3](x1 > 0)) or not (x1 < 2)")
                .unwrap()
                .horizon(),
            5
        );
    }

    #[test]
    fn negation_and_zero_robustness() {
        let s = Signal::from_rows("s", &[vec![2.0], vec![-1.5]]).unwrap();
        let phi = parse("F[0,1](x1 >= 2)").unwrap();
        let rho = robustness(&s.view(), &phi, 0).unwrap();
        assert_eq!(rho, 0.0);
        assert!(satisfies(&s.view(), &phi, 0).unwrap());
        assert_eq!(robustness(&s.view(), &phi.clone().not(), 0).unwrap(), -rho);
        let violated = parse("x1 >= 2.3").unwrap();
        assert!((robustness(&s.view(), &violated, 0).unwrap() + 0.3).abs() < 1e-12);
        assert!(!satisfies(&s.view(), &violated, 0).unwrap());
    }

    #[test]
    fn unknown_component() {
        let s = constant(0.0, 3, 2);
        assert!(matches!(
            robustness(&s.view(), &parse("x3 > 0").unwrap(), 0),
            Err(Error::ComponentOutOfRange { component: 3, .. })
        ));
    }

    #[test]
    fn primitive_fast_path_matches_general_semantics() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|t| vec![(t as f64 * 0.7).sin(), t as f64 - 4.0])
            .collect();
        let s = Signal::from_rows("s", &rows).unwrap();
        for kind in PrimitiveKind::ALL {
            for relation in Relation::ALL {
                for (start, end) in [(0, 0), (2, 7), (5, 11)] {
                    for component in 0..2 {
                        let p = PstlPrimitive {
                            kind,
                            component,
                            relation,
                            start,
                            end,
                            threshold: 0.25,
                        };
                        let general = robustness(&s.view(), &p.to_formula(), 0).unwrap();
                        assert_eq!(p.robustness(&s.view()), general);
                    }
                }
            }
        }
    }
}
