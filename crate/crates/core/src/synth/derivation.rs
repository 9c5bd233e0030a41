//! Derivations: the chain of rule applications behind a fact, in forward
//! (program evaluation) order. Chaining consecutive steps is the
//! transitivity rule; applying a rule to part of a context is congruence.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::engine::Database;
use super::intern::ExprTable;
use super::query::BoundReport;
use super::rules::{Expander, RuleApp, RuleSet};
use super::state::State;
use crate::contexts::{Bound, Ctx};
use crate::numerics::Expr;

/// One rule application `R(src, dst)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: RuleApp,
    pub src: Ctx,
    pub dst: Ctx,
}

/// A replayable proof of `R(start, goal)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    /// The program in commutative normal form (the goal expression).
    pub program: Expr,
    /// Free variables in first-occurrence order of the original program;
    /// the extracted lens takes its inputs in this order.
    pub vars: Vec<String>,
    pub start: Ctx,
    pub steps: Vec<Step>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DerivationError {
    #[error("context {0} mentions an expression that is not a subterm of the program")]
    Foreign(String),
    #[error("step {index}: {rule} does not derive {dst} from {src}")]
    Invalid {
        index: usize,
        rule: String,
        src: String,
        dst: String,
    },
    #[error("steps {0} and {1} do not chain")]
    Broken(usize, usize),
    #[error("the derivation does not end at the goal")]
    NotGoal,
    #[error("the derivation does not start from a tensor of the program's variables")]
    NotStart,
}

#[derive(Serialize)]
struct StepJson {
    rule: String,
    src: String,
    dst: String,
}

impl Derivation {
    /// The goal context `(e : (0, ℝ, 0))`.
    pub fn goal(&self) -> Ctx {
        let table = ExprTable::new(&self.program);
        State::goal(&table).to_ctx(&table)
    }

    /// Rule names in forward order.
    pub fn rule_names(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.rule.to_string()).collect()
    }

    /// Re-derives every step with the given rule set, checking that each
    /// step is an instance of its rule, that steps chain, and that the chain
    /// runs from a start context to the goal.
    pub fn replay(&self, rules: RuleSet, bound_cap: &Bound) -> Result<(), DerivationError> {
        let table = ExprTable::new(&self.program);
        let state = |c: &Ctx| State::from_ctx(c, &table).ok_or_else(|| DerivationError::Foreign(c.to_string()));
        let start = state(&self.start)?;
        if !start.is_start(&table) {
            return Err(DerivationError::NotStart);
        }
        let expander = Expander {
            table: &table,
            rules,
            cap: bound_cap,
        };
        let mut current = start;
        for (index, step) in self.steps.iter().enumerate() {
            let src = state(&step.src)?;
            if src != current {
                return Err(DerivationError::Broken(index.saturating_sub(1), index));
            }
            let dst = state(&step.dst)?;
            let ok = expander
                .predecessors(&dst)
                .into_iter()
                .any(|(app, s)| app == step.rule && s == src);
            if !ok {
                return Err(DerivationError::Invalid {
                    index,
                    rule: step.rule.to_string(),
                    src: step.src.to_string(),
                    dst: step.dst.to_string(),
                });
            }
            current = dst;
        }
        if current != State::goal(&table) {
            return Err(DerivationError::NotGoal);
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "program": self.program.to_string(),
            "vars": self.vars,
            "start": self.start.to_string(),
            "steps": self.steps.iter().map(|s| StepJson {
                rule: s.rule.to_string(),
                src: s.src.to_string(),
                dst: s.dst.to_string(),
            }).collect::<Vec<_>>(),
        })
    }
}

/// Textual proof format: one `(step rule (src Γ₁) (dst Γ₂))` per line.
impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(derivation {}", self.program)?;
        writeln!(f, "  (start {})", self.start)?;
        for s in &self.steps {
            writeln!(f, "  (step {} (src {}) (dst {}))", s.rule, s.src, s.dst)?;
        }
        write!(f, ")")
    }
}

/// The derivation of the fact behind `report`.
///
/// # Panics
/// If the report does not come from `db` (an internal inconsistency).
pub fn extract_derivation(db: &Database, report: &BoundReport) -> Derivation {
    let mut steps = Vec::new();
    let mut i = report.fact;
    while let Some((next, app)) = db.origin(i).via.clone() {
        steps.push(Step {
            rule: app,
            src: db.state(i).to_ctx(&db.table),
            dst: db.state(next).to_ctx(&db.table),
        });
        i = next;
    }
    assert_eq!(i, 0, "derivations end at the goal fact");
    Derivation {
        program: db.normal_program().clone(),
        vars: db.table.vars.clone(),
        start: db.state(report.fact).to_ctx(&db.table),
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::parse_expr;
    use crate::synth::{query, seed, EngineConfig};

    fn derive(s: &str) -> Derivation {
        let mut db = seed(&parse_expr(s).unwrap(), RuleSet::default()).unwrap();
        db.saturate(&EngineConfig::default());
        let reports = query(&db);
        extract_derivation(&db, &reports[0])
    }

    #[test]
    fn derivations_replay() {
        for p in [
            "(Add x (Mul x y))",
            "(Sqrt (Add (Mul a x) (Sqrt b)))",
            "(Mul (Add a b) (Add b a))",
        ] {
            let d = derive(p);
            d.replay(RuleSet::default(), &Bound::from_int(64)).unwrap();
        }
    }

    #[test]
    fn x_plus_xy_pipeline() {
        let d = derive("(Add x (Mul x y))");
        assert_eq!(d.rule_names(), vec!["dmul:0", "share_star:1", "add"]);
    }

    #[test]
    fn tampered_derivation_is_rejected() {
        let mut d = derive("(Add x (Mul x y))");
        d.steps[0].rule = "push:0->1".parse().unwrap();
        assert!(matches!(
            d.replay(RuleSet::default(), &Bound::from_int(64)),
            Err(DerivationError::Invalid { index: 0, .. })
        ));
        let mut d = derive("(Add x (Mul x y))");
        d.steps.pop();
        assert_eq!(
            d.replay(RuleSet::default(), &Bound::from_int(64)),
            Err(DerivationError::NotGoal)
        );
    }

    #[test]
    fn textual_form_lists_steps() {
        let d = derive("(Sqrt a)");
        let text = d.to_string();
        assert!(text.starts_with("(derivation (Sqrt a)"));
        assert!(text.contains("(step sqrt (src (Base 0 a 2)) (dst (Base 0 (Sqrt a) 0)))"));
    }
}
