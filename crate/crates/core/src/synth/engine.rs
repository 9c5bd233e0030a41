//! The fact database and its saturation.
//!
//! Facts are `R(Γ, goal)`: context `Γ` reaches the goal context
//! `(e : (0, ℝ, 0))` through a chain of rule applications. Each fact keeps
//! the rule application and the fact it was derived from, so transitivity
//! is implicit and every fact has a derivation. Saturation is semi-naive:
//! each round only expands the facts discovered in the previous round.
//! Successors of a round are computed in parallel and merged in a fixed
//! order, so results do not depend on scheduling.

use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::intern::ExprTable;
use super::rules::{Expander, RuleApp, RuleSet};
use super::state::State;
use crate::contexts::{Bound, Ctx};
use crate::numerics::{Expr, OpKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("operator {op} is not supported by the enabled synthesis rules")]
    UnsupportedOperator { op: OpKind },
}

/// Resource limits and rule selection.
#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Maximum number of saturation rounds.
    pub max_iterations: usize,
    /// Maximum number of facts in the database.
    pub max_facts: usize,
    pub rules: RuleSet,
    /// No generated context carries a bound above this (ε units).
    pub bound_cap: Bound,
    /// Wall-clock limit for one `saturate` call.
    pub timeout: Option<Duration>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_iterations: 1_000_000,
            max_facts: 1_000_000,
            rules: RuleSet::default(),
            bound_cap: Bound::from_int(64),
            timeout: None,
        }
    }
}

/// Database statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub facts: usize,
    pub iterations: usize,
    /// No rule can derive a new fact.
    pub saturated: bool,
}

/// A derived fact `R(src, dst)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub src: Ctx,
    pub dst: Ctx,
}

#[derive(Clone, Debug)]
pub(crate) struct Origin {
    /// The fact this one was derived from (one rule step closer to the
    /// goal), with the rule applied; `None` for the goal itself.
    pub via: Option<(usize, RuleApp)>,
}

/// The facts derived for one program.
#[derive(Debug)]
pub struct Database {
    program: Expr,
    pub(crate) table: ExprTable,
    pub(crate) states: IndexMap<State, Origin>,
    frontier: Vec<usize>,
    iterations: usize,
    rules: RuleSet,
}

/// Starts a database for `e` containing only the goal `(e : (0, ℝ, 0))`.
pub fn seed(e: &Expr, rules: RuleSet) -> Result<Database, EngineError> {
    if let Some(op) = e.first_op_outside(&rules.operators()) {
        return Err(EngineError::UnsupportedOperator { op });
    }
    let table = ExprTable::new(e);
    let mut states = IndexMap::new();
    states.insert(State::goal(&table), Origin { via: None });
    Ok(Database {
        program: e.clone(),
        table,
        states,
        frontier: vec![0],
        iterations: 0,
        rules,
    })
}

impl Database {
    /// The program as given.
    pub fn program(&self) -> &Expr {
        &self.program
    }

    /// The program with commutative operands ordered; contexts refer to its
    /// subterms.
    pub fn normal_program(&self) -> &Expr {
        &self.table.goal
    }

    /// Free variables in first-occurrence order of the original program.
    pub fn vars(&self) -> &[String] {
        &self.table.vars
    }

    pub fn goal(&self) -> Ctx {
        State::goal(&self.table).to_ctx(&self.table)
    }

    pub fn rules(&self) -> RuleSet {
        self.rules
    }

    pub fn stats(&self) -> Stats {
        Stats {
            facts: self.states.len(),
            iterations: self.iterations,
            saturated: self.frontier.is_empty(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Whether `R(Γ, goal)` is known, for `Γ` up to the symmetric monoidal
    /// rewrites and commutativity of the expressions.
    pub fn contains(&self, ctx: &Ctx) -> bool {
        let normal = normalize_ctx(ctx);
        State::from_ctx(&normal, &self.table).is_some_and(|s| self.states.contains_key(&s))
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        let dst = self.goal();
        self.states.keys().map(move |s| Fact {
            src: s.to_ctx(&self.table),
            dst: dst.clone(),
        })
    }

    /// Applies the rules until no new fact appears or a limit is reached.
    /// Rerunning on a saturated database does nothing; rerunning after a
    /// limit continues where the previous call stopped.
    pub fn saturate(&mut self, cfg: &EngineConfig) -> Stats {
        let start = Instant::now();
        let expander = Expander {
            table: &self.table,
            rules: cfg.rules,
            cap: &cfg.bound_cap,
        };
        let mut rounds = 0;
        while !self.frontier.is_empty() && rounds < cfg.max_iterations && self.states.len() < cfg.max_facts {
            if cfg.timeout.is_some_and(|t| start.elapsed() >= t) {
                break;
            }
            let frontier = std::mem::take(&mut self.frontier);
            let expanded: Vec<Vec<(RuleApp, State)>> = frontier
                .par_iter()
                .map(|&i| {
                    let (s, _) = self.states.get_index(i).expect("frontier index");
                    expander.predecessors(s)
                })
                .collect();
            let mut next = Vec::new();
            let mut stopped_at = None;
            for (k, (&parent, preds)) in frontier.iter().zip(expanded).enumerate() {
                if self.states.len() >= cfg.max_facts {
                    stopped_at = Some(k);
                    break;
                }
                for (app, s) in preds {
                    if !self.states.contains_key(&s) {
                        let (idx, _) = self.states.insert_full(
                            s,
                            Origin {
                                via: Some((parent, app)),
                            },
                        );
                        next.push(idx);
                    }
                }
            }
            if let Some(k) = stopped_at {
                // Keep the unexpanded part of the round for a later call.
                let mut rest = frontier[k..].to_vec();
                rest.extend(next);
                self.frontier = rest;
            } else {
                self.frontier = next;
            }
            rounds += 1;
            self.iterations += 1;
        }
        self.stats()
    }

    pub(crate) fn origin(&self, i: usize) -> &Origin {
        &self.states[i]
    }

    pub(crate) fn state(&self, i: usize) -> &State {
        self.states.get_index(i).expect("fact index").0
    }
}

/// Puts every expression of a context into commutative normal form.
pub(crate) fn normalize_ctx(ctx: &Ctx) -> Ctx {
    use super::intern::commutative_normal_form;
    let mut out = ctx.clone();
    for t in out.trees.iter_mut() {
        for e in t.root.exprs.iter_mut() {
            *e = commutative_normal_form(e);
        }
        for d in t.deps.iter_mut() {
            for e in d.exprs.iter_mut() {
                *e = commutative_normal_form(e);
            }
        }
    }
    out
}
