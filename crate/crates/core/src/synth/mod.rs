//! Saturation-based synthesis of backward error lenses.
//!
//! The engine works backwards from the goal `(e : (0, ℝ, 0))`, applying the
//! inverse of each typing rule to enumerate contexts that reach it. Start
//! contexts (a tensor of one base per free variable) yield per-variable
//! bound vectors; each comes with a replayable derivation that compiles
//! to a composite lens.

mod derivation;
mod engine;
mod extract;
mod intern;
mod query;
mod rules;
mod state;

pub use derivation::{extract_derivation, Derivation, DerivationError, Step};
pub use engine::{seed, Database, EngineConfig, EngineError, Fact, Stats};
pub use extract::{derivation_to_lens, ExtractError};
pub use intern::commutative_normal_form;
pub use query::{query, BoundReport};
pub use rules::{Rule, RuleApp, RuleSet, UnknownRule};

use crate::numerics::Expr;

/// Seeds, saturates and queries in one call.
pub fn analyze(e: &Expr, cfg: &EngineConfig) -> Result<(Database, Vec<BoundReport>), EngineError> {
    let mut db = seed(e, cfg.rules)?;
    db.saturate(cfg);
    let reports = query(&db);
    Ok((db, reports))
}
