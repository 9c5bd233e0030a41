//! Reading per-variable bounds off a saturated database.

use indexmap::IndexMap;
use serde::Serialize;

use super::engine::Database;
use crate::contexts::Bound;

/// One synthesized bound vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    /// Bound per variable (ε units), in first-occurrence order.
    pub bounds: IndexMap<String, Bound>,
    /// This report minimizes the maximum bound (ties broken by the sum and
    /// then lexicographically in variable order). Exactly one report of a
    /// nonempty result is flagged.
    pub smallest_max: bool,
    /// Index of the start fact in the database.
    #[serde(skip)]
    pub(crate) fact: usize,
}

impl BoundReport {
    pub fn max(&self) -> Bound {
        self.bounds.values().cloned().fold(Bound::zero(), Bound::max)
    }

    pub fn sum(&self) -> Bound {
        self.bounds.values().fold(Bound::zero(), |acc, b| &acc + b)
    }

    pub fn get(&self, var: &str) -> Option<&Bound> {
        self.bounds.get(var)
    }
}

fn dominates(a: &[Bound], b: &[Bound]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a != b
}

/// All Pareto-minimal bound vectors found for start contexts, sorted by
/// (maximum, sum, lexicographic) with the first flagged as smallest-max.
/// Among facts with identical bounds the earliest (shortest derivation)
/// is kept. An empty result means no lens was found.
pub fn query(db: &Database) -> Vec<BoundReport> {
    let mut found: IndexMap<Vec<Bound>, usize> = IndexMap::new();
    for (i, s) in db.states.keys().enumerate() {
        if s.is_start(&db.table) {
            found.entry(s.start_bounds(&db.table)).or_insert(i);
        }
    }
    let vectors: Vec<&Vec<Bound>> = found.keys().collect();
    let mut keep: Vec<(Vec<Bound>, usize)> = found
        .iter()
        .filter(|(v, _)| !vectors.iter().any(|w| dominates(w, v)))
        .map(|(v, &i)| (v.clone(), i))
        .collect();
    let key = |v: &Vec<Bound>| {
        let max = v.iter().cloned().fold(Bound::zero(), Bound::max);
        let sum = v.iter().fold(Bound::zero(), |acc, b| &acc + b);
        (max, sum, v.clone())
    };
    keep.sort_by_cached_key(|(v, _)| key(v));
    keep.into_iter()
        .enumerate()
        .map(|(k, (v, fact))| BoundReport {
            bounds: db.table.vars.iter().cloned().zip(v).collect(),
            smallest_max: k == 0,
            fact,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::parse_expr;
    use crate::synth::{seed, EngineConfig, RuleSet};

    fn run(s: &str) -> Vec<BoundReport> {
        let mut db = seed(&parse_expr(s).unwrap(), RuleSet::default()).unwrap();
        db.saturate(&EngineConfig::default());
        query(&db)
    }

    #[test]
    fn identity_program_has_zero_bound() {
        let r = run("a");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].bounds["a"], Bound::zero());
        assert!(r[0].smallest_max);
    }

    #[test]
    fn sum_of_squares() {
        let r = run("(Add (Mul a a) (Mul b b))");
        assert_eq!(r[0].bounds["a"], Bound::from_int(1));
        assert_eq!(r[0].bounds["b"], Bound::from_int(1));
    }

    #[test]
    fn pareto_filter_removes_dominated_vectors() {
        let r = run("(Sqrt (Add (Mul a x) (Sqrt b)))");
        for x in &r {
            for y in &r {
                let (vx, vy): (Vec<_>, Vec<_>) = (x.bounds.values().collect(), y.bounds.values().collect());
                assert!(!(vx.iter().zip(&vy).all(|(a, b)| a <= b) && vx != vy));
            }
        }
        assert_eq!(r.iter().filter(|x| x.smallest_max).count(), 1);
    }
}
