//! The backward rules of the relation `R(Γ₁, E, Γ₂)`.
//!
//! Each rule is read right-to-left: given a context `Γ₂` that reaches the
//! goal, it produces the contexts `Γ₁` from which one lens step leads to
//! `Γ₂`. Rules act on a single tree of the context; the congruence rule
//! (the rest of the context is carried along unchanged) and the
//! associativity/commutativity rewrites (contexts are canonical) are
//! implicit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::intern::{ExprTable, Id, Node};
use super::state::{IBase, ITree, State};
use crate::contexts::Bound;
use crate::numerics::OpKind;

/// A rule of the search, individually toggleable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `(x₁, x₂ : p+1) → (add x₁ x₂ : p)` on a standalone base.
    Add,
    /// Addition at the root of a tree: the root shift absorbs the rounding
    /// error and each dependent at scale `n` pays `n` to compensate.
    AddRoot,
    /// Addition inside a dependent base: `p+1`, scale unchanged.
    AddStar,
    /// `(x₁, x₂ : (p+1)/2) → (mul x₁ x₂ : p)` on a standalone base.
    Mul,
    /// `(x : 2p+2) → (sqrt x : p)` on a standalone base.
    Sqrt,
    /// Square root inside a dependent: scale `n` becomes `2n`, bound `2q+2`.
    SqrtStar,
    /// `dmul`: a dependent `mul r w` at scale `n` whose factor `r` is bound
    /// at the root comes from `w` at scale `n−1` with bound `q+1`.
    DMul,
    /// `π₂`: a standalone `mul r w` is the dependent of a fresh root `r`
    /// (bound 0) at some scale `n ≥ 1`.
    Proj2,
    /// Share product on tensors: a shared base splits into two bases with
    /// the same bound (at the root of a tree, the split-off part becomes
    /// independent).
    Share,
    /// Share product on push products at scale 1: part of a root becomes a
    /// dependent with bound 0.
    ShareStar,
    /// A shared dependent splits into two dependents with the same scale
    /// and bound.
    ShareDep,
    /// Push: a dependent's scale changes from `m` to `n` at cost
    /// `|m−n|·p_root`; scale 0 detaches it.
    Push,
    /// Experimental: `(x₁, x₂ : p+1) → (sub x₁ x₂ : p)`.
    Sub,
    /// Experimental: `(x₁ : p+1) ⊗ (x₂ : 0) → (div x₁ x₂ : p)`.
    Div,
}

impl Rule {
    pub const ALL: [Rule; 14] = [
        Rule::Add,
        Rule::AddRoot,
        Rule::AddStar,
        Rule::Mul,
        Rule::Sqrt,
        Rule::SqrtStar,
        Rule::DMul,
        Rule::Proj2,
        Rule::Share,
        Rule::ShareStar,
        Rule::ShareDep,
        Rule::Push,
        Rule::Sub,
        Rule::Div,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Add => "add",
            Rule::AddRoot => "add_root",
            Rule::AddStar => "add_star",
            Rule::Mul => "mul",
            Rule::Sqrt => "sqrt",
            Rule::SqrtStar => "sqrt_star",
            Rule::DMul => "dmul",
            Rule::Proj2 => "proj2",
            Rule::Share => "share",
            Rule::ShareStar => "share_star",
            Rule::ShareDep => "share_dep",
            Rule::Push => "push",
            Rule::Sub => "sub",
            Rule::Div => "div",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn is_experimental(self) -> bool {
        matches!(self, Rule::Sub | Rule::Div)
    }

    fn bit(self) -> u32 {
        1 << (self as u32)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown rule `{0}`")]
pub struct UnknownRule(pub String);

/// A set of enabled rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RuleSet(u32);

impl Default for RuleSet {
    /// Every rule except the experimental subtraction/division rules.
    fn default() -> Self {
        Rule::ALL.into_iter().filter(|r| !r.is_experimental()).collect()
    }
}

impl FromIterator<Rule> for RuleSet {
    fn from_iter<I: IntoIterator<Item = Rule>>(iter: I) -> Self {
        RuleSet(iter.into_iter().fold(0, |acc, r| acc | r.bit()))
    }
}

impl RuleSet {
    pub fn empty() -> RuleSet {
        RuleSet(0)
    }

    /// Default rules plus the experimental ones.
    pub fn with_experimental() -> RuleSet {
        Rule::ALL.into_iter().collect()
    }

    pub fn contains(self, r: Rule) -> bool {
        self.0 & r.bit() != 0
    }

    pub fn with(self, r: Rule) -> RuleSet {
        RuleSet(self.0 | r.bit())
    }

    pub fn without(self, r: Rule) -> RuleSet {
        RuleSet(self.0 & !r.bit())
    }

    pub fn iter(self) -> impl Iterator<Item = Rule> {
        Rule::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    /// Operators the rule set can synthesize.
    pub fn operators(self) -> Vec<OpKind> {
        let mut ops = vec![OpKind::Add, OpKind::Mul, OpKind::Sqrt];
        if self.contains(Rule::Sub) {
            ops.push(OpKind::Sub);
        }
        if self.contains(Rule::Div) {
            ops.push(OpKind::Div);
        }
        ops
    }
}

impl FromStr for RuleSet {
    type Err = UnknownRule;

    /// A comma-separated list. `default` and `all` name the default and the
    /// full (experimental) sets; `-name` removes a rule, `name` adds one.
    /// A list of plain names only enables exactly those rules.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
        let only_adds = items
            .iter()
            .all(|x| !x.starts_with('-') && *x != "default" && *x != "all");
        let mut set = if only_adds {
            RuleSet::empty()
        } else {
            RuleSet::default()
        };
        for item in items {
            match item {
                "default" => set = RuleSet::default(),
                "all" => set = RuleSet::with_experimental(),
                _ => {
                    let (remove, name) = match item.strip_prefix('-') {
                        Some(n) => (true, n),
                        None => (false, item),
                    };
                    let r = Rule::from_name(name).ok_or_else(|| UnknownRule(name.to_string()))?;
                    set = if remove { set.without(r) } else { set.with(r) };
                }
            }
        }
        Ok(set)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Rule::name).collect();
        f.write_str(&names.join(","))
    }
}

/// One rule application, with the scales it acted on where relevant.
/// Rendered as the name of the corresponding lens, e.g. `dmul:1`,
/// `push:1->2`, `share_star:1`, `mul(dup)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleApp {
    pub rule: Rule,
    /// Scale in the source context (dmul, push, proj2, sqrt_star).
    pub from: u32,
    /// Scale in the target context.
    pub to: u32,
    /// The operands were equal and share one value (duplication).
    pub dup: bool,
}

impl RuleApp {
    fn plain(rule: Rule, dup: bool) -> RuleApp {
        RuleApp {
            rule,
            from: 0,
            to: 0,
            dup,
        }
    }

    fn scaled(rule: Rule, from: u32, to: u32) -> RuleApp {
        RuleApp {
            rule,
            from,
            to,
            dup: false,
        }
    }
}

impl fmt::Display for RuleApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Rule::DMul => write!(f, "dmul:{}", self.from),
            Rule::Push => write!(f, "push:{}->{}", self.from, self.to),
            Rule::ShareStar => write!(f, "share_star:1"),
            Rule::Proj2 => write!(f, "proj2:{}", self.from),
            Rule::SqrtStar => write!(f, "sqrt_star:{}->{}", self.from, self.to),
            r if self.dup => write!(f, "{r}(dup)"),
            r => write!(f, "{r}"),
        }
    }
}

impl FromStr for RuleApp {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownRule(s.to_string());
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let (name, dup) = match name.strip_suffix("(dup)") {
            Some(n) => (n, true),
            None => (name, false),
        };
        let rule = Rule::from_name(name).ok_or_else(bad)?;
        let num = |x: &str| x.parse::<u32>().map_err(|_| bad());
        Ok(match (rule, rest) {
            (Rule::DMul, Some(n)) => RuleApp::scaled(rule, num(n)?, num(n)? + 1),
            (Rule::Proj2, Some(n)) => RuleApp::scaled(rule, num(n)?, 0),
            (Rule::ShareStar, Some("1")) => RuleApp::scaled(rule, 0, 1),
            (Rule::Push | Rule::SqrtStar, Some(r)) => {
                let (a, b) = r.split_once("->").ok_or_else(bad)?;
                RuleApp::scaled(rule, num(a)?, num(b)?)
            }
            (_, None) => RuleApp::plain(rule, dup),
            _ => return Err(bad()),
        })
    }
}

/// Nonempty proper subsets of `items`, as (chosen, rest). With `ordered ==
/// false` only one of each complementary pair is produced.
fn splits(items: &[Id], ordered: bool) -> Vec<(Vec<Id>, Vec<Id>)> {
    let n = items.len();
    if !(2..=16).contains(&n) {
        return vec![];
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) - 1 {
        if !ordered && mask & 1 == 0 {
            continue;
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, &e) in items.iter().enumerate() {
            if mask >> i & 1 == 1 {
                a.push(e);
            } else {
                b.push(e);
            }
        }
        out.push((a, b));
    }
    out
}

/// Context for generating predecessors of one state.
pub(crate) struct Expander<'a> {
    pub table: &'a ExprTable,
    pub rules: RuleSet,
    pub cap: &'a Bound,
}

impl Expander<'_> {
    /// All `(rule, Γ₁)` with a one-step lens `Γ₁ → s`.
    pub fn predecessors(&self, s: &State) -> Vec<(RuleApp, State)> {
        let mut out = Vec::new();
        let present = s.present(self.table.len());
        for (ti, tree) in s.trees.iter().enumerate() {
            let mut emit = |app: RuleApp, replacement: Vec<ITree>| {
                if replacement.iter().flat_map(|t| t.bases()).any(|b| &b.bound > self.cap) {
                    return;
                }
                let mut trees = Vec::with_capacity(s.trees.len() + 1);
                trees.extend(s.trees[..ti].iter().cloned());
                trees.extend(replacement);
                trees.extend(s.trees[ti + 1..].iter().cloned());
                out.push((app, State::normalize(trees)));
            };
            let fresh = |ids: &[Id]| ids.iter().all(|&i| !present.contains(i as usize));
            if tree.deps.is_empty() {
                self.standalone(s, ti, &tree.root, &fresh, &mut emit);
            } else {
                self.rooted(tree, &fresh, &mut emit);
            }
        }
        out
    }

    /// Whether `r` occurs in any tree other than `ti`.
    fn occurs_elsewhere(&self, s: &State, ti: usize, r: Id) -> bool {
        s.trees
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ti)
            .flat_map(|(_, t)| t.bases())
            .flat_map(|b| b.exprs.iter())
            .any(|&e| self.table.occurs_in(r, e))
    }

    fn related(&self, a: &[Id], b: &[Id]) -> bool {
        a.iter().any(|&x| b.iter().any(|&y| self.table.share_var(x, y)))
    }

    fn standalone(
        &self,
        s: &State,
        ti: usize,
        base: &IBase,
        fresh: &dyn Fn(&[Id]) -> bool,
        emit: &mut dyn FnMut(RuleApp, Vec<ITree>),
    ) {
        let p = &base.bound;
        let leaf = |exprs: Vec<Id>, bound: Bound| ITree::leaf(IBase::new(0, exprs, bound));
        if base.exprs.len() > 1 {
            if self.rules.contains(Rule::Share) {
                for (a, b) in splits(&base.exprs, false) {
                    emit(
                        RuleApp::plain(Rule::Share, false),
                        vec![leaf(a, p.clone()), leaf(b, p.clone())],
                    );
                }
            }
            if self.rules.contains(Rule::ShareStar) {
                for (r, d) in splits(&base.exprs, true) {
                    if self.related(&r, &d) {
                        let tree = ITree {
                            root: IBase::new(0, r, p.clone()),
                            deps: vec![IBase::new(1, d, Bound::zero())],
                        };
                        emit(RuleApp::scaled(Rule::ShareStar, 0, 1), vec![tree]);
                    }
                }
            }
            return;
        }
        let e = base.exprs[0];
        match self.table.node(e) {
            Node::Var => {}
            Node::Unary(OpKind::Sqrt, u) => {
                if self.rules.contains(Rule::Sqrt) && fresh(&[u]) {
                    emit(
                        RuleApp::plain(Rule::Sqrt, false),
                        vec![leaf(vec![u], p.scale(2).succ().succ())],
                    );
                }
            }
            Node::Unary(..) => {}
            Node::Binary(op, u, v) => {
                let dup = u == v;
                match op {
                    OpKind::Add | OpKind::Sub => {
                        let rule = if op == OpKind::Add { Rule::Add } else { Rule::Sub };
                        if self.rules.contains(rule) && fresh(&[u, v]) && !(dup && op == OpKind::Sub) {
                            emit(RuleApp::plain(rule, dup), vec![leaf(vec![u, v], p.succ())]);
                        }
                    }
                    OpKind::Mul => {
                        if self.rules.contains(Rule::Mul) && fresh(&[u, v]) {
                            emit(RuleApp::plain(Rule::Mul, dup), vec![leaf(vec![u, v], p.succ().half())]);
                        }
                        if self.rules.contains(Rule::Proj2) && !dup {
                            for (r, w) in [(u, v), (v, u)] {
                                if !fresh(&[r]) || self.occurs_elsewhere(s, ti, r) {
                                    continue;
                                }
                                let top = 1 + self.table.max_scale[w as usize];
                                for n in 1..=top {
                                    let tree = ITree {
                                        root: IBase::new(0, vec![r], Bound::zero()),
                                        deps: vec![IBase::new(n, vec![e], p.clone())],
                                    };
                                    emit(RuleApp::scaled(Rule::Proj2, n, 0), vec![tree]);
                                }
                            }
                        }
                    }
                    OpKind::Div if self.rules.contains(Rule::Div) && !dup && fresh(&[u, v]) => {
                        emit(
                            RuleApp::plain(Rule::Div, false),
                            vec![leaf(vec![u], p.succ()), leaf(vec![v], Bound::zero())],
                        );
                    }
                    _ => {}
                }
            }
        }
    }

    fn rooted(&self, tree: &ITree, fresh: &dyn Fn(&[Id]) -> bool, emit: &mut dyn FnMut(RuleApp, Vec<ITree>)) {
        let root = &tree.root;
        let p = &root.bound;
        // Rules at the root.
        if root.exprs.len() > 1 {
            if self.rules.contains(Rule::Share) {
                for (keep, off) in splits(&root.exprs, true) {
                    let t = ITree {
                        root: IBase::new(0, keep, p.clone()),
                        deps: tree.deps.clone(),
                    };
                    emit(
                        RuleApp::plain(Rule::Share, false),
                        vec![t, ITree::leaf(IBase::new(0, off, p.clone()))],
                    );
                }
            }
            if self.rules.contains(Rule::ShareStar) {
                for (r, d) in splits(&root.exprs, true) {
                    if self.related(&r, &d) {
                        let mut deps = tree.deps.clone();
                        deps.push(IBase::new(1, d, Bound::zero()));
                        emit(
                            RuleApp::scaled(Rule::ShareStar, 0, 1),
                            vec![ITree {
                                root: IBase::new(0, r, p.clone()),
                                deps,
                            }],
                        );
                    }
                }
            }
        } else if let Node::Binary(OpKind::Add, u, v) = self.table.node(root.exprs[0]) {
            if self.rules.contains(Rule::AddRoot) && fresh(&[u, v]) {
                let deps = tree
                    .deps
                    .iter()
                    .map(|d| IBase {
                        bound: &d.bound + &Bound::from_int(d.scale as u64),
                        ..d.clone()
                    })
                    .collect();
                emit(
                    RuleApp::plain(Rule::AddRoot, u == v),
                    vec![ITree {
                        root: IBase::new(0, vec![u, v], p.succ()),
                        deps,
                    }],
                );
            }
        }
        // Rules at a dependent.
        for (di, dep) in tree.deps.iter().enumerate() {
            let with_dep = |replacement: Vec<IBase>| {
                let mut deps = tree.deps.clone();
                deps.splice(di..di + 1, replacement);
                vec![ITree {
                    root: root.clone(),
                    deps,
                }]
            };
            let (n, q) = (dep.scale, &dep.bound);
            if dep.exprs.len() > 1 {
                if self.rules.contains(Rule::ShareDep) {
                    for (a, b) in splits(&dep.exprs, false) {
                        emit(
                            RuleApp::plain(Rule::ShareDep, false),
                            with_dep(vec![IBase::new(n, a, q.clone()), IBase::new(n, b, q.clone())]),
                        );
                    }
                }
                continue;
            }
            let d = dep.exprs[0];
            match self.table.node(d) {
                Node::Binary(OpKind::Add, u, v) => {
                    if self.rules.contains(Rule::AddStar) && fresh(&[u, v]) {
                        emit(
                            RuleApp::plain(Rule::AddStar, u == v),
                            with_dep(vec![IBase::new(n, vec![u, v], q.succ())]),
                        );
                    }
                }
                Node::Unary(OpKind::Sqrt, u) => {
                    if self.rules.contains(Rule::SqrtStar) && fresh(&[u]) {
                        emit(
                            RuleApp::scaled(Rule::SqrtStar, 2 * n, n),
                            with_dep(vec![IBase::new(2 * n, vec![u], q.scale(2).succ().succ())]),
                        );
                    }
                }
                Node::Binary(OpKind::Mul, u, v) if u != v && self.rules.contains(Rule::DMul) => {
                    for (r, w) in [(u, v), (v, u)] {
                        if root.exprs.contains(&r) && fresh(&[w]) {
                            emit(
                                RuleApp::scaled(Rule::DMul, n - 1, n),
                                with_dep(vec![IBase::new(n - 1, vec![w], q.succ())]),
                            );
                        }
                    }
                }
                _ => {}
            }
            if self.rules.contains(Rule::Push) {
                let top = self.table.max_scale[d as usize].max(1);
                for m in 0..=top {
                    if m == n {
                        continue;
                    }
                    let cost = p.scale(m.abs_diff(n) as u64);
                    emit(
                        RuleApp::scaled(Rule::Push, m, n),
                        with_dep(vec![IBase::new(m, vec![d], q + &cost)]),
                    );
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::parse_expr;

    fn expand(program: &str, rules: RuleSet) -> (ExprTable, Vec<(RuleApp, State)>) {
        let table = ExprTable::new(&parse_expr(program).unwrap());
        let cap = Bound::from_int(64);
        let preds = Expander {
            table: &table,
            rules,
            cap: &cap,
        }
        .predecessors(&State::goal(&table));
        (table, preds)
    }

    #[test]
    fn sqrt_goal_predecessor_has_bound_two() {
        let (table, preds) = expand("(Sqrt (Add a b))", RuleSet::default());
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].1.to_ctx(&table).to_string(), "(Base 0 (Add a b) 2)");
    }

    #[test]
    fn mul_goal_has_half_bound_predecessor() {
        let (table, preds) = expand("(Mul a b)", RuleSet::default().without(Rule::Proj2));
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].1.to_ctx(&table).to_string(), "(Base 0 (Vars a b) 1/2)");
    }

    #[test]
    fn squares_collapse_by_duplication() {
        let (table, preds) = expand("(Mul a a)", RuleSet::default());
        assert_eq!(preds.len(), 1);
        assert!(preds[0].0.dup);
        assert_eq!(preds[0].1.to_ctx(&table).to_string(), "(Base 0 a 1/2)");
    }

    #[test]
    fn rule_names_round_trip() {
        for s in [
            "add",
            "mul(dup)",
            "dmul:2",
            "push:1->0",
            "share_star:1",
            "proj2:2",
            "sqrt_star:2->1",
            "share_dep",
        ] {
            let app: RuleApp = s.parse().unwrap();
            assert_eq!(app.to_string(), s);
        }
        assert!("frobnicate".parse::<RuleApp>().is_err());
    }

    #[test]
    fn rule_set_parsing() {
        assert_eq!("default".parse::<RuleSet>().unwrap(), RuleSet::default());
        let s: RuleSet = "add,mul".parse().unwrap();
        assert!(s.contains(Rule::Add) && s.contains(Rule::Mul) && !s.contains(Rule::Push));
        let s: RuleSet = "-push".parse().unwrap();
        assert!(!s.contains(Rule::Push) && s.contains(Rule::DMul));
        let s: RuleSet = "default,sub,div".parse().unwrap();
        assert!(s.contains(Rule::Sub) && s.contains(Rule::Div));
        assert!("add,nope".parse::<RuleSet>().is_err());
    }
}
