//! Canonical contexts over interned expression ids: the search states of
//! the engine.

use super::intern::{Bits, ExprTable, Id};
use crate::contexts::{Bound, Ctx, CtxBase, CtxTree};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct IBase {
    pub scale: u32,
    pub exprs: Vec<Id>,
    pub bound: Bound,
}

impl IBase {
    pub fn new(scale: u32, mut exprs: Vec<Id>, bound: Bound) -> IBase {
        exprs.sort_unstable();
        exprs.dedup();
        IBase { scale, exprs, bound }
    }

    pub fn first(&self) -> Id {
        self.exprs[0]
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct ITree {
    pub root: IBase,
    pub deps: Vec<IBase>,
}

impl ITree {
    pub fn leaf(root: IBase) -> ITree {
        ITree { root, deps: vec![] }
    }

    pub fn bases(&self) -> impl Iterator<Item = &IBase> {
        std::iter::once(&self.root).chain(self.deps.iter())
    }
}

/// A canonical context: root scales are 0, every dependent has a positive
/// scale, and expressions, dependents and trees are sorted by id.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct State {
    pub trees: Vec<ITree>,
}

impl State {
    pub fn normalize(trees: Vec<ITree>) -> State {
        let mut out = Vec::with_capacity(trees.len() + 1);
        for t in trees {
            let mut root = t.root;
            root.scale = 0;
            let mut deps = Vec::with_capacity(t.deps.len());
            for d in t.deps {
                if d.scale == 0 {
                    out.push(ITree::leaf(d));
                } else {
                    deps.push(d);
                }
            }
            deps.sort_unstable_by_key(|d| d.first());
            out.push(ITree { root, deps });
        }
        out.sort_unstable_by_key(|t| t.root.first());
        State { trees: out }
    }

    pub fn goal(table: &ExprTable) -> State {
        State {
            trees: vec![ITree::leaf(IBase::new(0, vec![table.goal_id], Bound::zero()))],
        }
    }

    pub fn present(&self, n: usize) -> Bits {
        let mut b = Bits::new(n);
        for t in &self.trees {
            for base in t.bases() {
                for &e in &base.exprs {
                    b.insert(e as usize);
                }
            }
        }
        b
    }

    /// A tensor of single-variable bases covering every free variable.
    pub fn is_start(&self, table: &ExprTable) -> bool {
        self.trees.len() == table.vars.len()
            && self
                .trees
                .iter()
                .all(|t| t.deps.is_empty() && t.root.exprs.len() == 1 && table.is_var(t.root.exprs[0]))
    }

    /// Bounds of a start state in first-occurrence variable order.
    pub fn start_bounds(&self, table: &ExprTable) -> Vec<Bound> {
        let mut out = vec![Bound::zero(); table.vars.len()];
        for t in &self.trees {
            let k = table.var_index(t.root.exprs[0]).expect("start states bind variables");
            out[k] = t.root.bound.clone();
        }
        out
    }

    pub fn to_ctx(&self, table: &ExprTable) -> Ctx {
        let base = |b: &IBase| CtxBase {
            scale: b.scale,
            exprs: b.exprs.iter().map(|&i| table.expr(i).clone()).collect(),
            bound: b.bound.clone(),
        };
        Ctx {
            trees: self
                .trees
                .iter()
                .map(|t| CtxTree {
                    root: base(&t.root),
                    deps: t.deps.iter().map(base).collect(),
                })
                .collect(),
        }
    }

    /// The state of a context whose expressions are all subterms of the
    /// program (in commutative normal form).
    pub fn from_ctx(ctx: &Ctx, table: &ExprTable) -> Option<State> {
        ctx.check_wf().ok()?;
        let base = |b: &CtxBase| -> Option<IBase> {
            let ids = b.exprs.iter().map(|e| table.id_of(e)).collect::<Option<Vec<_>>>()?;
            Some(IBase::new(b.scale, ids, b.bound.clone()))
        };
        let trees = ctx
            .trees
            .iter()
            .map(|t| {
                Some(ITree {
                    root: base(&t.root)?,
                    deps: t.deps.iter().map(base).collect::<Option<Vec<_>>>()?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(State::normalize(trees))
    }
}
