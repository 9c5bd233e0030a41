//! Interning of the subterms of the analysed program.
//!
//! Every expression that can appear in a context during backward search is
//! a subterm of the goal (after ordering the operands of the commutative
//! operators), so contexts are stored as small integer ids. Ids are
//! assigned in the order of the expressions' serialization, which makes
//! sorting by id agree with the canonical order of [`crate::contexts`].

use std::collections::HashMap;

use crate::numerics::{free_vars, Expr, OpKind};

pub(crate) type Id = u32;

/// Orders the operands of `Add` and `Mul` by their serialization,
/// bottom-up. Floating-point addition and multiplication are commutative,
/// so both semantics of the expression are unchanged.
pub fn commutative_normal_form(e: &Expr) -> Expr {
    match e {
        Expr::Var(_) => e.clone(),
        Expr::Sqrt(a) => Expr::sqrt(commutative_normal_form(a)),
        Expr::Add(a, b) | Expr::Mul(a, b) => {
            let (a, b) = (commutative_normal_form(a), commutative_normal_form(b));
            let (l, r) = if a.key() <= b.key() { (a, b) } else { (b, a) };
            Expr::binary(e.op().expect("binary"), l, r)
        }
        Expr::Sub(a, b) => Expr::sub(commutative_normal_form(a), commutative_normal_form(b)),
        Expr::Div(a, b) => Expr::div(commutative_normal_form(a), commutative_normal_form(b)),
    }
}

/// A small fixed-size bit set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub fn new(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    pub fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    Var,
    Unary(OpKind, Id),
    Binary(OpKind, Id, Id),
}

/// The interned subterms of one program.
#[derive(Debug)]
pub(crate) struct ExprTable {
    /// The program in commutative normal form.
    pub goal: Expr,
    pub goal_id: Id,
    pub exprs: Vec<Expr>,
    pub nodes: Vec<Node>,
    index: HashMap<Expr, Id>,
    /// Free variables of each subterm (bits index `vars`).
    pub var_bits: Vec<Bits>,
    /// Subterms of each subterm, itself included (bits index ids).
    pub sub_bits: Vec<Bits>,
    /// Largest push scale worth considering for a dependent holding the
    /// subterm: each multiplication can consume one unit of scale through
    /// `dmul`, a square root halves the demand.
    pub max_scale: Vec<u32>,
    /// Free variables of the goal in first-occurrence order.
    pub vars: Vec<String>,
}

impl ExprTable {
    pub fn new(program: &Expr) -> ExprTable {
        let goal = commutative_normal_form(program);
        let mut all: Vec<Expr> = Vec::new();
        fn collect(e: &Expr, out: &mut Vec<Expr>) {
            for c in e.children() {
                collect(c, out);
            }
            out.push(e.clone());
        }
        collect(&goal, &mut all);
        let mut keyed: Vec<(String, Expr)> = all.into_iter().map(|e| (e.key(), e)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        let exprs: Vec<Expr> = keyed.into_iter().map(|(_, e)| e).collect();
        let index: HashMap<Expr, Id> = exprs.iter().enumerate().map(|(i, e)| (e.clone(), i as Id)).collect();
        let vars = free_vars(program);
        let n = exprs.len();
        let mut nodes = Vec::with_capacity(n);
        for e in &exprs {
            let id = |c: &Expr| index[c];
            nodes.push(match e {
                Expr::Var(_) => Node::Var,
                Expr::Sqrt(a) => Node::Unary(OpKind::Sqrt, id(a)),
                Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Sub(a, b) | Expr::Div(a, b) => {
                    Node::Binary(e.op().expect("binary"), id(a), id(b))
                }
            });
        }
        // Children always serialize before their parents' closing
        // parenthesis but not necessarily earlier in key order, so compute
        // the derived tables by recursion with memoization.
        let mut table = ExprTable {
            goal_id: index[&goal],
            goal,
            exprs,
            nodes,
            index,
            var_bits: vec![Bits::default(); n],
            sub_bits: vec![Bits::default(); n],
            max_scale: vec![0; n],
            vars,
        };
        let mut done = vec![false; n];
        for i in 0..n {
            table.fill(i as Id, &mut done);
        }
        table
    }

    fn fill(&mut self, i: Id, done: &mut [bool]) {
        let u = i as usize;
        if done[u] {
            return;
        }
        let n = self.exprs.len();
        let mut vb = Bits::new(self.vars.len());
        let mut sb = Bits::new(n);
        sb.insert(u);
        let scale = match self.nodes[u] {
            Node::Var => {
                let name = self.exprs[u].as_var().expect("variable");
                let k = self.vars.iter().position(|v| v == name).expect("free variable");
                vb.insert(k);
                0
            }
            Node::Unary(_, a) => {
                self.fill(a, done);
                vb.union_with(&self.var_bits[a as usize]);
                sb.union_with(&self.sub_bits[a as usize]);
                self.max_scale[a as usize].div_ceil(2)
            }
            Node::Binary(op, a, b) => {
                self.fill(a, done);
                self.fill(b, done);
                for c in [a, b] {
                    vb.union_with(&self.var_bits[c as usize]);
                    sb.union_with(&self.sub_bits[c as usize]);
                }
                let m = self.max_scale[a as usize].max(self.max_scale[b as usize]);
                if op == OpKind::Mul {
                    m + 1
                } else {
                    m
                }
            }
        };
        self.var_bits[u] = vb;
        self.sub_bits[u] = sb;
        self.max_scale[u] = scale;
        done[u] = true;
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn id_of(&self, e: &Expr) -> Option<Id> {
        self.index.get(e).copied()
    }

    pub fn expr(&self, id: Id) -> &Expr {
        &self.exprs[id as usize]
    }

    pub fn node(&self, id: Id) -> Node {
        self.nodes[id as usize]
    }

    pub fn is_var(&self, id: Id) -> bool {
        matches!(self.nodes[id as usize], Node::Var)
    }

    /// Whether `inner` occurs as a subterm of `outer` (or equals it).
    pub fn occurs_in(&self, inner: Id, outer: Id) -> bool {
        self.sub_bits[outer as usize].contains(inner as usize)
    }

    pub fn share_var(&self, a: Id, b: Id) -> bool {
        self.var_bits[a as usize].intersects(&self.var_bits[b as usize])
    }

    /// Index of a variable in first-occurrence order.
    pub fn var_index(&self, id: Id) -> Option<usize> {
        let name = self.exprs[id as usize].as_var()?;
        self.vars.iter().position(|v| v == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::parse_expr;

    #[test]
    fn normal_form_identifies_commuted_operands() {
        let e = parse_expr("(Mul (Add a b) (Add b a))").unwrap();
        let t = ExprTable::new(&e);
        assert_eq!(t.goal.to_string(), "(Mul (Add a b) (Add a b))");
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn ids_follow_serialization_order() {
        let t = ExprTable::new(&parse_expr("(Add x (Mul a x))").unwrap());
        let keys: Vec<String> = t.exprs.iter().map(|e| e.key()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn scale_demand_counts_multiplications() {
        let t = ExprTable::new(&parse_expr("(Mul (Mul b x) x)").unwrap());
        assert_eq!(t.max_scale[t.goal_id as usize], 2);
        let t = ExprTable::new(&parse_expr("(Sqrt (Mul a b))").unwrap());
        assert_eq!(t.max_scale[t.goal_id as usize], 1);
        let t = ExprTable::new(&parse_expr("(Add a b)").unwrap());
        assert_eq!(t.max_scale[t.goal_id as usize], 0);
    }

    #[test]
    fn subterm_and_variable_relations() {
        let t = ExprTable::new(&parse_expr("(Add x (Mul a x))").unwrap());
        let x = t.id_of(&Expr::var("x")).unwrap();
        let a = t.id_of(&Expr::var("a")).unwrap();
        let ax = t.id_of(&parse_expr("(Mul a x)").unwrap()).unwrap();
        assert!(t.occurs_in(x, ax) && t.occurs_in(ax, ax) && !t.occurs_in(ax, x));
        assert!(t.share_var(x, ax) && !t.share_var(x, a));
        assert_eq!(t.var_index(a), Some(1));
    }
}
