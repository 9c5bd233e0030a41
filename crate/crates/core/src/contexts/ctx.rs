//! Syntactic contexts: a tensor of star-trees (height ≤ 1) of bases that
//! bind expressions, each base carrying a scale and a bound.
//!
//! Contexts store the expressions a base stands for in place of fresh
//! variables, so relating a context to its successor never needs explicit
//! substitution.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::bound::Bound;
use crate::lenses::{push_product, Hom, ShelObject};
use crate::numerics::{free_vars, Expr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CtxError {
    #[error("a base must bind at least one expression")]
    EmptyBase,
    #[error("expression {0} occurs more than once in the context")]
    Duplicate(String),
}

/// `(e₁, …, eₙ : (i, ℝⁿ, p))`: expressions sharing one shift, pushed at
/// scale `i` when used as a dependent (the scale is ignored at roots).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CtxBase {
    pub scale: u32,
    pub exprs: Vec<Expr>,
    pub bound: Bound,
}

impl CtxBase {
    pub fn new(scale: u32, exprs: Vec<Expr>, bound: Bound) -> Result<CtxBase, CtxError> {
        if exprs.is_empty() {
            return Err(CtxError::EmptyBase);
        }
        let b = CtxBase { scale, exprs, bound };
        b.check_distinct(&mut HashSet::new())?;
        Ok(b)
    }

    /// A single-expression base.
    pub fn single(scale: u32, e: Expr, bound: Bound) -> CtxBase {
        CtxBase {
            scale,
            exprs: vec![e],
            bound,
        }
    }

    fn check_distinct<'a>(&'a self, seen: &mut HashSet<&'a Expr>) -> Result<(), CtxError> {
        if self.exprs.is_empty() {
            return Err(CtxError::EmptyBase);
        }
        for e in &self.exprs {
            if !seen.insert(e) {
                return Err(CtxError::Duplicate(e.to_string()));
            }
        }
        Ok(())
    }

    fn sort_key(&self) -> String {
        self.exprs.first().map(|e| e.key()).unwrap_or_default()
    }

    pub fn interpret(&self) -> ShelObject {
        ShelObject::base(self.exprs.len(), self.bound.clone())
    }
}

impl fmt::Display for CtxBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(Base {} ", self.scale)?;
        if self.exprs.len() == 1 {
            write!(f, "{}", self.exprs[0])?;
        } else {
            write!(f, "(Vars")?;
            for e in &self.exprs {
                write!(f, " {e}")?;
            }
            write!(f, ")")?;
        }
        write!(f, " {})", self.bound)
    }
}

/// `B ⋆ (B₁ ⊗ … ⊗ Bₘ)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CtxTree {
    pub root: CtxBase,
    pub deps: Vec<CtxBase>,
}

impl CtxTree {
    pub fn leaf(root: CtxBase) -> CtxTree {
        CtxTree { root, deps: vec![] }
    }

    pub fn interpret(&self) -> ShelObject {
        let root = self.root.interpret();
        if self.deps.is_empty() {
            return root;
        }
        let deps = ShelObject::tensor_all(self.deps.iter().map(|d| d.interpret()).collect());
        if self.deps.len() == 1 {
            return push_product(root, deps, self.deps[0].scale as i64);
        }
        let scales: Vec<i64> = self.deps.iter().map(|d| d.scale as i64).collect();
        ShelObject::star(root, deps, Hom::column(&scales)).expect("one root dimension")
    }

    /// Bases in value/shift order: root first, then dependents.
    pub fn bases(&self) -> impl Iterator<Item = &CtxBase> {
        std::iter::once(&self.root).chain(self.deps.iter())
    }
}

impl fmt::Display for CtxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deps.is_empty() {
            return write!(f, "{}", self.root);
        }
        write!(f, "(Star {} ", self.root)?;
        write_tensor(f, &self.deps.iter().map(|d| d.to_string()).collect::<Vec<_>>())?;
        write!(f, ")")
    }
}

fn write_tensor(f: &mut fmt::Formatter<'_>, parts: &[String]) -> fmt::Result {
    match parts {
        [] => write!(f, "(Unit)"),
        [one] => write!(f, "{one}"),
        [first, rest @ ..] => {
            write!(f, "(Tens {first} ")?;
            write_tensor(f, rest)?;
            write!(f, ")")
        }
    }
}

/// `T₁ ⊗ … ⊗ Tₖ`; the empty list is the unit context.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Ctx {
    pub trees: Vec<CtxTree>,
}

impl Ctx {
    /// Builds a context, checking well-formedness.
    pub fn new(trees: Vec<CtxTree>) -> Result<Ctx, CtxError> {
        let c = Ctx { trees };
        c.check_wf()?;
        Ok(c)
    }

    pub fn unit() -> Ctx {
        Ctx::default()
    }

    /// Tensor of single-expression, scale-0 bases.
    pub fn of_bases(bases: Vec<CtxBase>) -> Result<Ctx, CtxError> {
        Ctx::new(bases.into_iter().map(CtxTree::leaf).collect())
    }

    /// Nonempty bases and globally distinct expressions.
    pub fn check_wf(&self) -> Result<(), CtxError> {
        let mut seen = HashSet::new();
        for t in &self.trees {
            for b in t.bases() {
                b.check_distinct(&mut seen)?;
            }
        }
        Ok(())
    }

    pub fn bases(&self) -> impl Iterator<Item = &CtxBase> {
        self.trees.iter().flat_map(|t| t.bases())
    }

    /// Expressions in the value order of [`Ctx::interpret`].
    pub fn value_exprs(&self) -> Vec<&Expr> {
        self.bases().flat_map(|b| b.exprs.iter()).collect()
    }

    pub fn interpret(&self) -> ShelObject {
        ShelObject::tensor_all(self.trees.iter().map(|t| t.interpret()).collect())
    }
}

/// The unique normal form of a context modulo the symmetric monoidal
/// structure: root scales are zeroed, scale-0 dependents become independent
/// trees, expressions within a base, dependents within a tree and trees
/// within the context are sorted by the serialization of their (first)
/// expression.
pub fn canonicalize(g: &Ctx) -> Ctx {
    let mut trees = Vec::new();
    for t in &g.trees {
        let mut root = t.root.clone();
        root.scale = 0;
        let mut deps = Vec::new();
        for d in &t.deps {
            if d.scale == 0 {
                trees.push(CtxTree::leaf(d.clone()));
            } else {
                deps.push(d.clone());
            }
        }
        trees.push(CtxTree { root, deps });
    }
    for t in trees.iter_mut() {
        t.root.exprs.sort_by_cached_key(|e| e.key());
        for d in t.deps.iter_mut() {
            d.exprs.sort_by_cached_key(|e| e.key());
        }
        t.deps.sort_by_cached_key(|d| d.sort_key());
    }
    trees.sort_by_cached_key(|t| t.root.sort_key());
    Ctx { trees }
}

/// If `g` is a tensor of single bare-variable bases covering exactly the
/// free variables of `e`, the bound carried by each variable (in
/// first-occurrence order).
pub fn is_start_context(g: &Ctx, e: &Expr) -> Option<Vec<(String, Bound)>> {
    let vars = free_vars(e);
    if g.trees.len() != vars.len() {
        return None;
    }
    let mut found: Vec<Option<Bound>> = vec![None; vars.len()];
    for t in &g.trees {
        if !t.deps.is_empty() || t.root.exprs.len() != 1 {
            return None;
        }
        let name = t.root.exprs[0].as_var()?;
        let idx = vars.iter().position(|v| v == name)?;
        if found[idx].is_some() {
            return None;
        }
        found[idx] = Some(t.root.bound.clone());
    }
    vars.into_iter().zip(found).map(|(v, b)| b.map(|b| (v, b))).collect()
}

impl fmt::Display for Ctx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tensor(f, &self.trees.iter().map(|t| t.to_string()).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::parse_expr;

    fn v(s: &str) -> Expr {
        Expr::var(s)
    }

    fn leaf(e: Expr, p: u64) -> CtxTree {
        CtxTree::leaf(CtxBase::single(0, e, Bound::from_int(p)))
    }

    #[test]
    fn tensor_commutativity_normalizes() {
        let ab = Ctx::new(vec![leaf(v("a"), 1), leaf(v("b"), 2)]).unwrap();
        let ba = Ctx::new(vec![leaf(v("b"), 2), leaf(v("a"), 1)]).unwrap();
        assert_eq!(canonicalize(&ab), canonicalize(&ba));
    }

    #[test]
    fn scale_zero_dependents_detach() {
        let t = CtxTree {
            root: CtxBase::single(3, v("x"), Bound::from_int(1)),
            deps: vec![CtxBase::single(0, v("a"), Bound::from_int(2))],
        };
        let c = canonicalize(&Ctx::new(vec![t]).unwrap());
        assert_eq!(
            c,
            canonicalize(&Ctx::new(vec![leaf(v("x"), 1), leaf(v("a"), 2)]).unwrap())
        );
    }

    #[test]
    fn duplicates_and_empty_bases_rejected() {
        assert_eq!(
            Ctx::new(vec![leaf(v("a"), 1), leaf(v("a"), 2)]),
            Err(CtxError::Duplicate("a".into()))
        );
        assert_eq!(CtxBase::new(0, vec![], Bound::zero()), Err(CtxError::EmptyBase));
    }

    #[test]
    fn interpretation_shapes() {
        let shared = Ctx::new(vec![CtxTree::leaf(
            CtxBase::new(0, vec![v("a"), v("b")], 2.into()).unwrap(),
        )])
        .unwrap();
        assert_eq!(shared.interpret(), ShelObject::base(2, 2.into()));
        assert_eq!(Ctx::unit().interpret(), ShelObject::Unit);
        let t = CtxTree {
            root: CtxBase::single(0, v("x"), 1.into()),
            deps: vec![CtxBase::single(1, parse_expr("(Mul a x)").unwrap(), 0.into())],
        };
        assert_eq!(
            Ctx::new(vec![t]).unwrap().interpret(),
            ShelObject::star_n(ShelObject::real(1.into()), ShelObject::real(0.into()), 1)
        );
    }

    #[test]
    fn start_context_detection() {
        let e = parse_expr("(Add (Mul a a) (Mul b b))").unwrap();
        let g = Ctx::new(vec![leaf(v("b"), 1), leaf(v("a"), 1)]).unwrap();
        assert_eq!(
            is_start_context(&g, &e),
            Some(vec![("a".into(), 1.into()), ("b".into(), 1.into())])
        );
        let g = Ctx::new(vec![leaf(parse_expr("(Mul a b)").unwrap(), 1)]).unwrap();
        assert_eq!(is_start_context(&g, &e), None);
        let g = Ctx::new(vec![leaf(v("a"), 1)]).unwrap();
        assert_eq!(is_start_context(&g, &e), None);
    }

    #[test]
    fn serialization_mirrors_constructors() {
        let t = CtxTree {
            root: CtxBase::single(0, v("x"), 1.into()),
            deps: vec![CtxBase::single(1, parse_expr("(Mul a x)").unwrap(), Bound::ratio(1, 2))],
        };
        let g = Ctx::new(vec![t, leaf(v("b"), 4)]).unwrap();
        assert_eq!(
            g.to_string(),
            "(Tens (Star (Base 0 x 1) (Base 1 (Mul a x) 1/2)) (Base 0 b 4))"
        );
    }
}
