//! Lens specifications: immutable descriptions of morphisms `(f, f̃, b)`.
//!
//! Almost every lens in the library is *affine*: its forward maps evaluate a
//! small term over the input values (each operation node is one rounding
//! site), and its backward map is `b(t) = M·t + C·δ` for exact rational
//! matrices `M` and `C`, where `δ` collects the rounding errors recorded
//! when the lens was bound to concrete inputs. The logarithm lens is the
//! one exception (its witness depends on the input value).

use std::fmt;
use std::sync::Arc;

use rug::Rational;
use thiserror::Error;

use super::object::{weighted_row_sums, Hom, ObjectError, ShelObject};
use crate::contexts::Bound;
use crate::numerics::{EvalError, OpKind, RoundingModel};

/// A dense matrix of exact rationals, row-major.
pub type Matrix = Vec<Vec<Rational>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LensError {
    #[error("cannot compose: target {left} does not match source {right}")]
    Mismatch { left: String, right: String },
    #[error("side condition of {lens} violated: {detail}")]
    SideCondition { lens: String, detail: String },
    #[error("malformed lens {lens}: {detail}")]
    Malformed { lens: String, detail: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error("input {value} of the logarithm lens lies outside [1, a]")]
    LogDomain { value: String },
    #[error("output shift component {dim} = {value} exceeds the target bound {bound}·ε")]
    ShiftOutOfBound { dim: usize, value: String, bound: Bound },
}

/// Forward term of an affine lens over its input values.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Input(usize),
    Op {
        op: OpKind,
        args: Vec<Term>,
        site: usize,
        /// Division returns 0 on a zero denominator; addition accepts an
        /// exactly cancelling (zero) result. Both are exact, so `δ = 0`.
        guarded: bool,
    },
}

impl Term {
    pub fn input(i: usize) -> Term {
        Term::Input(i)
    }

    pub fn op(op: OpKind, args: Vec<Term>) -> Term {
        Term::Op {
            op,
            args,
            site: usize::MAX,
            guarded: false,
        }
    }

    pub fn guarded(op: OpKind, args: Vec<Term>) -> Term {
        Term::Op {
            op,
            args,
            site: usize::MAX,
            guarded: true,
        }
    }

    fn number(&mut self, next: &mut usize) {
        if let Term::Op { args, site, .. } = self {
            for a in args.iter_mut() {
                a.number(next);
            }
            *site = *next;
            *next += 1;
        }
    }

    fn max_input(&self) -> Option<usize> {
        match self {
            Term::Input(i) => Some(*i),
            Term::Op { args, .. } => args.iter().filter_map(|a| a.max_input()).max(),
        }
    }
}

/// Data of an affine lens.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub outputs: Vec<Term>,
    pub sites: usize,
    /// Source dims × target dims.
    pub shift: Vec<Vec<Rational>>,
    /// Source dims × rounding sites.
    pub delta: Vec<Vec<Rational>>,
}

impl Affine {
    fn is_structural(&self) -> bool {
        self.sites == 0 && self.outputs.iter().all(|t| matches!(t, Term::Input(_)))
    }
}

#[derive(Debug)]
pub(crate) enum Node {
    Affine(Affine),
    /// The logarithm lens; `max_finite` is the constant `a` bounding its
    /// input domain `[1, a]`.
    Log {
        max_finite: Rational,
    },
    Compose(LensSpec, LensSpec),
    Parallel(LensSpec, LensSpec),
    ParallelStar(LensSpec, LensSpec),
}

#[derive(Debug)]
pub(crate) struct Inner {
    pub name: String,
    pub node: Node,
    pub source: ShelObject,
    pub target: ShelObject,
}

/// An immutable, cheaply clonable lens description.
#[derive(Clone)]
pub struct LensSpec(pub(crate) Arc<Inner>);

impl fmt::Debug for LensSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} → {}", self.name(), self.source(), self.target())
    }
}

/// Rational literal helper.
pub(crate) fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn ints(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| Rational::from(x)).collect())
        .collect()
}

fn matmul(a: &[Vec<Rational>], b: &[Vec<Rational>], inner: usize, cols: usize) -> Vec<Vec<Rational>> {
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| {
                    (0..inner).fold(Rational::new(), |acc, k| {
                        if row[k] == 0 || b[k][c] == 0 {
                            acc
                        } else {
                            acc + Rational::from(&row[k] * &b[k][c])
                        }
                    })
                })
                .collect()
        })
        .collect()
}

fn block_diag(a: &[Vec<Rational>], ac: usize, b: &[Vec<Rational>], bc: usize) -> Vec<Vec<Rational>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    for r in a {
        let mut row = r.clone();
        row.resize(ac + bc, Rational::new());
        out.push(row);
    }
    for r in b {
        let mut row = vec![Rational::new(); ac];
        row.extend(r.iter().cloned());
        out.push(row);
    }
    out
}

impl LensSpec {
    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn source(&self) -> &ShelObject {
        &self.0.source
    }

    pub fn target(&self) -> &ShelObject {
        &self.0.target
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0.node
    }

    /// Source bounds per shift dimension (ε units).
    pub fn source_bounds(&self) -> Vec<Bound> {
        self.source().bounds()
    }

    pub fn target_bounds(&self) -> Vec<Bound> {
        self.target().bounds()
    }

    fn make(name: impl Into<String>, node: Node, source: ShelObject, target: ShelObject) -> LensSpec {
        LensSpec(Arc::new(Inner {
            name: name.into(),
            node,
            source,
            target,
        }))
    }

    /// Builds an affine lens, validating shapes and the bound condition
    /// `Σ_j |M_ij| q_j + Σ_k |C_ik| ≤ p_i` exactly. Structural lenses
    /// (no rounding sites, outputs are inputs) additionally have their
    /// action condition checked symbolically.
    pub fn affine(
        name: impl Into<String>,
        source: ShelObject,
        target: ShelObject,
        mut outputs: Vec<Term>,
        shift: Vec<Vec<Rational>>,
        delta: Option<Vec<Vec<Rational>>>,
    ) -> Result<LensSpec, LensError> {
        let name = name.into();
        let malformed = |detail: String| LensError::Malformed {
            lens: name.clone(),
            detail,
        };
        let mut sites = 0;
        for t in outputs.iter_mut() {
            t.number(&mut sites);
        }
        let delta = delta.unwrap_or_else(|| vec![vec![]; source.dims()]);
        if outputs.len() != target.arity() {
            return Err(malformed(format!(
                "{} outputs for a target of arity {}",
                outputs.len(),
                target.arity()
            )));
        }
        if let Some(m) = outputs.iter().filter_map(|t| t.max_input()).max() {
            if m >= source.arity() {
                return Err(malformed(format!(
                    "term reads input {m} of a source of arity {}",
                    source.arity()
                )));
            }
        }
        if shift.len() != source.dims() || shift.iter().any(|r| r.len() != target.dims()) {
            return Err(malformed("shift matrix shape".into()));
        }
        if delta.len() != source.dims() || delta.iter().any(|r| r.len() != sites) {
            return Err(malformed(format!("delta matrix shape (expected {} sites)", sites)));
        }
        let aff = Affine {
            outputs,
            sites,
            shift,
            delta,
        };
        check_bound_condition(&name, &source, &target, &aff.shift, &aff.delta)?;
        if aff.is_structural() {
            check_structural_action(&name, &source, &target, &aff)?;
        }
        Ok(LensSpec::make(name, Node::Affine(aff), source, target))
    }

    /// Replaces the source object without any validation. Only for negative
    /// tests that need a deliberately unsound lens.
    #[doc(hidden)]
    pub fn relabel_source_unchecked(&self, source: ShelObject) -> LensSpec {
        let node = match &self.0.node {
            Node::Affine(a) => Node::Affine(a.clone()),
            Node::Log { max_finite } => Node::Log {
                max_finite: max_finite.clone(),
            },
            Node::Compose(a, b) => Node::Compose(a.clone(), b.clone()),
            Node::Parallel(a, b) => Node::Parallel(a.clone(), b.clone()),
            Node::ParallelStar(a, b) => Node::ParallelStar(a.clone(), b.clone()),
        };
        LensSpec::make(format!("{}!", self.name()), node, source, self.target().clone())
    }

    /// The linear data `(M, C)` of the backward map `b(t) = M t + C δ`,
    /// when the lens is built from affine pieces only.
    pub fn linear_parts(&self) -> Option<(Matrix, Matrix)> {
        match self.node() {
            Node::Affine(a) => Some((a.shift.clone(), a.delta.clone())),
            Node::Log { .. } => None,
            Node::Compose(l1, l2) => {
                let (m1, c1) = l1.linear_parts()?;
                let (m2, c2) = l2.linear_parts()?;
                let mid = l1.target().dims();
                let m = matmul(&m1, &m2, mid, l2.target().dims());
                let s2 = c2.first().map_or(0, |r| r.len());
                let m1c2 = matmul(&m1, &c2, mid, s2);
                let c = c1
                    .into_iter()
                    .zip(m1c2)
                    .map(|(mut a, b)| {
                        a.extend(b);
                        a
                    })
                    .collect();
                Some((m, c))
            }
            Node::Parallel(l1, l2) | Node::ParallelStar(l1, l2) => {
                let (m1, c1) = l1.linear_parts()?;
                let (m2, c2) = l2.linear_parts()?;
                let s1 = c1.first().map_or(0, |r| r.len());
                let s2 = c2.first().map_or(0, |r| r.len());
                Some((
                    block_diag(&m1, l1.target().dims(), &m2, l2.target().dims()),
                    block_diag(&c1, s1, &c2, s2),
                ))
            }
        }
    }

    /// Number of primitive rounding sites.
    pub fn site_count(&self) -> usize {
        match self.node() {
            Node::Affine(a) => a.sites,
            Node::Log { .. } => 1,
            Node::Compose(a, b) | Node::Parallel(a, b) | Node::ParallelStar(a, b) => a.site_count() + b.site_count(),
        }
    }

    /// Number of nodes in the lens tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Affine(_) | Node::Log { .. } => 1,
            Node::Compose(a, b) | Node::Parallel(a, b) | Node::ParallelStar(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Leaf lens names in evaluation order.
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        match self.node() {
            Node::Affine(_) | Node::Log { .. } => out.push(self.name().to_string()),
            Node::Compose(a, b) | Node::Parallel(a, b) | Node::ParallelStar(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Multi-line rendering of the lens tree.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        self.describe_into(0, &mut s);
        s
    }

    fn describe_into(&self, indent: usize, s: &mut String) {
        use std::fmt::Write;
        let pad = "  ".repeat(indent);
        let _ = writeln!(s, "{pad}{} : {} → {}", self.name(), self.source(), self.target());
        match self.node() {
            Node::Compose(a, b) | Node::Parallel(a, b) | Node::ParallelStar(a, b) => {
                a.describe_into(indent + 1, s);
                b.describe_into(indent + 1, s);
            }
            _ => {}
        }
    }
}

fn check_bound_condition(
    name: &str,
    source: &ShelObject,
    target: &ShelObject,
    shift: &[Vec<Rational>],
    delta: &[Vec<Rational>],
) -> Result<(), LensError> {
    let tb = target.bounds();
    let sb = source.bounds();
    let need = weighted_row_sums(shift, &tb);
    for (i, (n, row)) in need.into_iter().zip(delta).enumerate() {
        let total = row.iter().fold(n, |acc, c| acc + Rational::from(c.abs_ref()));
        if &total > sb[i].as_rational() {
            return Err(LensError::SideCondition {
                lens: name.to_string(),
                detail: format!(
                    "source shift dimension {i} needs bound {total} but is labelled {}",
                    sb[i]
                ),
            });
        }
    }
    Ok(())
}

fn check_structural_action(
    name: &str,
    source: &ShelObject,
    target: &ShelObject,
    aff: &Affine,
) -> Result<(), LensError> {
    let a_src: Vec<Vec<Rational>> = source
        .action_matrix()
        .into_iter()
        .map(|r| r.into_iter().map(Rational::from).collect())
        .collect();
    let composed = matmul(&a_src, &aff.shift, source.dims(), target.dims());
    let a_tgt = target.action_matrix();
    for (k, t) in aff.outputs.iter().enumerate() {
        let Term::Input(i) = t else {
            unreachable!("structural outputs are inputs")
        };
        let want: Vec<Rational> = a_tgt[k].iter().map(|&x| Rational::from(x)).collect();
        if composed[*i] != want {
            return Err(LensError::SideCondition {
                lens: name.to_string(),
                detail: format!("output {k} (input {i}) is not shifted consistently with the target action"),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Primitive lenses
// ---------------------------------------------------------------------------

fn binop_lens(name: &str, op: OpKind, p: &Bound) -> LensSpec {
    LensSpec::affine(
        name,
        ShelObject::base(2, p.succ()),
        ShelObject::real(p.clone()),
        vec![Term::op(op, vec![Term::input(0), Term::input(1)])],
        ints(&[&[1]]),
        Some(ints(&[&[1]])),
    )
    .expect("addition lens is well formed")
}

/// `add : (ℝ², p+1) → (ℝ, p)` with `b(s) = s + δ`.
pub fn lens_add(p: &Bound) -> LensSpec {
    binop_lens("add", OpKind::Add, p)
}

/// `sub : (ℝ², p+1) → (ℝ, p)` with `b(s) = s + δ`.
pub fn lens_sub(p: &Bound) -> LensSpec {
    binop_lens("sub", OpKind::Sub, p)
}

/// `mul : (ℝ², (p+1)/2) → (ℝ, p)` with `b(s) = (s + δ)/2`.
pub fn lens_mul(p: &Bound) -> LensSpec {
    LensSpec::affine(
        "mul",
        ShelObject::base(2, p.succ().half()),
        ShelObject::real(p.clone()),
        vec![Term::op(OpKind::Mul, vec![Term::input(0), Term::input(1)])],
        vec![vec![q(1, 2)]],
        Some(vec![vec![q(1, 2)]]),
    )
    .expect("multiplication lens is well formed")
}

/// `div : (ℝ, p+1) ⊗ (ℝ, 0) → (ℝ, p)` with `b(s) = (s + δ, 0)`; the
/// quotient is 0 when the denominator is 0.
pub fn lens_div(p: &Bound) -> LensSpec {
    LensSpec::affine(
        "div",
        ShelObject::tensor(ShelObject::real(p.succ()), ShelObject::real(Bound::zero())),
        ShelObject::real(p.clone()),
        vec![Term::guarded(OpKind::Div, vec![Term::input(0), Term::input(1)])],
        ints(&[&[1], &[0]]),
        Some(ints(&[&[1], &[0]])),
    )
    .expect("division lens is well formed")
}

/// `sqrt : (ℝ, 2p+2) → (ℝ, p)` computing `√|x|`, with `b(s) = 2s + 2δ`.
pub fn lens_sqrt(p: &Bound) -> LensSpec {
    LensSpec::affine(
        "sqrt",
        ShelObject::real(p.scale(2).succ().succ()),
        ShelObject::real(p.clone()),
        vec![Term::op(OpKind::Sqrt, vec![Term::input(0)])],
        ints(&[&[2]]),
        Some(ints(&[&[2]])),
    )
    .expect("square-root lens is well formed")
}

/// `log : (ℝ, 3a(p+1)) → (ℝ, p)` on inputs in `[1, a]`. The witness for an
/// output shift `s` is `x̃ = exp(f̃(x)·e^s)`, encoded as the shift
/// `f̃(x)·e^s − ln x` on `x`.
pub fn lens_log(p: &Bound, m: &RoundingModel) -> Result<LensSpec, LensError> {
    if Rational::from(p.as_rational() * &m.eps) > 1 {
        return Err(LensError::SideCondition {
            lens: "log".into(),
            detail: format!("p·ε ≤ 1 required, p = {p}"),
        });
    }
    let a = m.max_finite.clone();
    let source_bound = p.succ().times(&Rational::from(&a * 3u32));
    Ok(LensSpec::make(
        "log",
        Node::Log { max_finite: a },
        ShelObject::real(source_bound),
        ShelObject::real(p.clone()),
    ))
}

/// Push product with scalar homomorphism `n`; `n = 0` is the tensor.
pub fn push_product(root: ShelObject, dep: ShelObject, n: i64) -> ShelObject {
    if n == 0 {
        ShelObject::tensor(root, dep)
    } else {
        ShelObject::star_n(root, dep, n)
    }
}

/// `dmul(n) : (ℝ, p) ⋆ₙ (ℝ, q+1) → (ℝ, p) ⋆ₙ₊₁ (ℝ, q)`, forward
/// `(x, y) ↦ (x, x·y)`, backward `b(s, t) = (s, t + δ)`. For `n = 0` the
/// source is a tensor.
pub fn lens_dmul(n: u32, p: &Bound, qb: &Bound) -> LensSpec {
    let n = n as i64;
    LensSpec::affine(
        format!("dmul:{n}"),
        push_product(ShelObject::real(p.clone()), ShelObject::real(qb.succ()), n),
        push_product(ShelObject::real(p.clone()), ShelObject::real(qb.clone()), n + 1),
        vec![
            Term::input(0),
            Term::op(OpKind::Mul, vec![Term::input(0), Term::input(1)]),
        ],
        ints(&[&[1, 0], &[0, 1]]),
        Some(ints(&[&[0], &[1]])),
    )
    .expect("dmul lens is well formed")
}

/// `adddiv : (ℝ², p₁) ⋆ₙ (ℝ, p₂+2) → (ℝ, p₂)` computing `z/(x+y)` (0 when
/// `x + y = 0`), backward `b(s) = (0, s + δ₂ − δ₁)`.
pub fn lens_adddiv(p1: &Bound, p2: &Bound, n: u32) -> LensSpec {
    let sum = Term::guarded(OpKind::Add, vec![Term::input(0), Term::input(1)]);
    LensSpec::affine(
        "adddiv",
        push_product(
            ShelObject::base(2, p1.clone()),
            ShelObject::real(p2.succ().succ()),
            n as i64,
        ),
        ShelObject::real(p2.clone()),
        vec![Term::guarded(OpKind::Div, vec![Term::input(2), sum])],
        ints(&[&[0], &[1]]),
        Some(ints(&[&[0, 0], &[-1, 1]])),
    )
    .expect("adddiv lens is well formed")
}

// ---------------------------------------------------------------------------
// Structural lenses
// ---------------------------------------------------------------------------

/// A structural lens: target value `k` is source value `value_perm[k]`;
/// target shift dimension `j` is routed to source dimension `dim_perm[j]`
/// (unlisted source dimensions receive no shift).
pub fn lens_rearrange(
    name: impl Into<String>,
    source: ShelObject,
    target: ShelObject,
    value_perm: &[usize],
    dim_perm: &[usize],
) -> Result<LensSpec, LensError> {
    let name = name.into();
    if dim_perm.len() != target.dims() || dim_perm.iter().any(|&d| d >= source.dims()) {
        return Err(LensError::Malformed {
            lens: name,
            detail: "dimension routing does not fit the objects".into(),
        });
    }
    let mut shift = vec![vec![Rational::new(); target.dims()]; source.dims()];
    for (j, &i) in dim_perm.iter().enumerate() {
        shift[i][j] = Rational::from(1);
    }
    let outputs = value_perm.iter().map(|&i| Term::input(i)).collect();
    LensSpec::affine(name, source, target, outputs, shift, None)
}

fn identity_perm(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn lens_id(obj: &ShelObject) -> LensSpec {
    lens_rearrange(
        "id",
        obj.clone(),
        obj.clone(),
        &identity_perm(obj.arity()),
        &identity_perm(obj.dims()),
    )
    .expect("identity is well formed")
}

/// `Δ : (ℝⁿ, p) → (ℝ²ⁿ, p)` duplicating the values under one shift.
pub fn lens_dup(n: usize, p: &Bound) -> LensSpec {
    let perm: Vec<usize> = (0..n).chain(0..n).collect();
    lens_rearrange(
        "dup",
        ShelObject::base(n, p.clone()),
        ShelObject::base(2 * n, p.clone()),
        &perm,
        &[0],
    )
    .expect("duplication is well formed")
}

/// `share : (ℝⁿ, p) ⊗ (ℝᵐ, p) → (ℝⁿ⁺ᵐ, p)`, `b(s) = (s, s)`.
pub fn lens_share_tensor(n: usize, m: usize, p: &Bound) -> LensSpec {
    let shift = ints(&[&[1], &[1]]);
    LensSpec::affine(
        "share",
        ShelObject::tensor(ShelObject::base(n, p.clone()), ShelObject::base(m, p.clone())),
        ShelObject::base(n + m, p.clone()),
        (0..n + m).map(Term::input).collect(),
        shift,
        None,
    )
    .expect("share is well formed")
}

/// `share⋆ₖ : (ℝⁿ, p₁) ⋆ₖ (ℝᵐ, p₂) → (ℝⁿ⁺ᵐ, p₁)`, `b(s) = (s, (1−k)s)`;
/// requires `p₂ ≥ |k−1|·p₁`.
pub fn lens_share_star(k: u32, root: (usize, &Bound), dep: (usize, &Bound)) -> Result<LensSpec, LensError> {
    let k = k as i64;
    LensSpec::affine(
        format!("share_star:{k}"),
        push_product(
            ShelObject::base(root.0, root.1.clone()),
            ShelObject::base(dep.0, dep.1.clone()),
            k,
        ),
        ShelObject::base(root.0 + dep.0, root.1.clone()),
        (0..root.0 + dep.0).map(Term::input).collect(),
        ints(&[&[1], &[1 - k]]),
        None,
    )
}

/// `push(i→j) : (ℝᵃ, p₁) ⋆ᵢ (ℝᵇ, q + |i−j|p₁) → (ℝᵃ, p₁) ⋆ⱼ (ℝᵇ, q)`,
/// `b(s, t) = (s, (j−i)s + t)`.
pub fn lens_push(root: (usize, &Bound), dep: (usize, &Bound), i: u32, j: u32) -> LensSpec {
    let (i, j) = (i as i64, j as i64);
    let cost = root.1.scale(i.abs_diff(j));
    LensSpec::affine(
        format!("push:{i}->{j}"),
        push_product(
            ShelObject::base(root.0, root.1.clone()),
            ShelObject::base(dep.0, dep.1 + &cost),
            i,
        ),
        push_product(
            ShelObject::base(root.0, root.1.clone()),
            ShelObject::base(dep.0, dep.1.clone()),
            j,
        ),
        (0..root.0 + dep.0).map(Term::input).collect(),
        ints(&[&[1, 0], &[j - i, 1]]),
        None,
    )
    .expect("push is well formed")
}

fn star_parts(obj: &ShelObject) -> Option<(&ShelObject, &ShelObject)> {
    match obj {
        ShelObject::Star { root, dep, .. } => Some((root, dep)),
        ShelObject::Tensor(a, b) => Some((a, b)),
        _ => None,
    }
}

fn not_a_pair(lens: &str, obj: &ShelObject) -> LensError {
    LensError::Malformed {
        lens: lens.to_string(),
        detail: format!("expected a push or tensor product, got {obj}"),
    }
}

/// `π₁ : X₁ ⋆ X₂ → X₁` (also for tensors).
pub fn lens_proj1(obj: &ShelObject) -> Result<LensSpec, LensError> {
    let (x1, _) = star_parts(obj).ok_or_else(|| not_a_pair("proj1", obj))?;
    lens_rearrange(
        "proj1",
        obj.clone(),
        x1.clone(),
        &identity_perm(x1.arity()),
        &identity_perm(x1.dims()),
    )
}

/// `π₂ : X₁ ⋆ X₂ → X₂` (also for tensors).
pub fn lens_proj2(obj: &ShelObject) -> Result<LensSpec, LensError> {
    let (x1, x2) = star_parts(obj).ok_or_else(|| not_a_pair("proj2", obj))?;
    let vals: Vec<usize> = (x1.arity()..x1.arity() + x2.arity()).collect();
    let dims: Vec<usize> = (x1.dims()..x1.dims() + x2.dims()).collect();
    lens_rearrange("proj2", obj.clone(), x2.clone(), &vals, &dims)
}

fn hom_of(obj: &ShelObject) -> Hom {
    match obj {
        ShelObject::Star { hom, .. } => hom.clone(),
        ShelObject::Tensor(a, b) => Hom::from_rows(vec![vec![0; a.dims()]; b.dims()]),
        _ => unreachable!("checked by star_parts"),
    }
}

/// `Θ : (X₁ ⋆ᵢ Y₁) ⊗ (X₂ ⋆ⱼ Y₂) → (X₁ ⊗ X₂) ⋆₍ᵢ,ⱼ₎ (Y₁ ⊗ Y₂)`.
pub fn lens_dist(left: &ShelObject, right: &ShelObject) -> Result<LensSpec, LensError> {
    let (x1, y1) = star_parts(left).ok_or_else(|| not_a_pair("dist", left))?;
    let (x2, y2) = star_parts(right).ok_or_else(|| not_a_pair("dist", right))?;
    let hom = Hom::block_diag(&hom_of(left), &hom_of(right));
    let target = ShelObject::star(
        ShelObject::tensor(x1.clone(), x2.clone()),
        ShelObject::tensor(y1.clone(), y2.clone()),
        hom,
    )?;
    let source = ShelObject::tensor(left.clone(), right.clone());
    // source order: x1 y1 x2 y2 ; target order: x1 x2 y1 y2
    let (ax1, ay1, ax2, ay2) = (x1.arity(), y1.arity(), x2.arity(), y2.arity());
    let (dx1, dy1, dx2, dy2) = (x1.dims(), y1.dims(), x2.dims(), y2.dims());
    let vals: Vec<usize> = (0..ax1)
        .chain(ax1 + ay1..ax1 + ay1 + ax2)
        .chain(ax1..ax1 + ay1)
        .chain(ax1 + ay1 + ax2..ax1 + ay1 + ax2 + ay2)
        .collect();
    let dims: Vec<usize> = (0..dx1)
        .chain(dx1 + dy1..dx1 + dy1 + dx2)
        .chain(dx1..dx1 + dy1)
        .chain(dx1 + dy1 + dx2..dx1 + dy1 + dx2 + dy2)
        .collect();
    lens_rearrange("dist", source, target, &vals, &dims)
}

/// `swap : X ⊗ Y → Y ⊗ X`.
pub fn lens_swap(x: &ShelObject, y: &ShelObject) -> LensSpec {
    let (ax, ay, dx, dy) = (x.arity(), y.arity(), x.dims(), y.dims());
    let vals: Vec<usize> = (ax..ax + ay).chain(0..ax).collect();
    let dims: Vec<usize> = (dx..dx + dy).chain(0..dx).collect();
    lens_rearrange(
        "swap",
        ShelObject::tensor(x.clone(), y.clone()),
        ShelObject::tensor(y.clone(), x.clone()),
        &vals,
        &dims,
    )
    .expect("swap is well formed")
}

/// `assoc : (X ⊗ Y) ⊗ Z → X ⊗ (Y ⊗ Z)`.
pub fn lens_assoc(x: &ShelObject, y: &ShelObject, z: &ShelObject) -> LensSpec {
    let src = ShelObject::tensor(ShelObject::tensor(x.clone(), y.clone()), z.clone());
    let tgt = ShelObject::tensor(x.clone(), ShelObject::tensor(y.clone(), z.clone()));
    lens_rearrange(
        "assoc",
        src.clone(),
        tgt,
        &identity_perm(src.arity()),
        &identity_perm(src.dims()),
    )
    .expect("associator is well formed")
}

/// `λ : I ⊗ X → X`.
pub fn lens_unitor(x: &ShelObject) -> LensSpec {
    lens_rearrange(
        "unitor",
        ShelObject::tensor(ShelObject::Unit, x.clone()),
        x.clone(),
        &identity_perm(x.arity()),
        &identity_perm(x.dims()),
    )
    .expect("unitor is well formed")
}

// ---------------------------------------------------------------------------
// Combinators
// ---------------------------------------------------------------------------

/// Sequential composition: first `l1`, then `l2`; backward maps compose in
/// reverse.
pub fn compose(l1: &LensSpec, l2: &LensSpec) -> Result<LensSpec, LensError> {
    if l1.target() != l2.source() {
        return Err(LensError::Mismatch {
            left: l1.target().to_string(),
            right: l2.source().to_string(),
        });
    }
    Ok(LensSpec::make(
        "compose",
        Node::Compose(l1.clone(), l2.clone()),
        l1.source().clone(),
        l2.target().clone(),
    ))
}

/// Composes a nonempty chain left to right.
pub fn compose_all(lenses: &[LensSpec]) -> Result<LensSpec, LensError> {
    let (first, rest) = lenses.split_first().ok_or_else(|| LensError::Malformed {
        lens: "compose".into(),
        detail: "empty chain".into(),
    })?;
    rest.iter().try_fold(first.clone(), |acc, l| compose(&acc, l))
}

/// Tensor of two lenses.
pub fn parallel(l1: &LensSpec, l2: &LensSpec) -> LensSpec {
    LensSpec::make(
        "parallel",
        Node::Parallel(l1.clone(), l2.clone()),
        ShelObject::tensor(l1.source().clone(), l2.source().clone()),
        ShelObject::tensor(l1.target().clone(), l2.target().clone()),
    )
}

/// Parallel composition over a push product with source homomorphism `hom`.
///
/// The target homomorphism `j` is solved from `H_i·M₁ = M₂·H_j`, and the
/// side condition additionally requires `H_i·C₁ = 0`: shifting the root
/// through `b₁` must move the dependent exactly as `j(t₁)` moves the
/// dependent's output, which holds for the homogeneous primitive lenses.
pub fn parallel_star(l1: &LensSpec, l2: &LensSpec, hom: &Hom) -> Result<LensSpec, LensError> {
    let side = |detail: String| LensError::SideCondition {
        lens: "parallel_star".into(),
        detail,
    };
    let source = ShelObject::star(l1.source().clone(), l2.source().clone(), hom.clone())?;
    let (m1, c1) = l1
        .linear_parts()
        .ok_or_else(|| side("left lens is not affine".into()))?;
    let (m2, c2) = l2
        .linear_parts()
        .ok_or_else(|| side("right lens is not affine".into()))?;
    let _ = c2;
    let h: Vec<Vec<Rational>> = hom
        .to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(Rational::from).collect())
        .collect();
    let (d1s, d1t) = (l1.source().dims(), l1.target().dims());
    let (d2s, d2t) = (l2.source().dims(), l2.target().dims());
    let s1 = c1.first().map_or(0, |r| r.len());
    if matmul(&h, &c1, d1s, s1).iter().flatten().any(|x| *x != 0) {
        return Err(side("root rounding error would leak into the dependent".into()));
    }
    let rhs = matmul(&h, &m1, d1s, d1t); // d2s × d1t
                                         // Solve M₂ (d2s × d2t) · H_j (d2t × d1t) = rhs, row by row of H_j.
    let mut hj = vec![vec![0i64; d1t]; d2t];
    for r in 0..d2t {
        let pivot = (0..d2s)
            .find(|&i| m2[i][r] != 0 && (0..d2t).all(|c| c == r || m2[i][c] == 0))
            .ok_or_else(|| side(format!("cannot solve for the target homomorphism (dimension {r})")))?;
        for c in 0..d1t {
            let v = Rational::from(&rhs[pivot][c] / &m2[pivot][r]);
            if *v.denom() != 1 {
                return Err(side("target homomorphism is not integral".into()));
            }
            hj[r][c] = v
                .numer()
                .to_i64()
                .ok_or_else(|| side("homomorphism entry overflow".into()))?;
        }
    }
    let hj_r: Vec<Vec<Rational>> = hj
        .iter()
        .map(|r| r.iter().map(|&x| Rational::from(x)).collect())
        .collect();
    if matmul(&m2, &hj_r, d2t, d1t) != rhs {
        return Err(side("H_i·M₁ ≠ M₂·H_j".into()));
    }
    let target = ShelObject::star(l1.target().clone(), l2.target().clone(), Hom::from_rows(hj))?;
    Ok(LensSpec::make(
        "parallel_star",
        Node::ParallelStar(l1.clone(), l2.clone()),
        source,
        target,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: u64) -> Bound {
        Bound::from_int(n)
    }

    #[test]
    fn primitive_bound_transformations() {
        assert_eq!(lens_add(&b(0)).source_bounds(), vec![b(1)]);
        assert_eq!(lens_mul(&b(0)).source_bounds(), vec![Bound::ratio(1, 2)]);
        assert_eq!(lens_sqrt(&b(0)).source_bounds(), vec![b(2)]);
        assert_eq!(lens_div(&b(0)).source_bounds(), vec![b(1), b(0)]);
        assert_eq!(lens_adddiv(&b(3), &b(0), 1).source_bounds(), vec![b(3), b(2)]);
        let d = lens_dmul(0, &b(1), &b(0));
        assert_eq!(d.source_bounds(), vec![b(1), b(1)]);
        assert!(matches!(d.source(), ShelObject::Tensor(..)));
        assert_eq!(
            d.target(),
            &ShelObject::star_n(ShelObject::real(b(1)), ShelObject::real(b(0)), 1)
        );
    }

    #[test]
    fn log_bound_is_three_a_times_p_plus_one() {
        let m = crate::numerics::unit_roundoff(crate::numerics::Format::Binary64);
        let l = lens_log(&b(0), &m).unwrap();
        let want = Bound::new(Rational::from(&m.max_finite * 3u32)).unwrap();
        assert_eq!(l.source_bounds(), vec![want]);
    }

    #[test]
    fn dmul_scale_law() {
        for n in 0..4 {
            let l = lens_dmul(n, &b(1), &b(2));
            match l.target() {
                ShelObject::Star { hom, .. } => assert_eq!(hom.uniform_scale(), Some(n as i64 + 1)),
                other => panic!("unexpected target {other}"),
            }
        }
    }

    #[test]
    fn share_star_side_condition() {
        assert!(lens_share_star(1, (1, &b(3)), (1, &b(0))).is_ok());
        assert!(lens_share_star(2, (1, &b(1)), (1, &b(1))).is_ok());
        let err = lens_share_star(3, (1, &b(1)), (1, &b(1))).unwrap_err();
        assert!(matches!(err, LensError::SideCondition { .. }), "{err}");
    }

    #[test]
    fn compose_checks_interfaces() {
        // mul at p=1 then sqrt at p=0: source bound (2+1)/2 = 3/2.
        let l = compose(&lens_mul(&b(2)), &lens_sqrt(&b(0))).unwrap();
        assert_eq!(l.source_bounds(), vec![Bound::ratio(3, 2)]);
        assert!(compose(&lens_mul(&b(1)), &lens_sqrt(&b(0))).is_err());
    }

    #[test]
    fn structural_action_is_checked() {
        // Routing the dependent's values without its root shift is invalid.
        let star = ShelObject::star_n(ShelObject::real(b(0)), ShelObject::real(b(0)), 1);
        let tensor = ShelObject::tensor(ShelObject::real(b(0)), ShelObject::real(b(0)));
        let bad = lens_rearrange("bad", star.clone(), tensor.clone(), &[0, 1], &[0, 1]);
        assert!(matches!(bad, Err(LensError::SideCondition { .. })));
        // The other direction (tensor into a scale-0 push) is fine.
        let zero = ShelObject::star_n(ShelObject::real(b(0)), ShelObject::real(b(0)), 0);
        assert!(lens_rearrange("ok", tensor, zero, &[0, 1], &[0, 1]).is_ok());
    }

    #[test]
    fn parallel_star_solves_target_homomorphism() {
        let root = ShelObject::real(b(0));
        let id = lens_id(&root);
        let l = parallel_star(&id, &lens_add(&b(1)), &Hom::scalar(1, 1, 1)).unwrap();
        assert_eq!(l.source_bounds(), vec![b(0), b(2)]);
        // sqrt on the dependent halves the scale: 2 → 1.
        let l = parallel_star(&id, &lens_sqrt(&b(0)), &Hom::scalar(2, 1, 1)).unwrap();
        match l.target() {
            ShelObject::Star { hom, .. } => assert_eq!(hom.uniform_scale(), Some(1)),
            _ => unreachable!(),
        }
        // ... and an odd scale cannot be halved.
        assert!(parallel_star(&id, &lens_sqrt(&b(0)), &Hom::scalar(1, 1, 1)).is_err());
        // A rounding root leaks into the dependent.
        assert!(parallel_star(&lens_add(&b(0)), &lens_add(&b(0)), &Hom::scalar(1, 1, 1)).is_err());
    }

    #[test]
    fn share_parallel_star_for_weighted_average() {
        let sh = lens_share_tensor(1, 1, &b(0));
        let sh2 = lens_share_tensor(1, 1, &b(3));
        let l = parallel_star(&sh, &sh2, &Hom::from_rows(vec![vec![1, 0], vec![0, 1]])).unwrap();
        assert_eq!(
            l.target(),
            &ShelObject::star_n(ShelObject::base(2, b(0)), ShelObject::base(2, b(3)), 1)
        );
    }

    #[test]
    fn linear_parts_of_composition() {
        let l = compose(&lens_mul(&b(2)), &lens_sqrt(&b(0))).unwrap();
        let (m, c) = l.linear_parts().unwrap();
        assert_eq!(m, vec![vec![Rational::from(1)]]);
        assert_eq!(c, vec![vec![q(1, 2), Rational::from(1)]]);
    }
}
