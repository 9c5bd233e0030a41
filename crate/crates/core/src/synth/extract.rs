//! Compiling derivations into lenses.
//!
//! Each step rewrites a few trees of the context and leaves the rest alone
//! (congruence). The rewritten trees get a local affine lens whose forward
//! map computes each new expression from the old ones with one rounding
//! site per operation, and whose backward map is the exact rational
//! solution of the linear constraints that make the forward map a lens:
//!
//! * an output copied from input `x` must be shifted like `x`:
//!   `A_src[x]·b = a·t`;
//! * `u + v` and `u − v` need both operands shifted by `a·t + δ`;
//! * `u·v` needs `(A[u] + A[v])·b = a·t + δ`, and `u / v` needs
//!   `(A[u] − A[v])·b = a·t + δ`;
//! * `√u` needs `A[u]·b = 2(a·t + δ)`,
//!
//! where `a` is the output's row of the target action matrix. The bound
//! condition is then verified exactly when the lens is built, so an
//! unsound step cannot produce a lens. Steps are glued with structural
//! rearrangements, the identity on the untouched trees, and composition.

use rug::Rational;
use thiserror::Error;

use super::derivation::{Derivation, Step};
use crate::contexts::{Ctx, CtxTree};
use crate::lenses::{compose_all, lens_id, lens_rearrange, parallel, LensError, LensSpec, ShelObject, Term};
use crate::numerics::{Expr, OpKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("step {index} ({rule}): {detail}")]
    Step { index: usize, rule: String, detail: String },
    #[error(transparent)]
    Lens(#[from] LensError),
}

/// Value labels (expressions) and shift-dimension labels (first expression
/// of each base) of a list of trees, in interpretation order.
fn labels(trees: &[&CtxTree]) -> (Vec<Expr>, Vec<Expr>) {
    let mut values = Vec::new();
    let mut dims = Vec::new();
    for t in trees {
        for b in t.bases() {
            values.extend(b.exprs.iter().cloned());
            dims.push(b.exprs[0].clone());
        }
    }
    (values, dims)
}

fn object(trees: &[&CtxTree]) -> ShelObject {
    ShelObject::tensor_all(trees.iter().map(|t| t.interpret()).collect())
}

fn position(items: &[Expr], e: &Expr) -> Option<usize> {
    items.iter().position(|x| x == e)
}

/// A structural lens routing values and dimensions by label; `None` when it
/// would be the identity.
fn rearrange(
    source: ShelObject,
    src_labels: &(Vec<Expr>, Vec<Expr>),
    target: ShelObject,
    tgt_labels: &(Vec<Expr>, Vec<Expr>),
) -> Result<Option<LensSpec>, String> {
    let find = |items: &[Expr], e: &Expr| position(items, e).ok_or_else(|| format!("{e} has no source position"));
    let vals = tgt_labels
        .0
        .iter()
        .map(|e| find(&src_labels.0, e))
        .collect::<Result<Vec<_>, _>>()?;
    let dims = tgt_labels
        .1
        .iter()
        .map(|e| find(&src_labels.1, e))
        .collect::<Result<Vec<_>, _>>()?;
    let identity = source == target
        && vals.iter().enumerate().all(|(i, &v)| i == v)
        && dims.iter().enumerate().all(|(i, &d)| i == d);
    if identity {
        return Ok(None);
    }
    lens_rearrange("rearrange", source, target, &vals, &dims)
        .map(Some)
        .map_err(|e| e.to_string())
}

/// Exact solution of `R·X = B` (R: m × n, B: m × k) with free unknowns set
/// to 0. Columns are eliminated in `order`, so unknowns late in the order
/// are the first to be left free.
fn solve(r: &[Vec<Rational>], b: &[Vec<Rational>], n: usize, k: usize, order: &[usize]) -> Option<Vec<Vec<Rational>>> {
    let m = r.len();
    let mut rows: Vec<(Vec<Rational>, Vec<Rational>)> = r.iter().cloned().zip(b.iter().cloned()).collect();
    let mut pivots = Vec::new();
    let mut next = 0;
    for &c in order {
        let Some(p) = (next..m).find(|&i| rows[i].0[c] != 0) else {
            continue;
        };
        rows.swap(next, p);
        let inv = Rational::from(1) / rows[next].0[c].clone();
        let (lhs, rhs) = &mut rows[next];
        lhs.iter_mut().for_each(|x| *x *= &inv);
        rhs.iter_mut().for_each(|x| *x *= &inv);
        let pivot = rows[next].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != next && row.0[c] != 0 {
                let f = row.0[c].clone();
                for (x, y) in row.0.iter_mut().zip(&pivot.0) {
                    *x -= Rational::from(&f * y);
                }
                for (x, y) in row.1.iter_mut().zip(&pivot.1) {
                    *x -= Rational::from(&f * y);
                }
            }
        }
        pivots.push(c);
        next += 1;
    }
    if rows[next..].iter().any(|(_, rhs)| rhs.iter().any(|x| *x != 0)) {
        return None;
    }
    let mut x = vec![vec![Rational::new(); k]; n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i].1.clone();
    }
    Some(x)
}

/// The affine lens performing one step on its local trees.
fn local_lens(name: &str, src: &[&CtxTree], dst: &[&CtxTree]) -> Result<LensSpec, String> {
    let source = object(src);
    let target = object(dst);
    let (src_vals, _) = labels(src);
    let (dst_vals, _) = labels(dst);
    let a_src = source.action_matrix();
    let a_dst = target.action_matrix();
    let (ns, nt) = (source.dims(), target.dims());
    let input = |e: &Expr| position(&src_vals, e).ok_or_else(|| format!("operand {e} is not available"));

    let mut outputs = Vec::new();
    // (coefficients on b, coefficients on t, site, factor)
    let mut constraints: Vec<(Vec<i64>, Vec<i64>, Option<usize>)> = Vec::new();
    let mut sites = 0;
    let row = |i: usize| a_src[i].clone();
    let add_rows = |x: &[i64], y: &[i64], sign: i64| x.iter().zip(y).map(|(p, q)| p + sign * q).collect::<Vec<_>>();
    for (k, y) in dst_vals.iter().enumerate() {
        let a = a_dst[k].clone();
        if let Some(i) = position(&src_vals, y) {
            outputs.push(Term::input(i));
            constraints.push((row(i), a, None));
            continue;
        }
        let op = y
            .op()
            .ok_or_else(|| format!("variable {y} does not come from the source"))?;
        let args = y.children().into_iter().map(input).collect::<Result<Vec<_>, _>>()?;
        let site = sites;
        sites += 1;
        let terms: Vec<Term> = args.iter().map(|&i| Term::input(i)).collect();
        outputs.push(if op == OpKind::Div {
            Term::guarded(op, terms)
        } else {
            Term::op(op, terms)
        });
        match op {
            OpKind::Add | OpKind::Sub => {
                constraints.push((row(args[0]), a.clone(), Some(site)));
                constraints.push((row(args[1]), a, Some(site)));
            }
            OpKind::Mul => constraints.push((add_rows(&row(args[0]), &row(args[1]), 1), a, Some(site))),
            OpKind::Div => constraints.push((add_rows(&row(args[0]), &row(args[1]), -1), a, Some(site))),
            OpKind::Sqrt => {
                let a2 = a.iter().map(|x| 2 * x).collect();
                constraints.push((row(args[0]), a2, Some(site)));
            }
            other => return Err(format!("no local lens for operator {other}")),
        }
    }
    let sqrt_sites: Vec<bool> = dst_vals
        .iter()
        .filter(|y| position(&src_vals, y).is_none())
        .map(|y| y.op() == Some(OpKind::Sqrt))
        .collect();

    let r: Vec<Vec<Rational>> = constraints
        .iter()
        .map(|(b, _, _)| b.iter().map(|&x| Rational::from(x)).collect())
        .collect();
    let rhs: Vec<Vec<Rational>> = constraints
        .iter()
        .map(|(_, t, site)| {
            let mut v: Vec<Rational> = t.iter().map(|&x| Rational::from(x)).collect();
            v.extend((0..sites).map(|s| match site {
                Some(s0) if *s0 == s => Rational::from(if sqrt_sites[s] { 2 } else { 1 }),
                _ => Rational::new(),
            }));
            v
        })
        .collect();
    // Dimensions with larger bounds absorb shifts first; zero-bound
    // dimensions are left free (unshifted) whenever possible.
    let bounds = source.bounds();
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by(|&i, &j| bounds[j].cmp(&bounds[i]).then(i.cmp(&j)));
    let x = solve(&r, &rhs, ns, nt + sites, &order).ok_or("the step's shift constraints are inconsistent")?;
    let shift = x.iter().map(|row| row[..nt].to_vec()).collect();
    let delta = x.iter().map(|row| row[nt..].to_vec()).collect();
    LensSpec::affine(name, source, target, outputs, shift, Some(delta)).map_err(|e| e.to_string())
}

/// Multiset difference of the trees of two contexts: (only in `a`, only in
/// `b`, in both).
fn split_trees<'a>(a: &'a Ctx, b: &'a Ctx) -> (Vec<&'a CtxTree>, Vec<&'a CtxTree>, Vec<&'a CtxTree>) {
    let mut unmatched: Vec<Option<&CtxTree>> = b.trees.iter().map(Some).collect();
    let mut only_a = Vec::new();
    let mut common = Vec::new();
    for t in &a.trees {
        if let Some(slot) = unmatched.iter_mut().find(|s| s.is_some_and(|u| u == t)) {
            *slot = None;
            common.push(t);
        } else {
            only_a.push(t);
        }
    }
    (only_a, unmatched.into_iter().flatten().collect(), common)
}

fn step_lens(step: &Step) -> Result<Vec<LensSpec>, String> {
    let (local_src, local_dst, rest) = split_trees(&step.src, &step.dst);
    if local_src.is_empty() && local_dst.is_empty() {
        return Err("the step does not change the context".into());
    }
    let local = local_lens(&step.rule.to_string(), &local_src, &local_dst)?;
    let src_all: Vec<&CtxTree> = step.src.trees.iter().collect();
    let dst_all: Vec<&CtxTree> = step.dst.trees.iter().collect();
    let (mid_src, mid_dst, middle) = if rest.is_empty() {
        (object(&local_src), object(&local_dst), local)
    } else {
        let rest_obj = object(&rest);
        (
            ShelObject::tensor(object(&local_src), rest_obj.clone()),
            ShelObject::tensor(object(&local_dst), rest_obj.clone()),
            parallel(&local, &lens_id(&rest_obj)),
        )
    };
    let with_rest = |local: &[&CtxTree]| {
        let mut all = local.to_vec();
        all.extend(rest.iter().copied());
        labels(&all)
    };
    let mut chain = Vec::new();
    chain.extend(rearrange(
        step.src.interpret(),
        &labels(&src_all),
        mid_src,
        &with_rest(&local_src),
    )?);
    chain.push(middle);
    chain.extend(rearrange(
        mid_dst,
        &with_rest(&local_dst),
        step.dst.interpret(),
        &labels(&dst_all),
    )?);
    Ok(chain)
}

/// The lens proved by a derivation, from one base per free variable (in
/// the derivation's variable order) to the goal. Its source bounds are the
/// derivation's bound vector, and its forward float map evaluates the
/// program with one rounding per operation, in evaluation order.
pub fn derivation_to_lens(d: &Derivation) -> Result<LensSpec, ExtractError> {
    let start_error = |detail: String| ExtractError::Step {
        index: 0,
        rule: "start".into(),
        detail,
    };
    let mut ordered = Vec::with_capacity(d.vars.len());
    for v in &d.vars {
        let t = d
            .start
            .trees
            .iter()
            .find(|t| t.root.exprs[0].as_var() == Some(v.as_str()))
            .ok_or_else(|| start_error(format!("no base for variable {v}")))?;
        ordered.push(t);
    }
    if ordered.len() != d.start.trees.len() {
        return Err(start_error("the start context is not one base per variable".into()));
    }
    let start_all: Vec<&CtxTree> = d.start.trees.iter().collect();
    let mut chain = Vec::new();
    chain.extend(
        rearrange(
            object(&ordered),
            &labels(&ordered),
            d.start.interpret(),
            &labels(&start_all),
        )
        .map_err(start_error)?,
    );
    for (index, step) in d.steps.iter().enumerate() {
        let lenses = step_lens(step).map_err(|detail| ExtractError::Step {
            index,
            rule: step.rule.to_string(),
            detail,
        })?;
        chain.extend(lenses);
    }
    if chain.is_empty() {
        return Ok(lens_id(&object(&ordered)));
    }
    Ok(compose_all(&chain)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::Bound;
    use crate::lenses::{check_conditions, EvalConfig};
    use crate::numerics::{parse_expr, sample::Sampler, unit_roundoff, Format};
    use crate::synth::{analyze, extract_derivation, EngineConfig};

    fn lens_for(s: &str) -> (LensSpec, Vec<Bound>) {
        let (db, reports) = analyze(&parse_expr(s).unwrap(), &EngineConfig::default()).unwrap();
        let d = extract_derivation(&db, &reports[0]);
        (
            derivation_to_lens(&d).unwrap(),
            reports[0].bounds.values().cloned().collect(),
        )
    }

    #[test]
    fn solver_prefers_high_bound_dimensions() {
        let q = |x: i64| Rational::from(x);
        // n·b₀ + b₁ = t with b₀ unbounded-cheap: eliminating b₁ first leaves b₀ = 0.
        let x = solve(&[vec![q(2), q(1)]], &[vec![q(1)]], 2, 1, &[1, 0]).unwrap();
        assert_eq!(x, vec![vec![q(0)], vec![q(1)]]);
        assert!(solve(&[vec![q(1)], vec![q(1)]], &[vec![q(1)], vec![q(2)]], 1, 1, &[0]).is_none());
    }

    #[test]
    fn sqrt_derivation_is_a_single_sqrt_lens() {
        let (lens, bounds) = lens_for("(Sqrt a)");
        assert_eq!(lens.leaves(), vec!["sqrt"]);
        assert_eq!(bounds, vec![Bound::from_int(2)]);
        assert_eq!(lens.source_bounds(), bounds);
    }

    #[test]
    fn x_plus_xy_pipeline_shape() {
        let (lens, _) = lens_for("(Add x (Mul x y))");
        let leaves = lens.leaves();
        let named: Vec<&str> = leaves
            .iter()
            .map(String::as_str)
            .filter(|n| *n != "rearrange" && *n != "id")
            .collect();
        assert_eq!(named, vec!["dmul:0", "share_star:1", "add"]);
    }

    #[test]
    fn extracted_lenses_satisfy_the_conditions() {
        let cfg = EvalConfig::new(unit_roundoff(Format::Binary64));
        for p in [
            "(Sqrt (Add (Mul a a) (Mul b b)))",
            "(Add x (Add (Mul a x) (Mul (Mul b x) x)))",
            "(Sqrt (Add (Mul a x) (Sqrt b)))",
            "(Mul (Sqrt a) (Sqrt b))",
        ] {
            let (lens, bounds) = lens_for(p);
            assert_eq!(lens.source_bounds(), bounds, "{p}");
            let report = check_conditions(&lens, 200, &cfg, &Sampler::with_seed(7).positive());
            assert!(report.passed(), "{p}: {report:?}");
        }
    }

    #[test]
    fn identity_program_extracts_identity() {
        let (lens, bounds) = lens_for("a");
        assert_eq!(lens.leaves(), vec!["id"]);
        assert_eq!(bounds, vec![Bound::zero()]);
    }
}
