//! Hand-assembled lens pipelines for worked examples, including operations
//! outside the synthesis rules (subtraction, division, add-then-divide).

use rand::Rng;

use crate::contexts::Bound;
use crate::lenses::{
    compose_all, lens_add, lens_adddiv, lens_dist, lens_div, lens_dmul, lens_dup, lens_id, lens_mul, lens_push,
    lens_rearrange, lens_share_star, lens_share_tensor, lens_sqrt, lens_sub, lens_swap, parallel, parallel_star, Hom,
    LensError, LensSpec, ShelObject,
};
use crate::numerics::sample::{InputDomain, Sampler};
use crate::numerics::{parse_expr, Expr};

/// A worked example: a program, its lens, and the bounds the lens proves.
#[derive(Clone, Debug)]
pub struct CaseStudy {
    pub name: &'static str,
    pub program: Expr,
    /// Input order of the lens source.
    pub vars: Vec<String>,
    pub lens: LensSpec,
    /// Expected source bounds, in `vars` order (ε units).
    pub expected: Vec<Bound>,
    /// Inputs inside the program's intended domain.
    pub sampler: Sampler,
}

fn b(n: u64) -> Bound {
    Bound::from_int(n)
}

fn r(n: u64) -> ShelObject {
    ShelObject::real(b(n))
}

fn tensor(a: ShelObject, c: ShelObject) -> ShelObject {
    ShelObject::tensor(a, c)
}

fn route(source: ShelObject, target: ShelObject, perm: &[usize]) -> Result<LensSpec, LensError> {
    lens_rearrange("rearrange", source, target, perm, perm)
}

fn study(
    name: &'static str,
    program: &str,
    vars: &[&str],
    lens: Result<LensSpec, LensError>,
    expected: &[u64],
    sampler: Sampler,
) -> Result<CaseStudy, LensError> {
    Ok(CaseStudy {
        name,
        program: parse_expr(program).expect("case study programs parse"),
        vars: vars.iter().map(|s| s.to_string()).collect(),
        lens: lens?,
        expected: expected.iter().map(|&n| b(n)).collect(),
        sampler,
    })
}

/// `x + xy`: dmul, then share onto a common shift, then add.
fn x_plus_xy() -> Result<LensSpec, LensError> {
    compose_all(&[
        lens_dmul(0, &b(1), &b(0)),
        lens_share_star(1, (1, &b(1)), (1, &b(0)))?,
        lens_add(&b(0)),
    ])
}

/// `x + ax²`: two dmuls raise the push scale to 2, and the share pushes the
/// inverse shift onto `a·x·x`.
fn x_plus_ax2() -> Result<LensSpec, LensError> {
    compose_all(&[
        lens_swap(&r(3), &r(1)),
        lens_dmul(0, &b(1), &b(2)),
        lens_dmul(1, &b(1), &b(1)),
        lens_share_star(2, (1, &b(1)), (1, &b(1)))?,
        lens_add(&b(0)),
    ])
}

/// `ℓ₂₂ = √(a₂₂ − (a₂₁/√a₁₁)²)` for a 2×2 positive definite matrix.
fn cholesky_l22() -> Result<LensSpec, LensError> {
    let r33 = tensor(r(3), r(3));
    compose_all(&[
        parallel(&lens_sqrt(&b(0)), &lens_id(&r33)),
        route(tensor(r(0), r33.clone()), tensor(tensor(r(3), r(0)), r(3)), &[1, 0, 2])?,
        parallel(&lens_div(&b(2)), &lens_id(&r(3))),
        parallel(&lens_dup(1, &b(2)), &lens_id(&r(3))),
        parallel(&lens_mul(&b(3)), &lens_id(&r(3))),
        lens_swap(&r(3), &r(3)),
        lens_share_tensor(1, 1, &b(3)),
        lens_sub(&b(2)),
        lens_sqrt(&b(0)),
    ])
}

/// Weighted average with error on the weights: push products are
/// flattened by `push`, then both sums share their shifts.
fn weighted_average_a() -> Result<LensSpec, LensError> {
    let pair = |w: u64, x: u64| tensor(r(w), r(x));
    let dmul = lens_dmul(0, &b(1), &b(3));
    let push = lens_push((1, &b(1)), (1, &b(2)), 1, 0);
    compose_all(&[
        route(
            tensor(r(1), tensor(r(1), tensor(r(4), r(4)))),
            tensor(pair(1, 4), pair(1, 4)),
            &[0, 2, 1, 3],
        )?,
        parallel(&dmul, &dmul),
        parallel(&push, &push),
        route(
            tensor(pair(1, 2), pair(1, 2)),
            tensor(pair(1, 1), pair(2, 2)),
            &[0, 2, 1, 3],
        )?,
        parallel(&lens_share_tensor(1, 1, &b(1)), &lens_share_tensor(1, 1, &b(2))),
        parallel(&lens_add(&b(0)), &lens_add(&b(1))),
        lens_swap(&r(0), &r(1)),
        lens_div(&b(0)),
    ])
}

/// Weighted average with exact weights: the distributor keeps the sums
/// under one push product and add-then-divide puts all error on the
/// numerator.
fn weighted_average_b() -> Result<LensSpec, LensError> {
    let pair = |w: u64, x: u64| tensor(r(w), r(x));
    let dmul = lens_dmul(0, &b(0), &b(3));
    let star = ShelObject::star_n(r(0), r(3), 1);
    let dist = lens_dist(&star, &star)?;
    let shared = parallel_star(
        &lens_share_tensor(1, 1, &b(0)),
        &lens_share_tensor(1, 1, &b(3)),
        &Hom::block_diag(&Hom::scalar(1, 1, 1), &Hom::scalar(1, 1, 1)),
    )?;
    let summed = parallel_star(
        &lens_id(&ShelObject::base(2, b(0))),
        &lens_add(&b(2)),
        &Hom::scalar(1, 1, 1),
    )?;
    compose_all(&[
        route(
            tensor(r(0), tensor(r(0), tensor(r(4), r(4)))),
            tensor(pair(0, 4), pair(0, 4)),
            &[0, 2, 1, 3],
        )?,
        parallel(&dmul, &dmul),
        dist,
        shared,
        summed,
        lens_adddiv(&b(0), &b(0), 1),
    ])
}

/// Positive definite 2×2 matrices `(a₁₁, a₂₁, a₂₂)` with `a₂₂` safely
/// above `a₂₁²/a₁₁`.
fn spd_sampler(seed: u64) -> Sampler {
    Sampler::with_seed(seed).custom(|rng| {
        let mag = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| rng.gen_range(lo..=hi).exp2();
        let a11 = mag(rng, -10.0, 10.0);
        let a21 = mag(rng, -10.0, 10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let a22 = a21 * a21 / a11 * (1.0 + mag(rng, -8.0, 4.0));
        vec![a11, a21, a22]
    })
}

/// The worked pipelines with their expected source bounds.
pub fn case_study_pipelines() -> Vec<CaseStudy> {
    let weights = Sampler::with_seed(41).domains(vec![InputDomain::Positive, InputDomain::Positive]);
    [
        study(
            "x+xy",
            "(Add x (Mul x y))",
            &["x", "y"],
            x_plus_xy(),
            &[1, 1],
            Sampler::with_seed(11),
        ),
        study(
            "x+ax^2",
            "(Add x (Mul (Mul a x) x))",
            &["a", "x"],
            x_plus_ax2(),
            &[3, 1],
            Sampler::with_seed(21),
        ),
        study(
            "cholesky-l22",
            "(Sqrt (Sub a22 (Mul (Div a21 (Sqrt a11)) (Div a21 (Sqrt a11)))))",
            &["a11", "a21", "a22"],
            cholesky_l22(),
            &[2, 3, 3],
            spd_sampler(31),
        ),
        study(
            "weighted-average-a",
            "(Div (Add (Mul w1 x1) (Mul w2 x2)) (Add w1 w2))",
            &["w1", "w2", "x1", "x2"],
            weighted_average_a(),
            &[1, 1, 4, 4],
            weights.clone(),
        ),
        study(
            "weighted-average-b",
            "(Div (Add (Mul w1 x1) (Mul w2 x2)) (Add w1 w2))",
            &["w1", "w2", "x1", "x2"],
            weighted_average_b(),
            &[0, 0, 4, 4],
            weights.seeded(43),
        ),
    ]
    .into_iter()
    .map(|s| s.expect("case study pipelines are well formed"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lenses::{check_conditions, EvalConfig};
    use crate::numerics::{unit_roundoff, Format};
    use crate::validate::certify_lens;

    #[test]
    fn pipelines_have_expected_source_bounds() {
        for c in case_study_pipelines() {
            assert_eq!(c.lens.source_bounds(), c.expected, "{}", c.name);
            assert_eq!(c.lens.target_bounds(), vec![Bound::zero()], "{}", c.name);
        }
    }

    #[test]
    fn pipelines_satisfy_conditions_and_certify() {
        let cfg = EvalConfig::new(unit_roundoff(Format::Binary64));
        for c in case_study_pipelines() {
            let rep = check_conditions(&c.lens, 200, &cfg, &c.sampler);
            assert!(rep.passed(), "{}: {rep:?}", c.name);
            let cert = certify_lens(&c.program, &c.vars, &c.lens, &c.expected, 200, &cfg, &c.sampler).unwrap();
            assert!(cert.passed, "{}: {cert:?}", c.name);
        }
    }

    #[test]
    fn exact_weights_receive_no_error() {
        let cfg = EvalConfig::new(unit_roundoff(Format::Binary64));
        let c = case_study_pipelines()
            .into_iter()
            .find(|c| c.name == "weighted-average-b")
            .unwrap();
        let cert = certify_lens(&c.program, &c.vars, &c.lens, &c.expected, 200, &cfg, &c.sampler).unwrap();
        assert_eq!(cert.max_ratio["w1"], 0.0);
        assert_eq!(cert.max_ratio["w2"], 0.0);
    }

    #[test]
    fn inverse_share_shift() {
        let l = lens_share_star(2, (1, &b(1)), (1, &b(1))).unwrap();
        let (m, _) = l.linear_parts().unwrap();
        assert_eq!(m, vec![vec![rug::Rational::from(1)], vec![rug::Rational::from(-1)]]);
    }
}
