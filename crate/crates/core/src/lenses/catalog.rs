//! The named lens catalog with a suitable input sampler per entry, used by
//! the property suite and `shel lenscheck`.

use super::object::ShelObject;
use super::spec::*;
use crate::contexts::Bound;
use crate::numerics::sample::{InputDomain, Sampler};
use crate::numerics::RoundingModel;

/// One catalog lens together with the input distribution it is checked on.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub lens: LensSpec,
    pub sampler: Sampler,
}

fn entry(name: &str, lens: LensSpec, sampler: Sampler) -> CatalogEntry {
    CatalogEntry {
        name: name.to_string(),
        lens,
        sampler,
    }
}

fn b(n: u64) -> Bound {
    Bound::from_int(n)
}

/// Every primitive and structural lens, instantiated at representative
/// (nonzero, fractional where relevant) bound parameters.
pub fn catalog_suite(m: &RoundingModel, seed: u64) -> Vec<CatalogEntry> {
    let any = Sampler::with_seed(seed);
    let pos = Sampler::with_seed(seed).positive();
    let r = |p: u64| ShelObject::real(b(p));
    let star = ShelObject::star_n(r(1), r(2), 1);
    let star2 = ShelObject::star_n(ShelObject::base(2, b(1)), r(3), 2);
    let p32 = Bound::ratio(3, 2);
    let mut out = vec![
        entry("add", lens_add(&b(3)), any.clone()),
        entry("add(p=0)", lens_add(&b(0)), any.clone()),
        entry("sub", lens_sub(&b(2)), any.clone()),
        entry("mul", lens_mul(&b(1)), any.clone()),
        entry("mul(p=0)", lens_mul(&b(0)), any.clone()),
        entry("div", lens_div(&p32), any.clone()),
        entry("sqrt", lens_sqrt(&b(0)), pos.clone()),
        entry("sqrt(|x|)", lens_sqrt(&b(1)), any.clone()),
        entry(
            "log",
            lens_log(&b(0), m).expect("p = 0 satisfies p·ε ≤ 1"),
            Sampler::with_seed(seed).domains(vec![InputDomain::Range(2.0, 1e6)]),
        ),
        entry(
            "log(p=2)",
            lens_log(&b(2), m).expect("p = 2 satisfies p·ε ≤ 1"),
            Sampler::with_seed(seed).domains(vec![InputDomain::Range(2.0, 1e6)]),
        ),
        entry("dmul:0", lens_dmul(0, &b(1), &b(0)), any.clone()),
        entry("dmul:1", lens_dmul(1, &b(1), &b(2)), any.clone()),
        entry("dmul:2", lens_dmul(2, &p32, &b(1)), any.clone()),
        entry("adddiv", lens_adddiv(&b(1), &b(0), 1), any.clone()),
        entry("adddiv:2", lens_adddiv(&b(0), &b(2), 2), any.clone()),
        entry("id", lens_id(&star), any.clone()),
        entry("dup", lens_dup(1, &b(2)), any.clone()),
        entry("dup(n=2)", lens_dup(2, &p32), any.clone()),
        entry("share", lens_share_tensor(1, 2, &b(2)), any.clone()),
        entry(
            "share_star:0",
            lens_share_star(0, (1, &b(1)), (1, &b(1))).expect("side condition holds"),
            any.clone(),
        ),
        entry(
            "share_star:1",
            lens_share_star(1, (1, &b(3)), (1, &b(0))).expect("side condition holds"),
            any.clone(),
        ),
        entry(
            "share_star:2",
            lens_share_star(2, (1, &b(1)), (2, &b(1))).expect("side condition holds"),
            any.clone(),
        ),
        entry("push:1->2", lens_push((1, &b(1)), (1, &b(1)), 1, 2), any.clone()),
        entry("push:2->1", lens_push((1, &p32), (1, &b(0)), 2, 1), any.clone()),
        entry("push:1->0", lens_push((1, &b(1)), (1, &b(2)), 1, 0), any.clone()),
        entry("proj1", lens_proj1(&star).expect("star"), any.clone()),
        entry("proj2", lens_proj2(&star).expect("star"), any.clone()),
        entry("dist", lens_dist(&star, &star2).expect("stars"), any.clone()),
        entry("swap", lens_swap(&star, &r(4)), any.clone()),
        entry(
            "assoc",
            lens_assoc(&r(1), &star, &ShelObject::base(2, b(0))),
            any.clone(),
        ),
        entry("unitor", lens_unitor(&star), any.clone()),
    ];
    // Combinator instances that appear in the hand-built analyses.
    let id_root = lens_id(&r(0));
    out.push(entry(
        "parallel_star(id, add)",
        parallel_star(&id_root, &lens_add(&b(1)), &super::Hom::scalar(1, 1, 1)).expect("side condition holds"),
        any.clone(),
    ));
    out.push(entry(
        "parallel_star(id, sqrt)",
        parallel_star(&id_root, &lens_sqrt(&b(0)), &super::Hom::scalar(2, 1, 1)).expect("side condition holds"),
        any.clone(),
    ));
    out.push(entry(
        "parallel(mul, sqrt)",
        parallel(&lens_mul(&b(0)), &lens_sqrt(&b(1))),
        any,
    ));
    out
}
