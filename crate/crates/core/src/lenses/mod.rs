//! The executable lens category: objects with shift actions, primitive and
//! structural lenses, combinators, concrete evaluation and randomized
//! verification of the lens conditions.

mod catalog;
mod check;
mod instance;
mod object;
mod spec;

pub use catalog::{catalog_suite, CatalogEntry};
pub use check::{check_conditions, ConditionReport, Counterexample, MAX_RETRIES};
pub use instance::{bind, forward_real, EvalConfig, LensInstance};
pub use object::{Hom, ObjectError, ShelObject, Shift};
pub use spec::{
    compose, compose_all, lens_add, lens_adddiv, lens_assoc, lens_dist, lens_div, lens_dmul, lens_dup, lens_id,
    lens_log, lens_mul, lens_proj1, lens_proj2, lens_push, lens_rearrange, lens_share_star, lens_share_tensor,
    lens_sqrt, lens_sub, lens_swap, lens_unitor, parallel, parallel_star, push_product, Affine, LensError, LensSpec,
    Term,
};
