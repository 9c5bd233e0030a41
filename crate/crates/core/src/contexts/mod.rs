//! Syntactic contexts and their interpretation as objects.

mod bound;
mod ctx;

pub use bound::{Bound, BoundError};
pub use ctx::{canonicalize, is_start_context, Ctx, CtxBase, CtxError, CtxTree};
