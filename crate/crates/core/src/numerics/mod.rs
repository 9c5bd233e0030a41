//! Expressions, their exact and floating-point semantics, the rounding
//! model and the relative-precision metric.

mod eval;
mod expr;
mod extreal;
mod parse;
mod rounding;
pub mod sample;

pub use eval::{
    eval_float, eval_float_with, eval_real, eval_real_ext, eval_real_with, exact_op, round_op, rp_distance, DeltaLog,
    EvalError, OpSite, SqrtMode, Valuation,
};
pub use expr::{free_vars, Expr, OpKind};
pub use extreal::{ExtReal, DEFAULT_PRECISION, MIN_PRECISION};
pub use parse::{parse_expr, ParseError};
pub use rounding::{rounding_model, unit_roundoff, Format, RoundingModel, UnsupportedFormat};
