//! Synthesis and numerical certification of per-variable backward error
//! bounds for floating-point expressions.

pub mod cli;
pub mod contexts;
pub mod lenses;
pub mod numerics;
pub mod synth;
pub mod validate;
