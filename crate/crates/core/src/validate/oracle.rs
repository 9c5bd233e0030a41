//! Closed-form witnesses from hand analyses.

use rug::Rational;

use crate::lenses::EvalConfig;
use crate::numerics::{eval_float_with, EvalError, Expr, ExtReal, Valuation};

/// The two-term dot product `x₁y₁ + x₂y₂`, evaluated in this order.
pub fn dotprod_program() -> Expr {
    Expr::add(
        Expr::mul(Expr::var("x1"), Expr::var("y1")),
        Expr::mul(Expr::var("x2"), Expr::var("y2")),
    )
}

/// A closed-form witness with the computed output it reproduces.
#[derive(Clone, Debug)]
pub struct DotWitness {
    /// `f̃(x, y)`.
    pub computed: f64,
    /// `(x̃₁, x̃₂, ỹ₁, ỹ₂)`.
    pub witness: [ExtReal; 4],
}

/// The textbook witness for the dot product: with `δ₁, δ₂` the errors of
/// the products and `δ₃` the error of the sum,
/// `x̃ᵢ = xᵢ·e^{(δᵢ+δ₃)/2}` and `ỹᵢ = yᵢ·e^{(δᵢ+δ₃)/2}`.
pub fn oracle_dotprod(x1: f64, x2: f64, y1: f64, y2: f64, cfg: &EvalConfig) -> Result<DotWitness, EvalError> {
    let v = Valuation::new()
        .with("x1", x1)
        .with("x2", x2)
        .with("y1", y1)
        .with("y2", y2);
    let (computed, log) = eval_float_with(&dotprod_program(), &v, &cfg.model, cfg.prec, cfg.sqrt_mode)?;
    let d: Vec<&ExtReal> = log.deltas().collect();
    let half = Rational::from((1, 2));
    let scale = |x: f64, di: &ExtReal| {
        let s = (di + d[2]).mul_rational(&half);
        &ExtReal::from_f64(x, cfg.prec) * &s.exp()
    };
    Ok(DotWitness {
        computed,
        witness: [scale(x1, d[0]), scale(x2, d[1]), scale(y1, d[0]), scale(y2, d[1])],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eval_real_ext, rp_distance, unit_roundoff, Format};

    fn cfg() -> EvalConfig {
        EvalConfig::new(unit_roundoff(Format::Binary64))
    }

    #[test]
    fn exact_inputs_are_their_own_witness() {
        let w = oracle_dotprod(1.0, 2.0, 3.0, 4.0, &cfg()).unwrap();
        assert_eq!(w.computed, 11.0);
        for (x, v) in w.witness.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert_eq!(*x, v);
        }
    }

    #[test]
    fn witness_is_exact_and_within_eps() {
        let c = cfg();
        let (x1, x2, y1, y2) = (0.1, -0.7, 1.3, 2.9);
        let w = oracle_dotprod(x1, x2, y1, y2, &c).unwrap();
        let names = ["x1", "x2", "y1", "y2"];
        let lookup = |n: &str| names.iter().position(|m| *m == n).map(|k| w.witness[k].clone());
        let f = eval_real_ext(&dotprod_program(), &lookup, c.sqrt_mode).unwrap();
        assert!(rp_distance(&f, &ExtReal::from_f64(w.computed, c.prec)) < c.residual_tolerance());
        for (x, wt) in [x1, x2, y1, y2].iter().zip(&w.witness) {
            let d = rp_distance(&ExtReal::from_f64(*x, c.prec), wt);
            assert!(d <= &c.eps() + &c.norm_slack());
        }
    }
}
