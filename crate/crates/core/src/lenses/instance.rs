//! Concrete evaluation of lenses: the exact forward map `f`, the
//! floating-point forward map `f̃` (recording every rounding error), and the
//! backward map `b` over the recorded errors.

use rug::Rational;

use super::object::Shift;
use super::spec::{Affine, LensError, LensSpec, Node, Term};
use crate::numerics::{
    exact_op, round_op, EvalError, ExtReal, OpKind, OpSite, RoundingModel, SqrtMode, DEFAULT_PRECISION,
};

/// Evaluation parameters shared by every lens operation.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub model: RoundingModel,
    /// Oracle precision in bits.
    pub prec: u32,
    pub sqrt_mode: SqrtMode,
}

impl EvalConfig {
    pub fn new(model: RoundingModel) -> Self {
        EvalConfig {
            model,
            prec: DEFAULT_PRECISION,
            sqrt_mode: SqrtMode::default(),
        }
    }

    pub fn with_precision(mut self, prec: u32) -> Self {
        self.prec = prec;
        self
    }

    /// `ε` at the oracle precision.
    pub fn eps(&self) -> ExtReal {
        self.model.eps_ext(self.prec)
    }

    /// Slack `2^-(P-16)` added to norm comparisons.
    pub fn norm_slack(&self) -> ExtReal {
        ExtReal::pow2(-(self.prec as i32 - 16), self.prec)
    }

    /// Residual tolerance `2^-(P/2)` for exactness checks.
    pub fn residual_tolerance(&self) -> ExtReal {
        ExtReal::pow2(-(self.prec as i32 / 2), self.prec)
    }
}

#[derive(Clone, Debug)]
enum Trace {
    Affine(Vec<ExtReal>),
    Log { x: f64, y: f64 },
    Pair(Box<Trace>, Box<Trace>),
}

/// A lens bound to concrete machine inputs.
#[derive(Clone, Debug)]
pub struct LensInstance {
    spec: LensSpec,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    trace: Trace,
    prec: u32,
}

impl LensInstance {
    pub fn spec(&self) -> &LensSpec {
        &self.spec
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// The floating-point outputs `f̃(x)`.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// All recorded rounding errors in site order.
    pub fn deltas(&self) -> Vec<ExtReal> {
        fn go(t: &Trace, out: &mut Vec<ExtReal>) {
            match t {
                Trace::Affine(d) => out.extend(d.iter().cloned()),
                Trace::Log { .. } => {}
                Trace::Pair(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(&self.trace, &mut out);
        out
    }

    /// `b(t)`, with the precondition `|t_j| ≤ q_j·ε` enforced.
    pub fn backward(&self, t: &Shift, cfg: &EvalConfig) -> Result<Shift, LensError> {
        let bounds = self.spec.target_bounds();
        if t.dims() != bounds.len() {
            return Err(LensError::Object(super::object::ObjectError::ShiftArity {
                expected: bounds.len(),
                found: t.dims(),
            }));
        }
        let eps = cfg.eps();
        let slack = cfg.norm_slack();
        for (j, (tj, qj)) in t.0.iter().zip(&bounds).enumerate() {
            let lim = &eps.mul_rational(qj.as_rational()) + &slack;
            if tj.abs() > lim {
                return Err(LensError::ShiftOutOfBound {
                    dim: j,
                    value: tj.to_string(),
                    bound: qj.clone(),
                });
            }
        }
        Ok(backward_rec(&self.spec, &self.trace, t, self.prec))
    }

    /// `b(t)` without the precondition (used to probe unsound lenses).
    pub fn backward_unchecked(&self, t: &Shift) -> Shift {
        backward_rec(&self.spec, &self.trace, t, self.prec)
    }

    /// The witness `x * b(0)`.
    pub fn witness(&self) -> Result<Vec<ExtReal>, LensError> {
        let b = self.backward_unchecked(&Shift::zero(self.spec.target().dims(), self.prec));
        let xs: Vec<ExtReal> = self.inputs.iter().map(|&x| ExtReal::from_f64(x, self.prec)).collect();
        Ok(self.spec.source().act(&xs, &b)?)
    }
}

/// Runs the floating-point forward map on `inputs`, recording every `δ`.
pub fn bind(spec: &LensSpec, inputs: &[f64], cfg: &EvalConfig) -> Result<LensInstance, LensError> {
    if inputs.len() != spec.source().arity() {
        return Err(LensError::Object(super::object::ObjectError::ValueArity {
            expected: spec.source().arity(),
            found: inputs.len(),
        }));
    }
    for &x in inputs {
        if !cfg.model.format.represents(x) {
            return Err(LensError::Eval(EvalError::NotRepresentable {
                var: "lens input".into(),
                value: x,
                format: cfg.model.format,
            }));
        }
    }
    let (outputs, trace) = forward_float(spec, inputs, cfg)?;
    Ok(LensInstance {
        spec: spec.clone(),
        inputs: inputs.to_vec(),
        outputs,
        trace,
        prec: cfg.prec,
    })
}

fn forward_float(spec: &LensSpec, inputs: &[f64], cfg: &EvalConfig) -> Result<(Vec<f64>, Trace), LensError> {
    match spec.node() {
        Node::Affine(a) => {
            let mut deltas = vec![ExtReal::zero(cfg.prec); a.sites];
            let outs = a
                .outputs
                .iter()
                .map(|t| float_term(t, inputs, cfg, &mut deltas))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((outs, Trace::Affine(deltas)))
        }
        Node::Log { max_finite } => {
            let x = inputs[0];
            log_domain(&ExtReal::from_f64(x, cfg.prec), max_finite)?;
            let site = OpSite {
                index: 0,
                op: OpKind::Log,
            };
            let (y, _) = round_op(OpKind::Log, &[x], cfg.model.format, cfg.prec, cfg.sqrt_mode, site)?;
            Ok((vec![y], Trace::Log { x, y }))
        }
        Node::Compose(l1, l2) => {
            let (mid, t1) = forward_float(l1, inputs, cfg)?;
            let (out, t2) = forward_float(l2, &mid, cfg)?;
            Ok((out, Trace::Pair(Box::new(t1), Box::new(t2))))
        }
        Node::Parallel(l1, l2) | Node::ParallelStar(l1, l2) => {
            let k = l1.source().arity();
            let (mut o1, t1) = forward_float(l1, &inputs[..k], cfg)?;
            let (o2, t2) = forward_float(l2, &inputs[k..], cfg)?;
            o1.extend(o2);
            Ok((o1, Trace::Pair(Box::new(t1), Box::new(t2))))
        }
    }
}

fn float_term(t: &Term, inputs: &[f64], cfg: &EvalConfig, deltas: &mut [ExtReal]) -> Result<f64, LensError> {
    match t {
        Term::Input(i) => Ok(inputs[*i]),
        Term::Op {
            op,
            args,
            site,
            guarded,
        } => {
            let xs = args
                .iter()
                .map(|a| float_term(a, inputs, cfg, deltas))
                .collect::<Result<Vec<_>, _>>()?;
            if *guarded {
                match op {
                    OpKind::Div if xs[1] == 0.0 => return Ok(0.0),
                    OpKind::Add if xs[0] + xs[1] == 0.0 => return Ok(0.0),
                    OpKind::Sub if xs[0] - xs[1] == 0.0 => return Ok(0.0),
                    _ => {}
                }
            }
            let s = OpSite { index: *site, op: *op };
            let (r, d) = round_op(*op, &xs, cfg.model.format, cfg.prec, cfg.sqrt_mode, s)?;
            deltas[*site] = d;
            Ok(r)
        }
    }
}

fn log_domain(x: &ExtReal, max_finite: &Rational) -> Result<(), LensError> {
    let a = ExtReal::from_rational(max_finite, x.precision());
    if *x < 1.0 || *x > a {
        return Err(LensError::LogDomain { value: x.to_string() });
    }
    Ok(())
}

/// The exact forward map `f` at extended-precision inputs.
pub fn forward_real(spec: &LensSpec, inputs: &[ExtReal], mode: SqrtMode) -> Result<Vec<ExtReal>, LensError> {
    match spec.node() {
        Node::Affine(a) => a.outputs.iter().map(|t| real_term(t, inputs, mode)).collect(),
        Node::Log { max_finite } => {
            log_domain(&inputs[0], max_finite)?;
            Ok(vec![inputs[0].ln()])
        }
        Node::Compose(l1, l2) => {
            let mid = forward_real(l1, inputs, mode)?;
            forward_real(l2, &mid, mode)
        }
        Node::Parallel(l1, l2) | Node::ParallelStar(l1, l2) => {
            let k = l1.source().arity();
            let mut o1 = forward_real(l1, &inputs[..k], mode)?;
            o1.extend(forward_real(l2, &inputs[k..], mode)?);
            Ok(o1)
        }
    }
}

fn real_term(t: &Term, inputs: &[ExtReal], mode: SqrtMode) -> Result<ExtReal, LensError> {
    match t {
        Term::Input(i) => Ok(inputs[*i].clone()),
        Term::Op {
            op,
            args,
            site,
            guarded,
        } => {
            let xs = args
                .iter()
                .map(|a| real_term(a, inputs, mode))
                .collect::<Result<Vec<_>, _>>()?;
            if *guarded && *op == OpKind::Div && xs[1].is_zero() {
                return Ok(ExtReal::zero(xs[0].precision()));
            }
            Ok(exact_op(*op, &xs, mode, OpSite { index: *site, op: *op })?)
        }
    }
}

fn affine_backward(a: &Affine, deltas: &[ExtReal], t: &Shift, prec: u32) -> Shift {
    Shift(
        a.shift
            .iter()
            .zip(&a.delta)
            .map(|(mrow, crow)| {
                let mut acc = ExtReal::zero(prec);
                for (m, tj) in mrow.iter().zip(&t.0) {
                    if *m != 0 {
                        acc = &acc + &tj.mul_rational(m);
                    }
                }
                for (c, dk) in crow.iter().zip(deltas) {
                    if *c != 0 {
                        acc = &acc + &dk.mul_rational(c);
                    }
                }
                acc
            })
            .collect(),
    )
}

fn backward_rec(spec: &LensSpec, trace: &Trace, t: &Shift, prec: u32) -> Shift {
    match (spec.node(), trace) {
        (Node::Affine(a), Trace::Affine(d)) => affine_backward(a, d, t, prec),
        (Node::Log { .. }, Trace::Log { x, y }) => {
            // x̃ = exp(y·e^t)  ⇒  shift on x is y·e^t − ln x.
            let yv = ExtReal::from_f64(*y, prec);
            let xv = ExtReal::from_f64(*x, prec);
            Shift(vec![&(&yv * &t.0[0].exp()) - &xv.ln()])
        }
        (Node::Compose(l1, l2), Trace::Pair(t1, t2)) => {
            let mid = backward_rec(l2, t2, t, prec);
            backward_rec(l1, t1, &mid, prec)
        }
        (Node::Parallel(l1, l2) | Node::ParallelStar(l1, l2), Trace::Pair(t1, t2)) => {
            let (a, b) = t.split_at(l1.target().dims());
            backward_rec(l1, t1, &a, prec).concat(backward_rec(l2, t2, &b, prec))
        }
        _ => unreachable!("trace shape follows the lens tree"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::Bound;
    use crate::lenses::spec::*;
    use crate::numerics::{rp_distance, unit_roundoff, Format};

    fn cfg() -> EvalConfig {
        EvalConfig::new(unit_roundoff(Format::Binary64))
    }

    #[test]
    fn add_backward_at_zero_is_delta() {
        let l = lens_add(&Bound::zero());
        let c = cfg();
        let inst = bind(&l, &[1.0, 2f64.powi(-60)], &c).unwrap();
        assert_eq!(inst.outputs(), &[1.0]);
        let b = inst.backward(&Shift::zero(1, c.prec), &c).unwrap();
        assert_eq!(b.0[0], inst.deltas()[0]);
        assert!(b.0[0].abs() <= c.eps());
    }

    #[test]
    fn mul_backward_at_zero_is_half_delta() {
        let l = lens_mul(&Bound::zero());
        let c = cfg();
        let inst = bind(&l, &[1.1, 1.3], &c).unwrap();
        let b = inst.backward(&Shift::zero(1, c.prec), &c).unwrap();
        let half = inst.deltas()[0].mul_rational(&Rational::from((1, 2)));
        assert_eq!(b.0[0], half);
    }

    #[test]
    fn sqrt_backward_at_zero_is_twice_delta() {
        let l = lens_sqrt(&Bound::zero());
        let c = cfg();
        let inst = bind(&l, &[2.0], &c).unwrap();
        let b = inst.backward(&Shift::zero(1, c.prec), &c).unwrap();
        assert_eq!(b.0[0], inst.deltas()[0].mul_i64(2));
    }

    #[test]
    fn dmul_backward_at_zero_moves_error_to_second() {
        let l = lens_dmul(1, &Bound::from_int(1), &Bound::zero());
        let c = cfg();
        let inst = bind(&l, &[1.1, 1.7], &c).unwrap();
        assert_eq!(inst.outputs()[0], 1.1);
        let b = inst.backward(&Shift::zero(2, c.prec), &c).unwrap();
        assert!(b.0[0].is_zero());
        assert_eq!(b.0[1], inst.deltas()[0]);
    }

    #[test]
    fn div_zero_denominator_convention() {
        let l = lens_div(&Bound::zero());
        let c = cfg();
        let inst = bind(&l, &[3.0, 0.0], &c).unwrap();
        assert_eq!(inst.outputs(), &[0.0]);
        let b = inst.backward(&Shift::zero(1, c.prec), &c).unwrap();
        let xs = vec![ExtReal::from_f64(3.0, c.prec), ExtReal::zero(c.prec)];
        let moved = l.source().act(&xs, &b).unwrap();
        let f = forward_real(&l, &moved, SqrtMode::Abs).unwrap();
        assert!(f[0].is_zero());
    }

    #[test]
    fn adddiv_cancelling_denominator_returns_zero() {
        let l = lens_adddiv(&Bound::zero(), &Bound::zero(), 1);
        let c = cfg();
        let inst = bind(&l, &[2.5, -2.5, 7.0], &c).unwrap();
        assert_eq!(inst.outputs(), &[0.0]);
        let w = inst.witness().unwrap();
        let f = forward_real(&l, &w, SqrtMode::Abs).unwrap();
        assert!(f[0].is_zero());
    }

    #[test]
    fn log_witness_is_fixed_point_at_e() {
        let c = cfg();
        let l = lens_log(&Bound::zero(), &c.model).unwrap();
        let e = std::f64::consts::E;
        let inst = bind(&l, &[e], &c).unwrap();
        let w = inst.witness().unwrap();
        let f = forward_real(&l, &w, SqrtMode::Abs).unwrap();
        let y = ExtReal::from_f64(inst.outputs()[0], c.prec);
        assert!(rp_distance(&f[0], &y) < c.residual_tolerance());
        assert!(bind(&l, &[0.5], &c).is_err());
    }

    #[test]
    fn backward_rejects_out_of_bound_shift() {
        let l = lens_add(&Bound::zero());
        let c = cfg();
        let inst = bind(&l, &[1.0, 2.0], &c).unwrap();
        let t = Shift(vec![ExtReal::from_f64(1e-10, c.prec)]);
        assert!(matches!(inst.backward(&t, &c), Err(LensError::ShiftOutOfBound { .. })));
    }
}
