//! Objects of the lens category: value spaces together with a group of
//! shifts `(ℝᵏ, +, 0)` acting multiplicatively (`x * s = x·e^s`) and a
//! componentwise bound on admissible shifts.

use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::contexts::Bound;
use crate::numerics::ExtReal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectError {
    #[error("expected {expected} values but got {found}")]
    ValueArity { expected: usize, found: usize },
    #[error("expected a shift of dimension {expected} but got {found}")]
    ShiftArity { expected: usize, found: usize },
    #[error("homomorphism of shape {rows}x{cols} does not fit root dimension {root} and dependent dimension {dep}")]
    HomShape {
        rows: usize,
        cols: usize,
        root: usize,
        dep: usize,
    },
}

/// An integer matrix `H` (dependent dims × root dims) encoding the group
/// homomorphism `i(s) = H·s` of a push product.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Hom {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl Hom {
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Hom {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged homomorphism matrix");
        Hom {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// `s ↦ n·s`: broadcast from a one-dimensional root, or `n·I` when the
    /// dimensions agree.
    pub fn scalar(n: i64, root_dims: usize, dep_dims: usize) -> Hom {
        let mut data = vec![0; root_dims * dep_dims];
        for r in 0..dep_dims {
            if root_dims == 1 {
                data[r] = n;
            } else {
                assert_eq!(
                    root_dims, dep_dims,
                    "scalar homomorphism needs a 1-dimensional root or equal dimensions"
                );
                data[r * root_dims + r] = n;
            }
        }
        Hom {
            rows: dep_dims,
            cols: root_dims,
            data,
        }
    }

    /// Per-dependent-dimension scales from a one-dimensional root.
    pub fn column(scales: &[i64]) -> Hom {
        Hom {
            rows: scales.len(),
            cols: 1,
            data: scales.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// Block-diagonal combination (the distributor's "parallel application
    /// of homomorphisms").
    pub fn block_diag(a: &Hom, b: &Hom) -> Hom {
        let mut rows = vec![vec![0; a.cols + b.cols]; a.rows + b.rows];
        for (r, row) in rows.iter_mut().enumerate().take(a.rows) {
            for (c, x) in row.iter_mut().enumerate().take(a.cols) {
                *x = a.get(r, c);
            }
        }
        for r in 0..b.rows {
            for c in 0..b.cols {
                rows[a.rows + r][a.cols + c] = b.get(r, c);
            }
        }
        Hom::from_rows(rows)
    }

    /// If every entry equals the same scale, that scale.
    pub fn uniform_scale(&self) -> Option<i64> {
        if self.cols == 1 {
            let first = *self.data.first()?;
            self.data.iter().all(|&x| x == first).then_some(first)
        } else {
            None
        }
    }
}

impl fmt::Debug for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.uniform_scale() {
            write!(f, "{n}")
        } else {
            write!(f, "{:?}", self.to_rows())
        }
    }
}

/// Shape of an object, with bounds in units of ε.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ShelObject {
    /// The monoidal unit: no values, no shifts.
    Unit,
    /// `arity` real values sharing one shift dimension (a share product when
    /// `arity > 1`), with shift bound `bound·ε`.
    Base {
        arity: usize,
        bound: Bound,
    },
    Tensor(Box<ShelObject>, Box<ShelObject>),
    /// Push product: shifting the root by `s` also shifts the dependent by
    /// `hom·s`.
    Star {
        root: Box<ShelObject>,
        dep: Box<ShelObject>,
        hom: Hom,
    },
}

impl ShelObject {
    pub fn base(arity: usize, bound: Bound) -> ShelObject {
        ShelObject::Base { arity, bound }
    }

    pub fn real(bound: Bound) -> ShelObject {
        ShelObject::base(1, bound)
    }

    pub fn tensor(a: ShelObject, b: ShelObject) -> ShelObject {
        ShelObject::Tensor(Box::new(a), Box::new(b))
    }

    /// Right-nested tensor of a list; `Unit` when empty.
    pub fn tensor_all(mut items: Vec<ShelObject>) -> ShelObject {
        match items.len() {
            0 => ShelObject::Unit,
            1 => items.pop().expect("one item"),
            _ => {
                let first = items.remove(0);
                ShelObject::tensor(first, ShelObject::tensor_all(items))
            }
        }
    }

    pub fn star(root: ShelObject, dep: ShelObject, hom: Hom) -> Result<ShelObject, ObjectError> {
        if hom.rows != dep.dims() || hom.cols != root.dims() {
            return Err(ObjectError::HomShape {
                rows: hom.rows,
                cols: hom.cols,
                root: root.dims(),
                dep: dep.dims(),
            });
        }
        Ok(ShelObject::Star {
            root: Box::new(root),
            dep: Box::new(dep),
            hom,
        })
    }

    /// Push product with `i(s) = n·s`.
    pub fn star_n(root: ShelObject, dep: ShelObject, n: i64) -> ShelObject {
        let hom = Hom::scalar(n, root.dims(), dep.dims());
        ShelObject::star(root, dep, hom).expect("scalar homomorphism has matching shape")
    }

    /// Number of values.
    pub fn arity(&self) -> usize {
        match self {
            ShelObject::Unit => 0,
            ShelObject::Base { arity, .. } => *arity,
            ShelObject::Tensor(a, b) => a.arity() + b.arity(),
            ShelObject::Star { root, dep, .. } => root.arity() + dep.arity(),
        }
    }

    /// Number of shift dimensions.
    pub fn dims(&self) -> usize {
        match self {
            ShelObject::Unit => 0,
            ShelObject::Base { .. } => 1,
            ShelObject::Tensor(a, b) => a.dims() + b.dims(),
            ShelObject::Star { root, dep, .. } => root.dims() + dep.dims(),
        }
    }

    /// Shift bounds per dimension.
    pub fn bounds(&self) -> Vec<Bound> {
        let mut out = Vec::new();
        self.collect_bounds(&mut out);
        out
    }

    fn collect_bounds(&self, out: &mut Vec<Bound>) {
        match self {
            ShelObject::Unit => {}
            ShelObject::Base { bound, .. } => out.push(bound.clone()),
            ShelObject::Tensor(a, b) => {
                a.collect_bounds(out);
                b.collect_bounds(out);
            }
            ShelObject::Star { root, dep, .. } => {
                root.collect_bounds(out);
                dep.collect_bounds(out);
            }
        }
    }

    /// The integer matrix `A` (values × dims) such that value `k` is shifted
    /// by `(A·s)_k`.
    pub fn action_matrix(&self) -> Vec<Vec<i64>> {
        match self {
            ShelObject::Unit => vec![],
            ShelObject::Base { arity, .. } => vec![vec![1]; *arity],
            ShelObject::Tensor(a, b) => {
                let (ma, mb) = (a.action_matrix(), b.action_matrix());
                let (da, db) = (a.dims(), b.dims());
                let mut rows = Vec::with_capacity(ma.len() + mb.len());
                for r in ma {
                    let mut row = r;
                    row.resize(da + db, 0);
                    rows.push(row);
                }
                for r in mb {
                    let mut row = vec![0; da];
                    row.extend(r);
                    rows.push(row);
                }
                rows
            }
            ShelObject::Star { root, dep, hom } => {
                let (mr, md) = (root.action_matrix(), dep.action_matrix());
                let (dr, dd) = (root.dims(), dep.dims());
                let mut rows = Vec::with_capacity(mr.len() + md.len());
                for r in mr {
                    let mut row = r;
                    row.resize(dr + dd, 0);
                    rows.push(row);
                }
                for r in md {
                    // dependent value: A_dep (H s_root + s_dep)
                    let mut row = vec![0; dr];
                    for (c, slot) in row.iter_mut().enumerate() {
                        *slot = (0..dd).map(|k| r[k] * hom.get(k, c)).sum();
                    }
                    row.extend(r);
                    rows.push(row);
                }
                rows
            }
        }
    }

    /// Applies a shift: `x * s`.
    pub fn act(&self, values: &[ExtReal], s: &Shift) -> Result<Vec<ExtReal>, ObjectError> {
        if values.len() != self.arity() {
            return Err(ObjectError::ValueArity {
                expected: self.arity(),
                found: values.len(),
            });
        }
        if s.0.len() != self.dims() {
            return Err(ObjectError::ShiftArity {
                expected: self.dims(),
                found: s.0.len(),
            });
        }
        let a = self.action_matrix();
        Ok(values
            .iter()
            .zip(a.iter())
            .map(|(x, row)| {
                let prec = x.precision();
                let mut total = ExtReal::zero(prec);
                for (coef, sj) in row.iter().zip(&s.0) {
                    if *coef != 0 {
                        total = &total + &sj.mul_i64(*coef);
                    }
                }
                if total.is_zero() {
                    x.clone()
                } else {
                    x * &total.exp()
                }
            })
            .collect())
    }

    pub fn is_base(&self) -> bool {
        matches!(self, ShelObject::Base { .. })
    }
}

impl fmt::Display for ShelObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShelObject::Unit => write!(f, "I"),
            ShelObject::Base { arity, bound } => {
                if *arity == 1 {
                    write!(f, "R[{bound}]")
                } else {
                    write!(f, "R^{arity}[{bound}]")
                }
            }
            ShelObject::Tensor(a, b) => write!(f, "({a} ⊗ {b})"),
            ShelObject::Star { root, dep, hom } => write!(f, "({root} ⋆{hom:?} {dep})"),
        }
    }
}

impl fmt::Debug for ShelObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An element of the shift group `ℝᵏ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shift(pub Vec<ExtReal>);

impl Shift {
    pub fn zero(dims: usize, prec: u32) -> Shift {
        Shift(vec![ExtReal::zero(prec); dims])
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    /// Componentwise absolute value.
    pub fn norm(&self) -> Vec<ExtReal> {
        self.0.iter().map(|x| x.abs()).collect()
    }

    pub fn plus(&self, other: &Shift) -> Shift {
        Shift(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn concat(mut self, other: Shift) -> Shift {
        self.0.extend(other.0);
        self
    }

    pub fn split_at(&self, k: usize) -> (Shift, Shift) {
        (Shift(self.0[..k].to_vec()), Shift(self.0[k..].to_vec()))
    }
}

/// `Σ_j |m_ij|·q_j` for each row `i` (exact).
pub(crate) fn weighted_row_sums(m: &[Vec<Rational>], q: &[Bound]) -> Vec<Rational> {
    m.iter()
        .map(|row| {
            row.iter().zip(q).fold(Rational::new(), |acc, (c, b)| {
                acc + Rational::from(c.abs_ref()) * b.as_rational()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rp_distance, DEFAULT_PRECISION};

    const P: u32 = DEFAULT_PRECISION;

    fn x(v: f64) -> ExtReal {
        ExtReal::from_f64(v, P)
    }

    #[test]
    fn identity_shift_fixes_values() {
        let o = ShelObject::real(Bound::zero());
        let out = o.act(&[x(2.0)], &Shift::zero(1, P)).unwrap();
        assert_eq!(out[0].to_f64(), 2.0);
    }

    #[test]
    fn star_action_pushes_root_shift() {
        let o = ShelObject::star_n(ShelObject::real(1.into()), ShelObject::real(0.into()), 1);
        let (s, t) = (x(1e-3), x(2e-3));
        let out = o.act(&[x(3.0), x(5.0)], &Shift(vec![s.clone(), t.clone()])).unwrap();
        let want0 = &x(3.0) * &s.exp();
        let want1 = &x(5.0) * &(&s + &t).exp();
        assert!(rp_distance(&out[0], &want0) < ExtReal::pow2(-240, P));
        assert!(rp_distance(&out[1], &want1) < ExtReal::pow2(-240, P));
    }

    #[test]
    fn action_matrices() {
        let shared = ShelObject::base(2, 0.into());
        assert_eq!(shared.action_matrix(), vec![vec![1], vec![1]]);
        let t = ShelObject::tensor(ShelObject::real(0.into()), shared.clone());
        assert_eq!(t.action_matrix(), vec![vec![1, 0], vec![0, 1], vec![0, 1]]);
        let s = ShelObject::star_n(ShelObject::real(0.into()), shared, 3);
        assert_eq!(s.action_matrix(), vec![vec![1, 0], vec![3, 1], vec![3, 1]]);
        assert_eq!(s.arity(), 3);
        assert_eq!(s.dims(), 2);
    }

    #[test]
    fn star_shape_is_checked() {
        let bad = ShelObject::star(
            ShelObject::real(0.into()),
            ShelObject::real(0.into()),
            Hom::column(&[1, 1]),
        );
        assert!(matches!(bad, Err(ObjectError::HomShape { .. })));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let o = ShelObject::real(0.into());
        assert!(o.act(&[x(1.0), x(2.0)], &Shift::zero(1, P)).is_err());
        assert!(o.act(&[x(1.0)], &Shift::zero(2, P)).is_err());
    }

    #[test]
    fn tensor_all_nests_right() {
        let r = || ShelObject::real(0.into());
        let t = ShelObject::tensor_all(vec![r(), r(), r()]);
        assert_eq!(t, ShelObject::tensor(r(), ShelObject::tensor(r(), r())));
        assert_eq!(ShelObject::tensor_all(vec![]), ShelObject::Unit);
    }
}
