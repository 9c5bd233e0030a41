//! Expression AST and its S-expression printer.

use std::fmt;

/// The primitive floating-point operations that can appear in programs and
/// lenses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Log,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "Add",
            OpKind::Sub => "Sub",
            OpKind::Mul => "Mul",
            OpKind::Div => "Div",
            OpKind::Sqrt => "Sqrt",
            OpKind::Log => "Log",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            OpKind::Sqrt | OpKind::Log => 1,
            _ => 2,
        }
    }

    /// Operators accepted by the expression parser.
    pub fn from_name(name: &str) -> Option<OpKind> {
        match name {
            "Add" => Some(OpKind::Add),
            "Sub" => Some(OpKind::Sub),
            "Mul" => Some(OpKind::Mul),
            "Div" => Some(OpKind::Div),
            "Sqrt" => Some(OpKind::Sqrt),
            _ => None,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A straight-line floating-point program over named inputs.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Var(String),
    Sqrt(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::Sqrt(Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(l: Expr, r: Expr) -> Expr {
        Expr::Add(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(l: Expr, r: Expr) -> Expr {
        Expr::Mul(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(l: Expr, r: Expr) -> Expr {
        Expr::Sub(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(l: Expr, r: Expr) -> Expr {
        Expr::Div(Box::new(l), Box::new(r))
    }

    /// Builds a binary node of the given kind.
    ///
    /// # Panics
    /// If `op` is not a binary operator.
    pub fn binary(op: OpKind, l: Expr, r: Expr) -> Expr {
        match op {
            OpKind::Add => Expr::add(l, r),
            OpKind::Sub => Expr::sub(l, r),
            OpKind::Mul => Expr::mul(l, r),
            OpKind::Div => Expr::div(l, r),
            other => panic!("{other} is not a binary expression operator"),
        }
    }

    /// The operator at the root, or `None` for a variable.
    pub fn op(&self) -> Option<OpKind> {
        match self {
            Expr::Var(_) => None,
            Expr::Sqrt(_) => Some(OpKind::Sqrt),
            Expr::Add(..) => Some(OpKind::Add),
            Expr::Mul(..) => Some(OpKind::Mul),
            Expr::Sub(..) => Some(OpKind::Sub),
            Expr::Div(..) => Some(OpKind::Div),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var(_) => vec![],
            Expr::Sqrt(a) => vec![a],
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Sub(a, b) | Expr::Div(a, b) => vec![a, b],
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Number of floating-point operations (rounding sites).
    pub fn op_count(&self) -> usize {
        match self {
            Expr::Var(_) => 0,
            _ => 1 + self.children().iter().map(|c| c.op_count()).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Whether the expression contains any operator outside `allowed`.
    pub fn first_op_outside(&self, allowed: &[OpKind]) -> Option<OpKind> {
        if let Some(op) = self.op() {
            if !allowed.contains(&op) {
                return Some(op);
            }
        }
        self.children().into_iter().find_map(|c| c.first_op_outside(allowed))
    }

    /// Stable serialization used as the canonical ordering key.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

/// Free variables in first-occurrence, left-to-right order, without
/// duplicates.
pub fn free_vars(e: &Expr) -> Vec<String> {
    fn go(e: &Expr, out: &mut Vec<String>) {
        match e {
            Expr::Var(v) => {
                if !out.iter().any(|w| w == v) {
                    out.push(v.clone());
                }
            }
            _ => {
                for c in e.children() {
                    go(c, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(e, &mut out);
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Sqrt(a) => write!(f, "(Sqrt {a})"),
            Expr::Add(a, b) => write!(f, "(Add {a} {b})"),
            Expr::Mul(a, b) => write!(f, "(Mul {a} {b})"),
            Expr::Sub(a, b) => write!(f, "(Sub {a} {b})"),
            Expr::Div(a, b) => write!(f, "(Div {a} {b})"),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Expr {
        Expr::var(s)
    }

    #[test]
    fn free_vars_first_occurrence() {
        let e = Expr::add(Expr::mul(v("a"), v("a")), Expr::mul(v("b"), v("b")));
        assert_eq!(free_vars(&e), vec!["a", "b"]);
        assert_eq!(free_vars(&v("x")), vec!["x"]);
        let e = Expr::add(v("x"), Expr::mul(v("a"), v("x")));
        assert_eq!(free_vars(&e), vec!["x", "a"]);
    }

    #[test]
    fn printing() {
        let e = Expr::add(Expr::mul(v("a"), v("a")), Expr::sqrt(v("b")));
        assert_eq!(e.to_string(), "(Add (Mul a a) (Sqrt b))");
        assert_eq!(e.op_count(), 3);
        assert_eq!(e.depth(), 3);
    }

    #[test]
    fn operator_screening() {
        let e = Expr::add(v("a"), Expr::div(v("b"), v("c")));
        let allowed = [OpKind::Add, OpKind::Mul, OpKind::Sqrt];
        assert_eq!(e.first_op_outside(&allowed), Some(OpKind::Div));
        assert_eq!(v("a").first_op_outside(&allowed), None);
    }
}
