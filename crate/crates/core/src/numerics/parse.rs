//! S-expression reader for programs.
//!
//! Grammar (whitespace-insensitive, operators case-sensitive):
//!
//! ```text
//! expr  ::= ident | "(" op expr+ ")" | "(" "Var" (ident | string) ")"
//! op    ::= Add | Mul | Sub | Div | Sqrt
//! ident ::= [A-Za-z_][A-Za-z0-9_']*
//! ```
//!
//! The `(Var "a")` form mirrors the constructor-style listing used by
//! Datalog front ends and is accepted as a synonym for the bare identifier.

use thiserror::Error;

use super::expr::{Expr, OpKind};

/// A syntax error with the byte offset at which it was detected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("unexpected end of input at position {pos} (unbalanced parentheses?)")]
    UnexpectedEof { pos: usize },
    #[error("unexpected ')' at position {pos}")]
    UnexpectedClose { pos: usize },
    #[error("unexpected character {ch:?} at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unknown operator '{name}' at position {pos}")]
    UnknownOperator { name: String, pos: usize },
    #[error("operator '{op}' expects {expected} argument(s) but got {found} (position {pos})")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
        pos: usize,
    },
    #[error("'{name}' is reserved and cannot name a variable (position {pos})")]
    ReservedName { name: String, pos: usize },
    #[error("trailing input at position {pos}")]
    Trailing { pos: usize },
}

impl ParseError {
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::UnexpectedEof { pos }
            | ParseError::UnexpectedClose { pos }
            | ParseError::UnexpectedChar { pos, .. }
            | ParseError::UnknownOperator { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::ReservedName { pos, .. }
            | ParseError::Trailing { pos } => Some(*pos),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Ident(String),
    Str(String),
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
        } else if c == '(' {
            toks.push((Tok::Open, pos));
            it.next();
        } else if c == ')' {
            toks.push((Tok::Close, pos));
            it.next();
        } else if c == '"' {
            it.next();
            let mut s = String::new();
            loop {
                match it.next() {
                    Some((_, '"')) => break,
                    Some((_, ch)) => s.push(ch),
                    None => return Err(ParseError::UnexpectedEof { pos: text.len() }),
                }
            }
            toks.push((Tok::Str(s), pos));
        } else if is_ident_start(c) {
            let mut s = String::new();
            while let Some(&(_, ch)) = it.peek() {
                if is_ident_char(ch) {
                    s.push(ch);
                    it.next();
                } else {
                    break;
                }
            }
            toks.push((Tok::Ident(s), pos));
        } else {
            return Err(ParseError::UnexpectedChar { ch: c, pos });
        }
    }
    Ok(toks)
}

fn is_reserved(name: &str) -> bool {
    OpKind::from_name(name).is_some() || name == "Var"
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let t = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or(ParseError::UnexpectedEof { pos: self.end })?;
        self.at += 1;
        Ok(t)
    }

    fn variable(name: String, pos: usize) -> Result<Expr, ParseError> {
        if is_reserved(&name) {
            Err(ParseError::ReservedName { name, pos })
        } else if name.is_empty()
            || !name.chars().next().is_some_and(is_ident_start)
            || !name.chars().all(is_ident_char)
        {
            Err(ParseError::UnexpectedChar {
                ch: name.chars().next().unwrap_or('"'),
                pos,
            })
        } else {
            Ok(Expr::Var(name))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.next()?;
        match tok {
            Tok::Ident(name) => Self::variable(name, pos),
            Tok::Str(_) => Err(ParseError::UnexpectedChar { ch: '"', pos }),
            Tok::Close => Err(ParseError::UnexpectedClose { pos }),
            Tok::Open => {
                let (head, hpos) = self.next()?;
                let name = match head {
                    Tok::Ident(n) => n,
                    Tok::Close => return Err(ParseError::UnexpectedClose { pos: hpos }),
                    Tok::Open => return Err(ParseError::UnexpectedChar { ch: '(', pos: hpos }),
                    Tok::Str(_) => return Err(ParseError::UnexpectedChar { ch: '"', pos: hpos }),
                };
                if name == "Var" {
                    let (arg, apos) = self.next()?;
                    let v = match arg {
                        Tok::Ident(n) | Tok::Str(n) => Self::variable(n, apos)?,
                        Tok::Open => return Err(ParseError::UnexpectedChar { ch: '(', pos: apos }),
                        Tok::Close => {
                            return Err(ParseError::Arity {
                                op: name,
                                expected: 1,
                                found: 0,
                                pos: hpos,
                            })
                        }
                    };
                    self.close(&name, 1, hpos)?;
                    return Ok(v);
                }
                let op = OpKind::from_name(&name).ok_or(ParseError::UnknownOperator {
                    name: name.clone(),
                    pos: hpos,
                })?;
                let mut args = Vec::new();
                loop {
                    match self.peek() {
                        Some((Tok::Close, _)) => {
                            self.at += 1;
                            break;
                        }
                        Some(_) => args.push(self.expr()?),
                        None => return Err(ParseError::UnexpectedEof { pos: self.end }),
                    }
                }
                if args.len() != op.arity() {
                    return Err(ParseError::Arity {
                        op: name,
                        expected: op.arity(),
                        found: args.len(),
                        pos: hpos,
                    });
                }
                let mut args = args.into_iter();
                let a = args.next().expect("arity checked");
                Ok(match op {
                    OpKind::Sqrt => Expr::sqrt(a),
                    _ => Expr::binary(op, a, args.next().expect("arity checked")),
                })
            }
        }
    }

    fn close(&mut self, op: &str, expected: usize, pos: usize) -> Result<(), ParseError> {
        match self.next()? {
            (Tok::Close, _) => Ok(()),
            _ => Err(ParseError::Arity {
                op: op.to_string(),
                expected,
                found: expected + 1,
                pos,
            }),
        }
    }
}

/// Parses an S-expression program.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if let Some((_, pos)) = p.peek() {
        return Err(ParseError::Trailing { pos: *pos });
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_norm_listing() {
        let e = parse_expr("(Add (Mul a a) (Mul b b))").unwrap();
        let a = || Expr::var("a");
        let b = || Expr::var("b");
        assert_eq!(e, Expr::add(Expr::mul(a(), a()), Expr::mul(b(), b())));
    }

    #[test]
    fn parses_single_variable() {
        assert_eq!(parse_expr("a").unwrap(), Expr::var("a"));
        assert_eq!(parse_expr("  x_1  ").unwrap(), Expr::var("x_1"));
    }

    #[test]
    fn accepts_constructor_style_variables() {
        let e = parse_expr("(Sqrt (Add (Var \"a\") (Var b)))").unwrap();
        assert_eq!(e.to_string(), "(Sqrt (Add a b))");
    }

    #[test]
    fn unbalanced_is_a_syntax_error() {
        let err = parse_expr("(Sqrt (Add x y)").unwrap_err();
        assert!(matches!(err, ParseError::UnexpectedEof { .. }), "{err:?}");
        assert!(matches!(parse_expr("a)"), Err(ParseError::Trailing { pos: 1 })));
        assert!(matches!(parse_expr(")"), Err(ParseError::UnexpectedClose { pos: 0 })));
    }

    #[test]
    fn unknown_operator_reported_with_position() {
        let err = parse_expr("(Add a (Pow b c))").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownOperator {
                name: "Pow".into(),
                pos: 8
            }
        );
    }

    #[test]
    fn arity_and_reserved_names() {
        assert!(matches!(parse_expr("(Add a)"), Err(ParseError::Arity { found: 1, .. })));
        assert!(matches!(
            parse_expr("(Sqrt a b)"),
            Err(ParseError::Arity { found: 2, .. })
        ));
        assert!(matches!(parse_expr("Add"), Err(ParseError::ReservedName { .. })));
        assert!(matches!(parse_expr(""), Err(ParseError::Empty)));
        assert!(matches!(
            parse_expr("(Add a 3)"),
            Err(ParseError::UnexpectedChar { ch: '3', .. })
        ));
    }
}
