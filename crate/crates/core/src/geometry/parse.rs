//! Text grammar for linear constraints.
//!
//! Linear terms over identifiers, integer or `p/q` rational literals,
//! relators `<=`, `>=`, `=`, `<`, `>`; conjunction via comma. Primed
//! variables are spelled with a trailing apostrophe (`x'`). Multiplication
//! may be written `2*x`, `2 x` or `2x`.

use super::{AffineFunc, Constraint, Rational, Var};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn at(col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line: 1,
            col,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Number(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Rel(RelTok),
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RelTok {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Number(q) => write!(f, "number {q}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Rel(_) => write!(f, "relator"),
            Tok::Comma => write!(f, "`,`"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let col = i + 1;
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, col));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, col));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, col));
                i += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Rel(RelTok::Le), col));
                    i += 2;
                } else {
                    toks.push((Tok::Rel(RelTok::Lt), col));
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Rel(RelTok::Ge), col));
                    i += 2;
                } else {
                    toks.push((Tok::Rel(RelTok::Gt), col));
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    return Err(ParseError::at(col, "use `=` for equality, not `==`"));
                }
                toks.push((Tok::Rel(RelTok::Eq), col));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let numer: BigInt = text[start..i].parse().expect("digits");
                let mut q = Rational::from_integer(numer);
                if i < bytes.len() && bytes[i] == b'/' {
                    i += 1;
                    let dstart = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if dstart == i {
                        return Err(ParseError::at(i + 1, "expected denominator digits after `/`"));
                    }
                    let denom: BigInt = text[dstart..i].parse().expect("digits");
                    if denom.is_zero() {
                        return Err(ParseError::at(dstart + 1, "denominator must be nonzero"));
                    }
                    q = Rational::new(q.numer().clone(), denom);
                }
                toks.push((Tok::Number(q), col));
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                while i < bytes.len() && bytes[i] == b'\'' {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), col));
            }
            _ => {
                return Err(ParseError::at(
                    col,
                    format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                ));
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_col)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    /// expr := ['-'|'+'] term (('+'|'-') term)*
    fn expr(&mut self) -> Result<AffineFunc, ParseError> {
        let mut acc = AffineFunc::zero();
        let mut sign = Rational::one();
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -sign;
                self.bump();
            }
            Some(Tok::Plus) => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let term = self.term()?;
            acc = acc.add(&term.scale(&sign));
            match self.peek() {
                Some(Tok::Plus) => {
                    sign = Rational::one();
                    self.bump();
                }
                Some(Tok::Minus) => {
                    sign = -Rational::one();
                    self.bump();
                }
                _ => return Ok(acc),
            }
        }
    }

    /// term := number ['*'] ident | number | ident
    fn term(&mut self) -> Result<AffineFunc, ParseError> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Number(q)) => {
                // Optional multiplication: `2*x`, `2 x`, `2x` (tokenizer
                // splits `2x` into number + ident already).
                if self.peek() == Some(&Tok::Star) {
                    self.bump();
                    let col = self.col();
                    match self.bump() {
                        Some(Tok::Ident(name)) => {
                            Ok(AffineFunc::from_terms([(Var::new(&name), q)], Rational::zero()))
                        }
                        other => Err(ParseError::at(
                            col,
                            match other {
                                Some(t) => format!("expected variable after `*`, found {t}"),
                                None => "expected variable after `*`".to_string(),
                            },
                        )),
                    }
                } else if let Some(Tok::Ident(name)) = self.peek().cloned() {
                    self.bump();
                    Ok(AffineFunc::from_terms([(Var::new(&name), q)], Rational::zero()))
                } else {
                    Ok(AffineFunc::constant(q))
                }
            }
            Some(Tok::Ident(name)) => Ok(AffineFunc::var(Var::new(&name))),
            other => Err(ParseError::at(
                col,
                match other {
                    Some(t) => format!("expected a term, found {t}"),
                    None => "expected a term".to_string(),
                },
            )),
        }
    }

    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let lhs = self.expr()?;
        let col = self.col();
        let rel = match self.bump() {
            Some(Tok::Rel(r)) => r,
            other => {
                return Err(ParseError::at(
                    col,
                    match other {
                        Some(t) => format!("expected relator, found {t}"),
                        None => "expected relator (`<=`, `>=`, `=`, `<`, `>`)".to_string(),
                    },
                ))
            }
        };
        let rhs = self.expr()?;
        Ok(match rel {
            RelTok::Le => Constraint::le(lhs, rhs),
            RelTok::Ge => Constraint::ge(lhs, rhs),
            RelTok::Lt => Constraint::lt(lhs, rhs),
            RelTok::Gt => Constraint::gt(lhs, rhs),
            RelTok::Eq => Constraint::eq(lhs, rhs),
        })
    }
}

fn parser_for(text: &str) -> Result<Parser, ParseError> {
    Ok(Parser {
        toks: tokenize(text)?,
        pos: 0,
        end_col: text.len() + 1,
    })
}

/// Parse a single constraint, e.g. `x' = x - 1`.
pub fn parse_constraint(text: &str) -> Result<Constraint, ParseError> {
    let mut p = parser_for(text)?;
    let c = p.constraint()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::at(p.col(), format!("unexpected {t} after constraint")));
    }
    Ok(c)
}

/// Parse a comma-separated conjunction of constraints.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>, ParseError> {
    let mut p = parser_for(text)?;
    let mut out = Vec::new();
    if p.peek().is_none() {
        return Ok(out);
    }
    loop {
        out.push(p.constraint()?);
        match p.bump() {
            None => return Ok(out),
            Some(Tok::Comma) => continue,
            Some(t) => {
                return Err(ParseError::at(p.col() - 1, format!("unexpected {t} after constraint")))
            }
        }
    }
}

/// Parse a bare affine expression, e.g. `z - y` (used for objectives).
pub fn parse_affine(text: &str) -> Result<AffineFunc, ParseError> {
    let mut p = parser_for(text)?;
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::at(p.col(), format!("unexpected {t} after expression")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rel;
    use num_traits::Signed;

    #[test]
    fn parses_primed_and_updates() {
        let c = parse_constraint("x' = x - 1").unwrap();
        assert_eq!(c.rel, Rel::Eq);
        assert_eq!(c.lhs.coeff(&Var::new("x'")), Rational::one());
        assert_eq!(c.lhs.coeff(&Var::new("x")), -Rational::one());
        assert_eq!(*c.lhs.constant_part(), Rational::one());
    }

    #[test]
    fn normalizes_ge_and_gt() {
        let c = parse_constraint("x >= 1").unwrap();
        assert_eq!(c.rel, Rel::Le);
        assert!(c.lhs.coeff(&Var::new("x")).is_negative());
        let c = parse_constraint("y > z").unwrap();
        assert_eq!(c.rel, Rel::Lt);
    }

    #[test]
    fn rational_literals() {
        let c = parse_constraint("x <= 3/2").unwrap();
        assert_eq!(
            *c.lhs.constant_part(),
            -Rational::new(3.into(), 2.into())
        );
        assert!(parse_constraint("x <= 1/0").is_err());
    }

    #[test]
    fn implicit_multiplication() {
        for text in ["2*x + 3*y <= 1", "2x + 3y <= 1", "2 x + 3 y <= 1"] {
            let c = parse_constraint(text).unwrap();
            assert_eq!(c.lhs.coeff(&Var::new("x")), Rational::from_integer(2.into()));
            assert_eq!(c.lhs.coeff(&Var::new("y")), Rational::from_integer(3.into()));
        }
    }

    #[test]
    fn conjunction_by_comma() {
        let cs = parse_constraints("x >= 1, y <= z - 1, x' = x").unwrap();
        assert_eq!(cs.len(), 3);
    }

    #[test]
    fn error_positions() {
        let e = parse_constraint("x <= ?").unwrap_err();
        assert_eq!(e.col, 6);
        let e = parse_constraint("x + <= 1").unwrap_err();
        assert_eq!(e.col, 5);
        let e = parse_constraint("x 1").unwrap_err();
        assert!(e.col >= 3);
    }

    #[test]
    fn double_primes_tokenize() {
        // Accepted by the grammar; the model layer rejects undeclared names.
        let c = parse_constraint("z'' = z").unwrap();
        assert!(c.lhs.vars().any(|v| v.name() == "z''"));
    }
}
