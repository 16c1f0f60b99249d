//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := number | "pi" | coordinate | function "(" expr ")" | "(" expr ")"
//! ```
//!
//! A unary minus applied directly to a constant folds into a negative
//! constant, so printed negative literals re-parse to the same tree.

use super::{BinaryOp, Expr, UnaryOp};
use std::fmt;
use thiserror::Error;

/// Identifiers that cannot be used as coordinate names.
pub const RESERVED: &[&str] = &["pi", "sin", "cos", "exp", "log", "sqrt"];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: expected {}, found {found}", ExpectedList(.expected))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} is not a constant")]
    NonConstantExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::NonConstantExponent { offset } => Some(*offset),
        }
    }
}

struct ExpectedList<'a>(&'a [&'static str]);

impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" or ")?;
            }
            write!(f, "`{e}`")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lexeme = &text[start..i];
            let value = lexeme.parse::<f64>().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("`{lexeme}`"),
            })?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                offset: i,
                expected: vec!["number", "identifier", "operator"],
                found: format!("`{c}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a, S> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected,
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, c: char, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec![name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(match self.unary()? {
                    Expr::Const(c) => Expr::Const(-c),
                    e => Expr::unary(UnaryOp::Neg, e),
                })
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = self.unary()?.simplify();
        if !exponent.is_const() {
            return Err(ParseError::NonConstantExponent { offset: at });
        }
        Ok(Expr::binary(BinaryOp::Pow, base, exponent))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Const(x))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')', ")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                if let Some(op) = UnaryOp::from_name(&name) {
                    self.expect('(', "(")?;
                    let arg = self.expr()?;
                    self.expect(')', ")")?;
                    return Ok(Expr::unary(op, arg));
                }
                match self.coords.iter().position(|c| c.as_ref() == name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            _ => Err(self.error(vec!["number", "identifier", "("])),
        }
    }
}

/// Parses `text` against the declared coordinate names.
pub fn parse<S: AsRef<str>>(text: &str, coords: &[S]) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        coords,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(vec!["operator", "end of input"]));
    }
    Ok(e)
}

/// Parses a coordinate-free expression and folds it to a number.
/// Accepts `inf` / `-inf` for unbounded intervals.
pub fn parse_constant(text: &str) -> Result<f64, ParseError> {
    match text.trim() {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let e = parse::<&str>(text, &[])?.simplify();
    e.as_const().ok_or(ParseError::Syntax {
        offset: 0,
        expected: vec!["constant expression"],
        found: format!("`{text}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbalanced_parenthesis_offset() {
        let err = parse("sin(q", &["q"]).unwrap_err();
        match err {
            ParseError::Syntax {
                offset, expected, ..
            } => {
                assert_eq!(offset, 5);
                assert_eq!(expected, vec![")"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_named() {
        let err = parse("t + z", &["t"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "z".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn trailing_garbage() {
        let err = parse("t t", &["t"]).unwrap_err();
        assert_eq!(err.offset(), Some(2));
    }

    #[test]
    fn missing_operand() {
        let err = parse("t +", &["t"]).unwrap_err();
        assert_eq!(err.offset(), Some(3));
        let err = parse("* t", &["t"]).unwrap_err();
        assert_eq!(err.offset(), Some(0));
    }

    #[test]
    fn empty_text() {
        assert_eq!(parse("   ", &["t"]).unwrap_err(), ParseError::Empty);
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_minus() {
        let e = parse("-2^2", &["t"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), -4.0);
        let e = parse("2^3^2", &["t"]).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 512.0);
        let e = parse("t^-1", &["t"]).unwrap();
        assert_eq!(e.eval(&[4.0]).unwrap(), 0.25);
    }

    #[test]
    fn non_constant_exponent_rejected() {
        let err = parse("t^t", &["t"]).unwrap_err();
        assert_eq!(err, ParseError::NonConstantExponent { offset: 2 });
        assert!(parse("t^(1/2)", &["t"]).is_ok());
    }

    #[test]
    fn case_sensitive_identifiers() {
        assert!(parse("T", &["t"]).is_err());
        assert!(parse("Sin(t)", &["t"]).is_err());
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3 + 2E2", &["t"]).unwrap().simplify();
        assert_eq!(e, Expr::Const(200.0015));
    }

    #[test]
    fn constants() {
        assert_eq!(parse_constant("pi/2").unwrap(), std::f64::consts::FRAC_PI_2);
        assert_eq!(parse_constant("-inf").unwrap(), f64::NEG_INFINITY);
        assert!(parse_constant("t").is_err());
    }
}
