//! Infix printer. Parenthesizes by precedence so that re-parsing a
//! simplified expression yields the identical tree.

use super::{BinaryOp, Expr, UnaryOp};
use std::fmt;

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

/// Display adapter returned by [`Expr::printed`].
pub struct Printed<'a, S> {
    expr: &'a Expr,
    names: &'a [S],
}

impl<'a, S: AsRef<str>> Printed<'a, S> {
    pub(crate) fn new(expr: &'a Expr, names: &'a [S]) -> Self {
        Printed { expr, names }
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() => PREC_ATOM,
        Expr::Const(_) | Expr::Var(_) => PREC_ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Expr::Unary(..) => PREC_ATOM,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_SUM,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PREC_PRODUCT,
        Expr::Binary(BinaryOp::Pow, ..) => PREC_POW,
    }
}

fn write_expr<S: AsRef<str>>(
    f: &mut fmt::Formatter<'_>,
    e: &Expr,
    names: &[S],
    min_prec: u8,
) -> fmt::Result {
    let wrap = precedence(e) < min_prec;
    if wrap {
        f.write_str("(")?;
    }
    match e {
        Expr::Const(c) => {
            if c.is_sign_negative() {
                write!(f, "(-{})", -c)?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Expr::Var(i) => match names.get(*i) {
            Some(n) => f.write_str(n.as_ref())?,
            None => write!(f, "x{i}")?,
        },
        Expr::Unary(UnaryOp::Neg, a) => {
            f.write_str("-")?;
            write_expr(f, a, names, PREC_NEG)?;
        }
        Expr::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, a, names, 0)?;
            f.write_str(")")?;
        }
        Expr::Binary(op, a, b) => {
            let (left, right) = match op {
                BinaryOp::Add | BinaryOp::Sub => (PREC_SUM, PREC_PRODUCT),
                BinaryOp::Mul | BinaryOp::Div => (PREC_PRODUCT, PREC_NEG),
                BinaryOp::Pow => (PREC_ATOM, PREC_NEG),
            };
            write_expr(f, a, names, left)?;
            match op {
                BinaryOp::Pow => f.write_str("^")?,
                _ => write!(f, " {} ", op.symbol())?,
            }
            write_expr(f, b, names, right)?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

impl<S: AsRef<str>> fmt::Display for Printed<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.names, 0)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn roundtrip(text: &str) {
        let coords = ["t", "x", "y"];
        let e = parse(text, &coords).unwrap().simplify();
        let printed = e.to_text(&coords);
        let back = parse(&printed, &coords).unwrap();
        assert_eq!(back, e, "{text} printed as {printed}");
    }

    #[test]
    fn precedence_cases() {
        for text in [
            "t - (x - y)",
            "t - x - y",
            "t / (x * y)",
            "t / x / y",
            "-(t * x)",
            "(-t)^2",
            "(t^2)^3",
            "t^2^3",
            "-t^2",
            "t * -x",
            "t + -x",
            "t^(-2)",
            "x - (-3)",
            "sqrt(3 + sin(2*t))",
            "exp(-t) * cos(x)/(1 + y^2)",
            "1e-20 + t",
            "pi * t",
        ] {
            roundtrip(text);
        }
    }

    #[test]
    fn readable_output() {
        let coords = ["t"];
        let e = parse("3+sin(2*t)", &coords).unwrap();
        assert_eq!(e.to_text(&coords), "3 + sin(2 * t)");
    }
}
