//! Closed-form coordinate expressions.
//!
//! An [`Expr`] is a small immutable tree over the coordinates of a chart.
//! Variables are stored by coordinate index; names only matter for parsing
//! and printing. Everything the geometry layer needs (metric components,
//! field components, leaf functions, loops, identification maps) is an
//! `Expr`, differentiated symbolically and evaluated through a compiled
//! [`Program`].
//!
//! The accepted grammar is documented in `docs/expression-grammar.md`.

mod compile;
mod diff;
mod parse;
mod print;
mod simplify;

pub use compile::Program;
pub use parse::{parse, parse_constant, ParseError, RESERVED};
pub use print::Printed;

use std::fmt;
use thiserror::Error;

/// Unary operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }

    /// Applies the operator, returning `None` outside its real domain.
    pub fn apply(self, x: f64) -> Option<f64> {
        let y = match self {
            UnaryOp::Neg => -x,
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log if x > 0.0 => x.ln(),
            UnaryOp::Sqrt if x >= 0.0 => x.sqrt(),
            UnaryOp::Log | UnaryOp::Sqrt => return None,
        };
        y.is_finite().then_some(y)
    }
}

/// Binary operators. `Pow` only ever carries a constant exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    /// Applies the operator, returning `None` outside its real domain.
    pub fn apply(self, a: f64, b: f64) -> Option<f64> {
        let y = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return None;
                }
                a / b
            }
            BinaryOp::Pow => pow(a, b)?,
        };
        y.is_finite().then_some(y)
    }
}

fn pow(base: f64, exponent: f64) -> Option<f64> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return None;
        }
        return Some(base.powi(exponent as i32));
    }
    if base < 0.0 || (base == 0.0 && exponent < 0.0) {
        return None;
    }
    if exponent == 0.5 {
        Some(base.sqrt())
    } else {
        Some(base.powf(exponent))
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate by declaration index.
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Evaluation failure: an operator was applied outside its real domain.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("domain error: `{op}` applied to {argument} in subexpression `{subexpr}`")]
pub struct DomainError {
    pub op: &'static str,
    pub argument: f64,
    /// The offending subexpression.
    pub subexpr: Box<Expr>,
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Self {
        Expr::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// True if the expression references coordinate `index`.
    pub fn depends_on(&self, index: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == index,
            Expr::Unary(_, a) => a.depends_on(index),
            Expr::Binary(_, a, b) => a.depends_on(index) || b.depends_on(index),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Tree-walking evaluation. Prefer [`Program`] in hot loops.
    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(i) => Ok(point[*i]),
            Expr::Unary(op, a) => {
                let x = a.eval(point)?;
                op.apply(x).ok_or_else(|| DomainError {
                    op: op.name(),
                    argument: x,
                    subexpr: Box::new(self.clone()),
                })
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                op.apply(x, y).ok_or_else(|| DomainError {
                    op: op.symbol(),
                    argument: if *op == BinaryOp::Pow { x } else { y },
                    subexpr: Box::new(self.clone()),
                })
            }
        }
    }

    /// Symbolic partial derivative with respect to coordinate `index`,
    /// simplified.
    pub fn differentiate(&self, index: usize) -> Expr {
        diff::derivative(self, index).simplify()
    }

    /// Constant folding plus 0/1 identities, iterated to a fixpoint.
    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Replaces every `Var(i)` with `replacements[i]`.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => replacements[*i].clone(),
            Expr::Unary(op, a) => Expr::unary(*op, a.substitute(replacements)),
            Expr::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(replacements), b.substitute(replacements))
            }
        }
    }

    /// Printable view using the given coordinate names.
    pub fn printed<'a, S: AsRef<str>>(&'a self, names: &'a [S]) -> Printed<'a, S> {
        Printed::new(self, names)
    }

    pub fn to_text<S: AsRef<str>>(&self, names: &[S]) -> String {
        self.printed(names).to_string()
    }

    pub fn compile(&self) -> Program {
        Program::new(self)
    }
}

impl fmt::Display for Expr {
    /// Prints variables as `x0, x1, …`; use [`Expr::printed`] for real names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..=self.max_var().unwrap_or(0))
            .map(|i| format!("x{i}"))
            .collect();
        write!(f, "{}", self.printed(&names))
    }
}

macro_rules! binary_impl {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
    };
}

binary_impl!(Add, add, BinaryOp::Add);
binary_impl!(Sub, sub, BinaryOp::Sub);
binary_impl!(Mul, mul, BinaryOp::Mul);
binary_impl!(Div, div, BinaryOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}
