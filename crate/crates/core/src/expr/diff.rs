use super::{BinaryOp, Expr, UnaryOp};

fn c(x: f64) -> Expr {
    Expr::Const(x)
}

/// Unsimplified symbolic derivative.
pub(super) fn derivative(e: &Expr, var: usize) -> Expr {
    match e {
        Expr::Const(_) => c(0.0),
        Expr::Var(i) => c(if *i == var { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let da = derivative(a, var);
            let a = (**a).clone();
            match op {
                UnaryOp::Neg => -da,
                UnaryOp::Sin => Expr::unary(UnaryOp::Cos, a) * da,
                UnaryOp::Cos => -(Expr::unary(UnaryOp::Sin, a) * da),
                UnaryOp::Exp => Expr::unary(UnaryOp::Exp, a) * da,
                UnaryOp::Log => da / a,
                UnaryOp::Sqrt => da / (c(2.0) * Expr::unary(UnaryOp::Sqrt, a)),
            }
        }
        Expr::Binary(op, a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => da + db,
                BinaryOp::Sub => da - db,
                BinaryOp::Mul => da * b + a * db,
                BinaryOp::Div => (da * b.clone() - a * db) / Expr::binary(BinaryOp::Pow, b, c(2.0)),
                BinaryOp::Pow => {
                    let k = b.as_const().expect("exponent is constant");
                    c(k) * Expr::binary(BinaryOp::Pow, a, c(k - 1.0)) * da
                }
            }
        }
    }
}
