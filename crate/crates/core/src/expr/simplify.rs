use super::{BinaryOp, Expr, UnaryOp};

pub(super) fn simplify(e: &Expr) -> Expr {
    let mut cur = pass(e);
    loop {
        let next = pass(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn is(e: &Expr, v: f64) -> bool {
    e.as_const() == Some(v)
}

fn pass(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Unary(op, a) => {
            let a = pass(a);
            if let Some(x) = a.as_const() {
                if let Some(y) = op.apply(x) {
                    return Expr::Const(y);
                }
            }
            match (op, a) {
                (UnaryOp::Neg, Expr::Unary(UnaryOp::Neg, inner)) => *inner,
                (op, a) => Expr::unary(*op, a),
            }
        }
        Expr::Binary(op, a, b) => {
            let a = pass(a);
            let b = pass(b);
            if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
                if let Some(z) = op.apply(x, y) {
                    return Expr::Const(z);
                }
            }
            match op {
                BinaryOp::Add if is(&a, 0.0) => b,
                BinaryOp::Add if is(&b, 0.0) => a,
                BinaryOp::Sub if is(&b, 0.0) => a,
                BinaryOp::Sub if is(&a, 0.0) => -b,
                BinaryOp::Mul if is(&a, 0.0) || is(&b, 0.0) => Expr::Const(0.0),
                BinaryOp::Mul if is(&a, 1.0) => b,
                BinaryOp::Mul if is(&b, 1.0) => a,
                BinaryOp::Mul if is(&a, -1.0) => -b,
                BinaryOp::Mul if is(&b, -1.0) => -a,
                BinaryOp::Mul if b.is_const() && !a.is_const() => Expr::binary(BinaryOp::Mul, b, a),
                BinaryOp::Div if is(&a, 0.0) && !is(&b, 0.0) => Expr::Const(0.0),
                BinaryOp::Div if is(&b, 1.0) => a,
                BinaryOp::Pow if is(&b, 1.0) => a,
                BinaryOp::Pow if is(&b, 0.0) => Expr::Const(1.0),
                _ => Expr::binary(*op, a, b),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn idempotent_on_samples() {
        let coords = ["x", "y"];
        for text in [
            "0*x + y*1",
            "--(x + 0)",
            "(x^1)^0 + 0/y",
            "-1 * (y - 0)",
            "sin(0) + cos(0) * x",
            "log(-1) + x",
        ] {
            let once = parse(text, &coords).unwrap().simplify();
            assert_eq!(once.simplify(), once, "{text}");
        }
    }

    #[test]
    fn invalid_constant_subtrees_are_left_alone() {
        let e = parse("log(-1) + x", &["x"]).unwrap().simplify();
        assert!(e.eval(&[1.0]).is_err());
    }
}
