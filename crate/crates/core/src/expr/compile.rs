use super::{BinaryOp, DomainError, Expr, UnaryOp};

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// Postfix program compiled from an [`Expr`]; evaluates without
/// recursion or allocation beyond a reusable stack.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
    source: Expr,
}

impl Program {
    pub fn new(e: &Expr) -> Self {
        let mut ops = Vec::new();
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Unary(_) => {}
                Op::Binary(_) => depth -= 1,
            }
            max = max.max(depth);
        }
        Program {
            ops,
            depth: max,
            source: e.clone(),
        }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    /// Constant value, if the program has no variables.
    pub fn as_const(&self) -> Option<f64> {
        match self.ops.as_slice() {
            [Op::Const(c)] => Some(*c),
            _ => None,
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainError> {
        if let [op] = self.ops.as_slice() {
            match op {
                Op::Const(c) => return Ok(*c),
                Op::Var(i) => return Ok(point[*i]),
                _ => {}
            }
        }
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0; INLINE_STACK];
            self.run(&mut stack, point)
        } else {
            let mut stack = vec![0.0; self.depth];
            self.run(&mut stack, point)
        }
    }

    fn run(&self, stack: &mut [f64], point: &[f64]) -> Result<f64, DomainError> {
        let mut top = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[top] = c;
                    top += 1;
                }
                Op::Var(i) => {
                    stack[top] = point[i];
                    top += 1;
                }
                Op::Unary(u) => match u.apply(stack[top - 1]) {
                    Some(y) => stack[top - 1] = y,
                    None => return Err(self.diagnose(point)),
                },
                Op::Binary(b) => {
                    top -= 1;
                    match b.apply(stack[top - 1], stack[top]) {
                        Some(y) => stack[top - 1] = y,
                        None => return Err(self.diagnose(point)),
                    }
                }
            }
        }
        Ok(stack[0])
    }

    // The tree walker reconstructs the offending subexpression.
    fn diagnose(&self, point: &[f64]) -> DomainError {
        self.source
            .eval(point)
            .expect_err("compiled and tree evaluation disagree")
    }
}

const INLINE_STACK: usize = 32;

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(i) => ops.push(Op::Var(*i)),
        Expr::Unary(op, a) => {
            emit(a, ops);
            ops.push(Op::Unary(*op));
        }
        Expr::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(Op::Binary(*op));
        }
    }
}
