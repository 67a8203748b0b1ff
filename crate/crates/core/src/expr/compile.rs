use super::{pow, BinOp, Expr, ExprError, Func, Params, Variable};

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    PowI(i32),
    Pow,
    Call(Func),
}

/// Flat stack-machine form of an [`Expr`] with parameters folded in.
///
/// Evaluation is unchecked: out-of-domain arguments produce NaN or ±inf,
/// which callers detect on the result.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    depth: usize,
    constant: Option<f64>,
}

const INLINE_STACK: usize = 32;

impl CompiledExpr {
    pub fn new(expr: &Expr, params: &Params) -> Result<CompiledExpr, ExprError> {
        let folded = expr.substitute_params(params)?;
        let mut ops = Vec::new();
        emit(&folded, &mut ops);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => depth -= 1,
                _ => {}
            }
            max = max.max(depth);
        }
        Ok(CompiledExpr { ops, depth: max, constant: folded.literal() })
    }

    /// Value if the expression folded to a literal.
    pub fn constant(&self) -> Option<f64> {
        self.constant
    }

    /// Evaluates with `vars` indexed by [`Variable::slot`].
    #[inline]
    pub fn eval(&self, vars: &[f64; 4]) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(vars, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.run(vars, &mut stack)
        }
    }

    #[inline]
    fn run(&self, vars: &[f64; 4], stack: &mut [f64]) -> f64 {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Op::Var(i) => {
                    stack[sp] = vars[i];
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::PowI(k) => stack[sp - 1] = stack[sp - 1].powi(k),
                Op::Call(f) => stack[sp - 1] = f.apply(stack[sp - 1]),
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    sp -= 1;
                    let b = stack[sp];
                    let a = &mut stack[sp - 1];
                    *a = match *op {
                        Op::Add => *a + b,
                        Op::Sub => *a - b,
                        Op::Mul => *a * b,
                        Op::Div => *a / b,
                        _ => pow(*a, b),
                    };
                }
            }
        }
        stack[0]
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Num(v) => ops.push(Op::Const(*v)),
        Expr::Var(v) => ops.push(Op::Var(Variable::slot(*v))),
        Expr::Param(_) => unreachable!("parameters are substituted before emission"),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
        Expr::Binary(BinOp::Pow, a, b) => {
            emit(a, ops);
            match b.literal() {
                Some(k) if k.fract() == 0.0 && k.abs() <= 64.0 => ops.push(Op::PowI(k as i32)),
                _ => {
                    emit(b, ops);
                    ops.push(Op::Pow);
                }
            }
        }
        Expr::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => unreachable!(),
            });
        }
    }
}
