use super::{BinOp, Env, Expr, ExprError, Func, Var};

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Var(u8),
    Neg,
    Bin(BinOp),
    Call(Func),
}

/// Postfix form of an [`Expr`] for hot evaluation loops.
///
/// `eval` never fails: domain violations surface as NaN or infinity. Use
/// [`Program::eval_checked`] to turn those into a proper [`ExprError`].
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
    source: Expr,
    unbound: Option<String>,
}

impl Program {
    pub(super) fn new(expr: &Expr, env: &Env) -> Program {
        let mut ops = Vec::with_capacity(expr.node_count());
        let mut unbound = None;
        emit(expr, env, &mut ops, &mut unbound);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Bin(_) => depth -= 1,
                Op::Neg | Op::Call(_) => {}
            }
            max = max.max(depth);
        }
        Program {
            ops,
            depth: max,
            source: expr.clone(),
            unbound,
        }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    /// True when the program is a single literal.
    pub fn as_const(&self) -> Option<f64> {
        match self.ops.as_slice() {
            [Op::Const(c)] => Some(*c),
            _ => None,
        }
    }

    /// Evaluates with coordinates indexed by [`Var::index`].
    #[inline]
    pub fn eval(&self, vars: &[f64; 6]) -> f64 {
        if let Some(c) = self.as_const() {
            return c;
        }
        if self.depth <= 32 {
            let mut stack = [0.0f64; 32];
            run(&self.ops, vars, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            run(&self.ops, vars, &mut stack)
        }
    }

    pub fn eval_checked(&self, vars: &[f64; 6]) -> Result<f64, ExprError> {
        if let Some(name) = &self.unbound {
            return Err(ExprError::UnboundVariable(name.clone()));
        }
        let value = self.eval(vars);
        if value.is_finite() {
            return Ok(value);
        }
        let mut env = Env::new();
        for v in Var::ALL {
            env.set(v, vars[v.index()]);
        }
        self.source.eval(&env)?;
        Err(ExprError::Domain {
            message: "non-finite result".to_string(),
            expr: self.source.to_string(),
        })
    }
}

fn emit(e: &Expr, env: &Env, ops: &mut Vec<Op>, unbound: &mut Option<String>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(v) => ops.push(Op::Var(v.index() as u8)),
        Expr::Param(p) => match env.param(p) {
            Some(value) => ops.push(Op::Const(value)),
            None => {
                unbound.get_or_insert_with(|| p.to_string());
                ops.push(Op::Const(f64::NAN));
            }
        },
        Expr::Neg(a) => {
            emit(a, env, ops, unbound);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, env, ops, unbound);
            ops.push(Op::Call(*f));
        }
        Expr::Bin(op, a, b) => {
            emit(a, env, ops, unbound);
            emit(b, env, ops, unbound);
            ops.push(Op::Bin(*op));
        }
    }
}

#[inline]
fn run(ops: &[Op], vars: &[f64; 6], stack: &mut [f64]) -> f64 {
    let mut sp = 0usize;
    for op in ops {
        match *op {
            Op::Const(c) => {
                stack[sp] = c;
                sp += 1;
            }
            Op::Var(i) => {
                stack[sp] = vars[i as usize];
                sp += 1;
            }
            Op::Neg => stack[sp - 1] = -stack[sp - 1],
            Op::Call(f) => stack[sp - 1] = f.apply(stack[sp - 1]),
            Op::Bin(b) => {
                sp -= 1;
                let (x, y) = (stack[sp - 1], stack[sp]);
                stack[sp - 1] = match b {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => {
                        if y == 2.0 {
                            x * x
                        } else {
                            x.powf(y)
                        }
                    }
                };
            }
        }
    }
    stack[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_tree_evaluation() {
        let e = Expr::parse("exp(-z)*sin(2*pi*x) + (y - 1)^3/sqrt(2 + cos(u))").unwrap();
        let p = e.compile(&Env::new());
        let vars = [0.3, -0.7, 1.1, 0.0, 0.4, 0.0];
        let env = Env::new()
            .with(Var::X, 0.3)
            .with(Var::Y, -0.7)
            .with(Var::Z, 1.1)
            .with(Var::U, 0.4);
        assert!((p.eval(&vars) - e.eval(&env).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn checked_eval_reports_domain() {
        let p = Expr::parse("log(x)").unwrap().compile(&Env::new());
        assert!(matches!(
            p.eval_checked(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(ExprError::Domain { .. })
        ));
        let q = Expr::parse("w").map(|_| ());
        assert!(q.is_err());
        let r = Expr::param("w").compile(&Env::new());
        assert!(matches!(r.eval_checked(&[0.0; 6]), Err(ExprError::UnboundVariable(_))));
    }
}
