use super::{BinOp, Expr, Func, Var};

impl Expr {
    /// Exact symbolic partial derivative with respect to `w`.
    ///
    /// Returns the constant `0` whenever `w` does not occur in the tree.
    pub fn diff(&self, w: Var) -> Expr {
        if !self.contains_var(w) {
            return Expr::Const(0.0);
        }
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == w { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(w)),
            Expr::Call(f, a) => {
                let inner = a.diff(w);
                let a = (**a).clone();
                let outer = match f {
                    Func::Exp => Expr::exp(a),
                    Func::Log => Expr::div(Expr::Const(1.0), a),
                    Func::Sin => Expr::cos(a),
                    Func::Cos => Expr::neg(Expr::sin(a)),
                    Func::Sqrt => Expr::div(Expr::Const(0.5), Expr::sqrt(a)),
                };
                Expr::mul(outer, inner)
            }
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.diff(w), b.diff(w));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                    BinOp::Div => Expr::div(
                        Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                        Expr::pow(b, Expr::Const(2.0)),
                    ),
                    BinOp::Pow => {
                        if !b.contains_var(w) {
                            // d(a^c) = c a^(c-1) da
                            let lowered = Expr::pow(a, Expr::sub(b.clone(), Expr::Const(1.0)));
                            Expr::mul(Expr::mul(b, lowered), da)
                        } else {
                            // d(a^b) = a^b (db ln a + b da / a)
                            let whole = Expr::pow(a.clone(), b.clone());
                            let log_part = Expr::mul(db, Expr::ln(a.clone()));
                            let base_part = Expr::div(Expr::mul(b, da), a);
                            Expr::mul(whole, Expr::add(log_part, base_part))
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Env;

    #[test]
    fn exponential_rules() {
        let e = Expr::parse("exp(z)").unwrap();
        assert_eq!(e.diff(Var::Z), e);
        let m = Expr::parse("exp(-z)").unwrap().diff(Var::Z);
        assert_eq!(m, Expr::neg(Expr::parse("exp(-z)").unwrap()));
    }

    #[test]
    fn derivative_of_absent_variable_is_zero() {
        let e = Expr::parse("sin(x)*exp(y)").unwrap();
        assert_eq!(e.diff(Var::Z), Expr::Const(0.0));
    }

    #[test]
    fn sine_derivative_matches_central_difference() {
        let e = Expr::parse("sin(2*pi*x)").unwrap();
        let d = e.diff(Var::X).eval(&Env::new().with(Var::X, 0.0)).unwrap();
        let h = 1e-5;
        let fd = (e.eval(&Env::new().with(Var::X, h)).unwrap()
            - e.eval(&Env::new().with(Var::X, -h)).unwrap())
            / (2.0 * h);
        assert!((d - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((d - fd).abs() < 1e-8);
    }

    #[test]
    fn general_power() {
        // d/dx x^x = x^x (ln x + 1)
        let e = Expr::parse("x^x").unwrap();
        let env = Env::new().with(Var::X, 1.7);
        let d = e.diff(Var::X).eval(&env).unwrap();
        let expected = 1.7f64.powf(1.7) * (1.7f64.ln() + 1.0);
        assert!((d - expected).abs() < 1e-12);
    }
}
