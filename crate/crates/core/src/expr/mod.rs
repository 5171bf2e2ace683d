//! Scalar expressions in chart coordinates.
//!
//! Every coefficient of a field or form in this crate is an [`Expr`]: a small
//! immutable tree over the coordinates `x, y, z, s, u, v`, named parameters
//! (`pi` is always known), the binary operators `+ - * / ^` and the unary
//! functions `exp log sin cos sqrt neg`.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! sum     = product { ("+" | "-") product } ;
//! product = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;            (* right associative *)
//! atom    = number | ident | ident "(" sum ")" | "(" sum ")" ;
//! ```
//!
//! `-a^b` therefore means `-(a^b)`; a negative base must be written `(-a)^b`.
//!
//! Trees produced by the parser are kept verbatim. The builder functions
//! ([`Expr::add`], [`Expr::mul`], ...) used by the symbolic engine fold
//! literal-only subtrees and drop additive zeros / multiplicative ones so that
//! derivatives of sparse forms stay small.

mod compile;
mod diff;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use compile::Program;
pub use parse::Parser;

/// Chart coordinates understood by the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    Z,
    S,
    U,
    V,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::X, Var::Y, Var::Z, Var::S, Var::U, Var::V];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::S => "s",
            Var::U => "u",
            Var::V => "v",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, a: f64) -> f64 {
        match self {
            Func::Exp => a.exp(),
            Func::Log => a.ln(),
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Sqrt => a.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(Arc<str>),
    Neg(Arc<Expr>),
    Bin(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}; allowed names: {}", allowed.join(", "))]
    UnknownIdentifier {
        name: String,
        offset: usize,
        allowed: Vec<String>,
    },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {message} in `{expr}`")]
    Domain { message: String, expr: String },
}

/// Values for the free symbols of an expression.
#[derive(Clone, Debug)]
pub struct Env {
    vars: [Option<f64>; 6],
    params: Vec<(Arc<str>, f64)>,
}

impl Default for Env {
    fn default() -> Self {
        Env::new()
    }
}

impl Env {
    /// Empty environment with `pi` bound to [`std::f64::consts::PI`].
    pub fn new() -> Self {
        Env {
            vars: [None; 6],
            params: vec![(Arc::from("pi"), std::f64::consts::PI)],
        }
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.vars[var.index()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.vars[var.index()]
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.set_param(name, value);
        self
    }

    pub fn set_param(&mut self, name: &str, value: f64) {
        match self.params.iter_mut().find(|(n, _)| &**n == name) {
            Some(slot) => slot.1 = value,
            None => self.params.push((Arc::from(name), value)),
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| &**n == name).map(|p| p.1)
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        Parser::new().parse(text)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(Arc::from(name))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Bin(BinOp::Add, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Bin(BinOp::Sub, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Bin(BinOp::Mul, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Bin(BinOp::Div, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if x > 0.0 || y.fract() == 0.0 => Expr::Const(x.powf(y)),
            (_, Some(y)) if y == 1.0 => a,
            (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
            _ => Expr::Bin(BinOp::Pow, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => (*inner).clone(),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        match a.as_const() {
            Some(c) if f != Func::Log || c > 0.0 => {
                if f == Func::Sqrt && c < 0.0 {
                    Expr::Call(f, Arc::new(a))
                } else {
                    Expr::Const(f.apply(c))
                }
            }
            _ => Expr::Call(f, Arc::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::call(Func::Log, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::call(Func::Cos, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::call(Func::Sqrt, a)
    }

    /// Sum of the given terms, `0` when empty.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::Const(0.0), Expr::add)
    }

    pub fn contains_var(&self, w: Var) -> bool {
        match self {
            Expr::Var(v) => *v == w,
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.contains_var(w),
            Expr::Bin(_, a, b) => a.contains_var(w) || b.contains_var(w),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Const(_) | Expr::Param(_) => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces every occurrence of the variables in `map` simultaneously.
    pub fn subst(&self, map: &[(Var, Expr)]) -> Expr {
        match self {
            Expr::Var(v) => match map.iter().find(|(w, _)| w == v) {
                Some((_, e)) => e.clone(),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::neg(a.subst(map)),
            Expr::Call(f, a) => Expr::call(*f, a.subst(map)),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.subst(map), b.subst(map));
                match op {
                    BinOp::Add => Expr::add(a, b),
                    BinOp::Sub => Expr::sub(a, b),
                    BinOp::Mul => Expr::mul(a, b),
                    BinOp::Div => Expr::div(a, b),
                    BinOp::Pow => Expr::pow(a, b),
                }
            }
        }
    }

    /// Binds named parameters to numeric constants.
    pub fn bind_params(&self, env: &Env) -> Expr {
        match self {
            Expr::Param(name) => match env.param(name) {
                Some(v) => Expr::Const(v),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Arc::new(a.bind_params(env))),
            Expr::Call(f, a) => Expr::Call(*f, Arc::new(a.bind_params(env))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Arc::new(a.bind_params(env)), Arc::new(b.bind_params(env)))
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Bin(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Tree-walking evaluation with domain checks.
    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => env
                .get(*v)
                .ok_or_else(|| ExprError::UnboundVariable(v.name().to_string()))?,
            Expr::Param(p) => env
                .param(p)
                .ok_or_else(|| ExprError::UnboundVariable(p.to_string()))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Call(f, a) => {
                let x = a.eval(env)?;
                match f {
                    Func::Log if x <= 0.0 => return Err(self.domain("log of non-positive value")),
                    Func::Sqrt if x < 0.0 => return Err(self.domain("sqrt of negative value")),
                    _ => f.apply(x),
                }
            }
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if x < 0.0 && y.fract() != 0.0 {
                            return Err(self.domain("negative base with non-integer exponent"));
                        }
                        if x == 0.0 && y < 0.0 {
                            return Err(self.domain("zero base with negative exponent"));
                        }
                        x.powf(y)
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain("non-finite result"))
        }
    }

    fn domain(&self, message: &str) -> ExprError {
        ExprError::Domain {
            message: message.to_string(),
            expr: self.to_string(),
        }
    }

    /// Compiles to a flat stack program; parameters are bound from `env`.
    pub fn compile(&self, env: &Env) -> Program {
        Program::new(self, env)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let (sym, left, right) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                write_child(f, a, left)?;
                f.write_str(sym)?;
                write_child(f, b, right)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, env: &Env) -> f64 {
        Expr::parse(text).unwrap().eval(env).unwrap()
    }

    #[test]
    fn parses_function_call() {
        let e = Expr::parse("exp(z)").unwrap();
        assert_eq!(e, Expr::Call(Func::Exp, Arc::new(Expr::Var(Var::Z))));
    }

    #[test]
    fn parser_does_not_fold() {
        let e = Expr::parse("exp(-z)*2 + 0").unwrap();
        assert!(matches!(e, Expr::Bin(BinOp::Add, _, _)));
        assert_eq!(e.eval(&Env::new().with(Var::Z, 0.0)).unwrap(), 2.0);
    }

    #[test]
    fn pi_parameter() {
        let env = Env::new().with_param("pi", 3.14159265358979).with(Var::X, 0.25);
        assert!((ev("sin(2*pi*x)", &env) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eval_identities() {
        assert_eq!(ev("exp(z)", &Env::new().with(Var::Z, 0.0)), 1.0);
        assert!((ev("exp(z)*exp(-z)", &Env::new().with(Var::Z, 7.3)) - 1.0).abs() < 1e-12);
        let ln2 = 2f64.ln();
        assert!((ev("exp(s)", &Env::new().with(Var::S, ln2)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn power_is_right_associative_and_binds_over_minus() {
        let env = Env::new();
        assert_eq!(ev("2^3^2", &env), 512.0);
        assert_eq!(ev("-2^2", &env), -4.0);
        assert_eq!(ev("(-2)^2", &env), 4.0);
        assert_eq!(ev("2^-1", &env), 0.5);
    }

    #[test]
    fn unbound_and_domain_errors() {
        let e = Expr::parse("log(x)").unwrap();
        assert!(matches!(e.eval(&Env::new()), Err(ExprError::UnboundVariable(_))));
        match e.eval(&Env::new().with(Var::X, -1.0)) {
            Err(ExprError::Domain { expr, .. }) => assert_eq!(expr, "log(x)"),
            other => panic!("expected domain error, got {other:?}"),
        }
        let d = Expr::parse("1/(x-1)").unwrap();
        assert!(matches!(
            d.eval(&Env::new().with(Var::X, 1.0)),
            Err(ExprError::Domain { .. })
        ));
        let p = Expr::parse("(x)^0.5").unwrap();
        assert!(p.eval(&Env::new().with(Var::X, -4.0)).is_err());
    }

    #[test]
    fn printing_keeps_structure() {
        for text in ["a - (b - c)", "(a - b) - c", "-(x^2)", "(-x)^2", "x/(y*z)", "2^3^2", "(2^3)^2"] {
            let parser = Parser::new().with_params(["a", "b", "c"]);
            let e = parser.parse(text).unwrap();
            let again = parser.parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }

    #[test]
    fn subst_replaces_simultaneously() {
        let e = Expr::parse("x*y").unwrap();
        let swapped = e.subst(&[(Var::X, Expr::Var(Var::Y)), (Var::Y, Expr::Var(Var::X))]);
        assert_eq!(swapped.to_string(), "y*x");
    }
}
