//! Oriented foliations of the standard 2-torus `ℝ²/ℤ²` given by a
//! nowhere-vanishing direction field `V = (V₁, V₂)` in `(u, v)`.
//!
//! A foliation defined by a 1-form `a = a_u du + a_v dv` is oriented by
//! `V = (−a_v, a_u)`, the quarter turn of the dual vector.

mod leaves;
pub mod models;
mod returns;

use serde::Serialize;

use crate::expr::{Env, Expr, ExprError, Program, Var};
use crate::geom::{vars_uv, Chart, DifferentialForm, GeomError};

pub use leaves::{
    compact_leaves, compact_leaves_with, cone_separation, parallel_compact_leaves, reeb_annuli, CompactLeaf, CompactLeafSet, ConeSearch, LeafSearch,
    LeafFamily, LeafSource, ParallelReport, ParallelVerdict, ReebAnnulus, Separation,
};
pub use returns::{return_map, return_map_with, rotation_number, ReturnMap, RotationEstimate, Transversal, RETURN_NODES};

use std::f64::consts::TAU;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FoliationError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("direction field vanishes near (u, v) = {point:?} (|V| = {norm:e})")]
    Vanishing { point: [f64; 2], norm: f64 },
    #[error("direction field is not 1-periodic (residual {residual:e})")]
    NotPeriodic { residual: f64 },
    #[error("winding along the {loop_name} loop is {value}, too far from an integer")]
    RoundingGap { loop_name: &'static str, value: f64 },
    #[error(
        "field is not transverse to {transversal} at {at:?} (component {component:e}); \
         the foliation may carry a Reeb component, use reeb_annuli"
    )]
    NotTransverse {
        transversal: Transversal,
        at: [f64; 2],
        component: f64,
    },
    #[error("leaf from {start:?} does not return to {transversal} within length {length}")]
    NoReturn {
        transversal: Transversal,
        start: [f64; 2],
        length: f64,
    },
    #[error("tabulated return map is not monotone near t = {at}")]
    NotMonotone { at: f64 },
    #[error("foliations are not transverse at {at:?} (det {det:e})")]
    NotTransversePair { at: [f64; 2], det: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Grid used for the nowhere-vanishing check.
pub const VALIDATION_GRID: usize = 256;

#[derive(Clone, Debug)]
pub struct Foliation2 {
    pub field: [Expr; 2],
    /// Defining 1-form, when the foliation was declared as a kernel.
    pub defining_form: Option<DifferentialForm>,
    progs: [Program; 2],
    /// `∂_u V`, `∂_v V`.
    du: [Program; 2],
    dv: [Program; 2],
}

impl PartialEq for Foliation2 {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.defining_form == other.defining_form
    }
}

fn uv(u: f64, v: f64) -> [f64; 6] {
    vars_uv(u, v)
}

impl Foliation2 {
    /// Validates that the field is nowhere vanishing and 1-periodic.
    pub fn new(v1: Expr, v2: Expr) -> Result<Foliation2, FoliationError> {
        for w in v1.free_vars().into_iter().chain(v2.free_vars()) {
            if !matches!(w, Var::U | Var::V) {
                return Err(FoliationError::Invalid(format!(
                    "direction fields depend on u, v only, found {}",
                    w.name()
                )));
            }
        }
        let f = Foliation2::unchecked(v1, v2);
        f.validate()?;
        Ok(f)
    }

    fn unchecked(v1: Expr, v2: Expr) -> Foliation2 {
        let env = Env::new();
        let progs = [v1.compile(&env), v2.compile(&env)];
        let du = [v1.diff(Var::U).compile(&env), v2.diff(Var::U).compile(&env)];
        let dv = [v1.diff(Var::V).compile(&env), v2.diff(Var::V).compile(&env)];
        Foliation2 {
            field: [v1, v2],
            defining_form: None,
            progs,
            du,
            dv,
        }
    }

    pub fn constant(a: f64, b: f64) -> Result<Foliation2, FoliationError> {
        Foliation2::new(Expr::Const(a), Expr::Const(b))
    }

    /// The oriented kernel of a 1-form on the torus chart.
    pub fn from_form(form: &DifferentialForm) -> Result<Foliation2, FoliationError> {
        if form.chart() != Chart::Torus || form.degree() != 1 {
            return Err(FoliationError::Invalid("defining form must be a 1-form on the torus".into()));
        }
        let c = form.coeffs();
        let mut f = Foliation2::new(Expr::neg(c[1].clone()), c[0].clone())?;
        f.defining_form = Some(form.clone());
        Ok(f)
    }

    pub fn parse(v1: &str, v2: &str) -> Result<Foliation2, FoliationError> {
        Foliation2::new(Expr::parse(v1)?, Expr::parse(v2)?)
    }

    fn validate(&self) -> Result<(), FoliationError> {
        let n = VALIDATION_GRID;
        let mut worst = ([0.0, 0.0], f64::INFINITY);
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let w = self.checked_at(u, v)?;
                let norm = w[0].hypot(w[1]);
                if norm < worst.1 {
                    worst = ([u, v], norm);
                }
            }
        }
        if worst.1 <= 1e-9 {
            return Err(FoliationError::Vanishing {
                point: worst.0,
                norm: worst.1,
            });
        }
        let mut residual = 0.0f64;
        for k in 0..n {
            let s = k as f64 / n as f64;
            for (a, b) in [((0.0, s), (1.0, s)), ((s, 0.0), (s, 1.0))] {
                let p = self.at(a.0, a.1);
                let q = self.at(b.0, b.1);
                residual = residual.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs());
            }
        }
        if residual >= 1e-9 {
            return Err(FoliationError::NotPeriodic { residual });
        }
        Ok(())
    }

    fn checked_at(&self, u: f64, v: f64) -> Result<[f64; 2], FoliationError> {
        let vars = uv(u, v);
        Ok([self.progs[0].eval_checked(&vars)?, self.progs[1].eval_checked(&vars)?])
    }

    /// `V(u, v)`.
    #[inline]
    pub fn at(&self, u: f64, v: f64) -> [f64; 2] {
        let vars = uv(u, v);
        [self.progs[0].eval(&vars), self.progs[1].eval(&vars)]
    }

    /// `V/|V|`.
    #[inline]
    pub fn unit(&self, u: f64, v: f64) -> [f64; 2] {
        let w = self.at(u, v);
        let n = w[0].hypot(w[1]);
        [w[0] / n, w[1] / n]
    }

    /// The field turned by a quarter turn, `(−V₂, V₁)`.
    pub fn rotated(&self) -> Foliation2 {
        Foliation2::unchecked(Expr::neg(self.field[1].clone()), self.field[0].clone())
    }

    /// The field with orientation reversed.
    pub fn reversed(&self) -> Foliation2 {
        Foliation2::unchecked(Expr::neg(self.field[0].clone()), Expr::neg(self.field[1].clone()))
    }

    /// `V ∘ A` for an integer matrix `A`, acting on `(u, v)`.
    pub fn precompose(&self, a: [[i64; 2]; 2]) -> Result<Foliation2, FoliationError> {
        let lin = |r: usize| {
            Expr::add(
                Expr::mul(Expr::Const(a[r][0] as f64), Expr::var(Var::U)),
                Expr::mul(Expr::Const(a[r][1] as f64), Expr::var(Var::V)),
            )
        };
        let map = [(Var::U, lin(0)), (Var::V, lin(1))];
        Foliation2::new(self.field[0].subst(&map), self.field[1].subst(&map))
    }

    /// `φ · V` for a positive function `φ`.
    pub fn scaled(&self, phi: &Expr) -> Result<Foliation2, FoliationError> {
        Foliation2::new(
            Expr::mul(phi.clone(), self.field[0].clone()),
            Expr::mul(phi.clone(), self.field[1].clone()),
        )
    }

    /// Rate of turning of `V` along the unit direction `e`.
    fn turning(&self, u: f64, v: f64, along_u: bool) -> f64 {
        let vars = uv(u, v);
        let (a, b) = (self.progs[0].eval(&vars), self.progs[1].eval(&vars));
        let d = if along_u { &self.du } else { &self.dv };
        let (da, db) = (d[0].eval(&vars), d[1].eval(&vars));
        (a * db - b * da) / (a * a + b * b)
    }

    /// Minimum of `|det(V_F, V_G)|/(|V_F||V_G|)` over an `n × n` grid and
    /// where it occurs.
    pub fn transversality(&self, other: &Foliation2, n: usize) -> ([f64; 2], f64) {
        let mut worst = ([0.0, 0.0], f64::INFINITY);
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let a = self.unit(u, v);
                let b = other.unit(u, v);
                let det = (a[0] * b[1] - a[1] * b[0]).abs();
                if det < worst.1 {
                    worst = ([u, v], det);
                }
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Winding {
    pub w_u: i64,
    pub w_v: i64,
}

impl Winding {
    pub fn is_trivial(&self) -> bool {
        self.w_u == 0 && self.w_v == 0
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`, started from `pieces` panels.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
            simpson(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}

fn unwrapped_turn(f: &Foliation2, along_u: bool, steps: usize) -> f64 {
    let point = |s: f64| if along_u { (s, 0.0) } else { (0.0, s) };
    let (u0, v0) = point(0.0);
    let w = f.at(u0, v0);
    let mut prev = w[1].atan2(w[0]);
    let mut total = 0.0;
    for k in 1..=steps {
        let (u, v) = point(k as f64 / steps as f64);
        let w = f.at(u, v);
        let ang = w[1].atan2(w[0]);
        let mut d = ang - prev;
        d -= TAU * (d / TAU).round();
        total += d;
        prev = ang;
    }
    total
}

/// Real-valued degree of `V/|V|` along the loop `v = 0` (`along_u`) or `u = 0`.
pub fn turning_number(f: &Foliation2, along_u: bool) -> f64 {
    let g = |s: f64| if along_u { f.turning(s, 0.0, true) } else { f.turning(0.0, s, false) };
    adaptive_simpson(&g, 0.0, 1.0, 1e-10, 64) / TAU
}

/// Degrees of `V/|V|` along the generators `v = 0` and `u = 0`.
pub fn winding(f: &Foliation2) -> Result<Winding, FoliationError> {
    let mut out = [0i64; 2];
    for (k, (along_u, name)) in [(true, "u"), (false, "v")].into_iter().enumerate() {
        let value = turning_number(f, along_u);
        let rounded = value.round();
        let check = (unwrapped_turn(f, along_u, 4096) / TAU).round();
        if (value - rounded).abs() >= 0.2 || check != rounded {
            return Err(FoliationError::RoundingGap { loop_name: name, value });
        }
        out[k] = rounded as i64;
    }
    Ok(Winding {
        w_u: out[0],
        w_v: out[1],
    })
}

/// Polyline of a leaf in the universal cover.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafPath {
    pub points: Vec<[f64; 2]>,
    pub length: f64,
}

impl LeafPath {
    pub fn end(&self) -> [f64; 2] {
        *self.points.last().expect("paths are never empty")
    }
}

/// Largest arc-length step of the leaf integrator.
pub const MAX_STEP: f64 = 1e-3;

/// One RK4 step of size `h` on `sign · V/|V|`.
#[inline]
pub(crate) fn rk4_step(f: &Foliation2, p: [f64; 2], h: f64, sign: f64) -> [f64; 2] {
    let k = |q: [f64; 2]| {
        let w = f.unit(q[0], q[1]);
        [sign * w[0], sign * w[1]]
    };
    let k1 = k(p);
    let k2 = k([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]]);
    let k3 = k([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]]);
    let k4 = k([p[0] + h * k3[0], p[1] + h * k3[1]]);
    [
        p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Arc-length parameterized leaf through `start`; negative `length` runs
/// against the orientation.
pub fn integrate_leaf(f: &Foliation2, start: [f64; 2], length: f64) -> Result<LeafPath, FoliationError> {
    if length == 0.0 || !length.is_finite() {
        return Err(FoliationError::Invalid(format!("leaf length must be nonzero, got {length}")));
    }
    let sign = length.signum();
    let steps = (length.abs() / MAX_STEP).ceil() as usize;
    let h = length.abs() / steps as f64;
    let mut points = Vec::with_capacity(steps + 1);
    let mut p = start;
    points.push(p);
    for _ in 0..steps {
        p = rk4_step(f, p, h, sign);
        points.push(p);
    }
    Ok(LeafPath {
        points,
        length: length.abs(),
    })
}

/// Distance on the torus between two points of the plane.
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let du = a[0] - b[0];
    let dv = a[1] - b[1];
    (du - du.round()).hypot(dv - dv.round())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winding_of_basic_fields() {
        assert_eq!(winding(&Foliation2::constant(1.0, 0.0).unwrap()).unwrap(), Winding { w_u: 0, w_v: 0 });
        let rot = Foliation2::parse("cos(2*pi*u)", "sin(2*pi*u)").unwrap();
        assert_eq!(winding(&rot).unwrap(), Winding { w_u: 1, w_v: 0 });
        let reeb = Foliation2::parse("sin(2*pi*u)", "cos(2*pi*u)").unwrap();
        assert_eq!(winding(&reeb).unwrap(), Winding { w_u: -1, w_v: 0 });
    }

    #[test]
    fn vanishing_and_aperiodic_fields_are_rejected() {
        assert!(matches!(Foliation2::parse("u", "0"), Err(FoliationError::Vanishing { .. })));
        assert!(matches!(
            Foliation2::parse("1", "u"),
            Err(FoliationError::NotPeriodic { .. })
        ));
        assert!(Foliation2::parse("1", "x").is_err());
    }

    #[test]
    fn straight_leaves() {
        let f = Foliation2::constant(1.0, 2.0).unwrap();
        let leaf = integrate_leaf(&f, [0.0, 0.0], 5f64.sqrt()).unwrap();
        let e = leaf.end();
        assert!((e[0] - 1.0).abs() < 1e-9 && (e[1] - 2.0).abs() < 1e-9);
        let g = Foliation2::constant(0.0, 1.0).unwrap();
        let leaf = integrate_leaf(&g, [0.3, 0.0], 1.0).unwrap();
        assert!(torus_distance(leaf.end(), [0.3, 0.0]) < 1e-9);
    }

    #[test]
    fn defining_form_orientation() {
        let a = DifferentialForm::one_form(Chart::Torus, vec![Expr::Const(0.0), Expr::Const(1.0)]).unwrap();
        let f = Foliation2::from_form(&a).unwrap();
        // ker dv is horizontal, oriented towards −u.
        assert_eq!(f.at(0.2, 0.3), [-1.0, 0.0]);
    }
}
