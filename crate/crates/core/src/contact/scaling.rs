//! Extension of a positive function on a transverse torus to a collar
//! `Σ × (−2δ, 2δ)` keeping `X log μ + r` positive.
//!
//! Work is done on `L = log μ`. On `|t| ≤ ε` the function is the forced
//! solution of `∂_t L = 1 − r`. Between `ε` and `δ` the slope of `L` moves
//! from the inner slope to a constant bridge slope and then to zero through
//! two quintic blends of width `(δ − ε)/4`; the bridge slope is chosen so
//! that `L = log C` exactly from `δ` on. The negative side mirrors this with
//! the plateau `c`.

use serde::Serialize;

use super::{ContactError, POSITIVITY_MARGIN};
use crate::expr::{Env, Expr, Program, Var};

/// How `∫₀^t (1 − r) ds` is evaluated on the inner band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRule {
    /// `r` frozen at the base point `(u, v, 0)`.
    AtBasePoint,
    /// `r(u, v, s)` integrated along the flow line.
    AlongFlow,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Lower plateau `c`, reached for `t ≤ −δ`.
    pub c_low: f64,
    /// Upper plateau `C`, reached for `t ≥ δ`.
    pub c_high: f64,
    pub rule: InnerRule,
    /// Samples per side of the torus grid.
    pub torus_samples: usize,
    /// Samples of the flow parameter across `[−2δ, 2δ]`.
    pub collar_samples: usize,
    /// Return time of the flow to the torus. When set, `L` also descends
    /// from `log C` back to `log c` over `[2δ, ν − 2δ]`.
    pub closing_period: Option<f64>,
}

impl ScalingParams {
    pub fn new(epsilon: f64, delta: f64, c_low: f64, c_high: f64) -> Self {
        ScalingParams {
            epsilon,
            delta,
            c_low,
            c_high,
            rule: InnerRule::AtBasePoint,
            torus_samples: 32,
            collar_samples: 81,
            closing_period: None,
        }
    }
}

fn smooth(x: f64) -> f64 {
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

fn smooth_prime(x: f64) -> f64 {
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

/// `∫₀^x S`.
fn smooth_integral(x: f64) -> f64 {
    let x4 = x * x * x * x;
    x4 * (2.5 + x * (-3.0 + x))
}

// 8-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Value, `∂_u`, `∂_v` of an inner-band quantity.
type Tri = [f64; 3];

struct Side {
    j_eps: Tri,
    slope: Tri,
    target: f64,
}

/// The extended function `μ`, with `μ|_Σ = f`.
#[derive(Clone, Debug)]
pub struct ScalingExtension {
    pub params: ScalingParams,
    pub f: Expr,
    pub r: Expr,
    /// Minimum of `∂_t log μ + r` over the verification grid.
    pub margin: f64,
    /// `(u, v, t)` of the minimum.
    pub argmin: [f64; 3],
    f_prog: [Program; 3],
    r_prog: [Program; 3],
}

fn compile3(e: &Expr) -> [Program; 3] {
    let env = Env::new();
    [e.compile(&env), e.diff(Var::U).compile(&env), e.diff(Var::V).compile(&env)]
}

fn uvz(u: f64, v: f64, z: f64) -> [f64; 6] {
    [0.0, 0.0, z, 0.0, u, v]
}

impl ScalingExtension {
    fn eval3(progs: &[Program; 3], u: f64, v: f64, z: f64) -> Tri {
        let vars = uvz(u, v, z);
        [progs[0].eval(&vars), progs[1].eval(&vars), progs[2].eval(&vars)]
    }

    /// `log f` and its partials.
    fn log_f(&self, u: f64, v: f64) -> Tri {
        let [f, fu, fv] = Self::eval3(&self.f_prog, u, v, 0.0);
        [f.ln(), fu / f, fv / f]
    }

    /// `J(τ) = ∫₀^{στ} (1 − r) ds` with partials, for `τ ≥ 0`.
    fn inner_integral(&self, u: f64, v: f64, sign: f64, tau: f64) -> Tri {
        match self.params.rule {
            InnerRule::AtBasePoint => {
                let [r, ru, rv] = Self::eval3(&self.r_prog, u, v, 0.0);
                [sign * tau * (1.0 - r), -sign * tau * ru, -sign * tau * rv]
            }
            InnerRule::AlongFlow => {
                let mut acc = [0.0; 3];
                let half = 0.5 * tau;
                for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    for s in [-x, *x] {
                        let z = sign * half * (1.0 + s);
                        let [r, ru, rv] = Self::eval3(&self.r_prog, u, v, z);
                        acc[0] += w * (1.0 - r);
                        acc[1] -= w * ru;
                        acc[2] -= w * rv;
                    }
                }
                acc.map(|a| sign * half * a)
            }
        }
    }

    /// `∂_τ J` at `τ`.
    fn inner_slope(&self, u: f64, v: f64, sign: f64, tau: f64) -> Tri {
        let z = match self.params.rule {
            InnerRule::AtBasePoint => 0.0,
            InnerRule::AlongFlow => sign * tau,
        };
        let [r, ru, rv] = Self::eval3(&self.r_prog, u, v, z);
        [sign * (1.0 - r), -sign * ru, -sign * rv]
    }

    fn side(&self, u: f64, v: f64, sign: f64) -> Side {
        let eps = self.params.epsilon;
        Side {
            j_eps: self.inner_integral(u, v, sign, eps),
            slope: self.inner_slope(u, v, sign, eps),
            target: if sign > 0.0 { self.params.c_high.ln() } else { self.params.c_low.ln() },
        }
    }

    /// `G = L − log f` together with `(∂_u L, ∂_v L, ∂_τ L)` for `τ ≥ ε`.
    fn outer(&self, tau: f64, lf: Tri, side: &Side) -> (f64, [f64; 3]) {
        let eps = self.params.epsilon;
        let d = self.params.delta - eps;
        let h = 0.25 * d;
        let lb = d - h;
        let k = side.target;
        let [je, je_u, je_v] = side.j_eps;
        let [se, se_u, se_v] = side.slope;
        let sb = (k - lf[0] - je - se * h / 2.0) / lb;
        let tp = tau - eps;
        let (g1, g2, g1p, g2p) = if tp <= h {
            let x = tp / h;
            let i = smooth_integral(x);
            (tp - h * i, h * i, 1.0 - smooth(x), smooth(x))
        } else if tp <= d - h {
            (h / 2.0, h / 2.0 + (tp - h), 0.0, 1.0)
        } else if tp < d {
            let x = (tp - d + h) / h;
            (h / 2.0, h / 2.0 + (d - 2.0 * h) + h * x - h * smooth_integral(x), 0.0, 1.0 - smooth(x))
        } else {
            return (k - lf[0], [0.0, 0.0, 0.0]);
        };
        let g = je + se * g1 + sb * g2;
        let d_lf = 1.0 - g2 / lb;
        let d_se = g1 - g2 * h / (2.0 * lb);
        let lu = d_lf * lf[1] + d_lf * je_u + d_se * se_u;
        let lv = d_lf * lf[2] + d_lf * je_v + d_se * se_v;
        (g, [lu, lv, se * g1p + sb * g2p])
    }

    /// `G = log μ − log f` and `(∂_u, ∂_v, ∂_t)` of `log μ` at `(u, v, t)`.
    fn log_parts(&self, u: f64, v: f64, t: f64) -> (f64, [f64; 3]) {
        let p = &self.params;
        let lf = self.log_f(u, v);
        if let Some(nu) = p.closing_period {
            if t > 2.0 * p.delta {
                let (hi, lo) = (p.c_high.ln(), p.c_low.ln());
                let span = nu - 4.0 * p.delta;
                let x = ((t - 2.0 * p.delta) / span).min(1.0);
                let l = hi + (lo - hi) * smooth(x);
                return (l - lf[0], [0.0, 0.0, (lo - hi) * smooth_prime(x) / span]);
            }
        }
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        let tau = t.abs();
        if tau <= p.epsilon {
            let j = self.inner_integral(u, v, sign, tau);
            let s = self.inner_slope(u, v, sign, tau);
            return (j[0], [lf[1] + j[1], lf[2] + j[2], sign * s[0]]);
        }
        let side = self.side(u, v, sign);
        let (g, [lu, lv, ltau]) = self.outer(tau, lf, &side);
        (g, [lu, lv, sign * ltau])
    }

    /// `μ(u, v, t)`; exactly `f` at `t = 0` and exactly `c`, `C` on the plateaus.
    pub fn value(&self, u: f64, v: f64, t: f64) -> f64 {
        let p = &self.params;
        let on_band = p.closing_period.is_some_and(|_| t > 2.0 * p.delta);
        if !on_band {
            if t >= p.delta {
                return p.c_high;
            }
            if t <= -p.delta {
                return p.c_low;
            }
        }
        let f = self.f_prog[0].eval(&uvz(u, v, 0.0));
        let (g, _) = self.log_parts(u, v, t);
        if g == 0.0 {
            f
        } else {
            f * g.exp()
        }
    }

    /// `(log μ, ∂_u log μ, ∂_v log μ, ∂_t log μ)`.
    pub fn log_jet(&self, u: f64, v: f64, t: f64) -> [f64; 4] {
        let lf = self.log_f(u, v)[0];
        let (g, [lu, lv, lt]) = self.log_parts(u, v, t);
        [lf + g, lu, lv, lt]
    }

    /// `r` at collar coordinates.
    pub fn rate(&self, u: f64, v: f64, t: f64) -> f64 {
        self.r_prog[0].eval(&uvz(u, v, t))
    }
}

/// Extends `f > 0` on the torus (an expression in `u, v`) to the collar.
///
/// `r` is an expression in `u, v` and the flow parameter `z`; pass `r_u`
/// for the unstable form and `−r_s` with `1/g` for the stable one.
pub fn extend_scaling(f: &Expr, r: &Expr, params: &ScalingParams) -> Result<ScalingExtension, ContactError> {
    let p = params;
    if !(p.epsilon > 0.0 && p.epsilon < p.delta) {
        return Err(ContactError::Precondition(format!(
            "collar radii need 0 < ε < δ, got ε = {}, δ = {}",
            p.epsilon, p.delta
        )));
    }
    if !(p.c_low > 0.0 && p.c_low < p.c_high) {
        return Err(ContactError::Precondition(format!(
            "plateaus need 0 < c < C, got c = {}, C = {}",
            p.c_low, p.c_high
        )));
    }
    if let Some(nu) = p.closing_period {
        if nu <= 4.0 * p.delta {
            return Err(ContactError::Precondition(format!("closing band needs ν > 4δ, got ν = {nu}")));
        }
    }
    for w in f.free_vars().into_iter().chain(r.free_vars()) {
        if !matches!(w, Var::U | Var::V | Var::Z) {
            return Err(ContactError::Precondition(format!("unexpected variable {} in scaling data", w.name())));
        }
    }
    let mut ext = ScalingExtension {
        params: p.clone(),
        f: f.clone(),
        r: r.clone(),
        margin: f64::INFINITY,
        argmin: [0.0; 3],
        f_prog: compile3(f),
        r_prog: compile3(r),
    };

    let n = p.torus_samples.max(2);
    let mut top = f64::NEG_INFINITY;
    let mut bottom = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            let fv = ext.f_prog[0].eval(&uvz(u, v, 0.0));
            if !(fv > 0.0 && fv.is_finite()) {
                return Err(ContactError::Precondition(format!("f = {fv} is not positive at (u, v) = ({u}, {v})")));
            }
            let lf = fv.ln();
            top = top.max((lf + ext.inner_integral(u, v, 1.0, p.epsilon)[0]).exp());
            bottom = bottom.min((lf + ext.inner_integral(u, v, -1.0, p.epsilon)[0]).exp());
        }
    }
    if p.c_high <= top {
        return Err(ContactError::Precondition(format!("C = {} must exceed max μ(p, ε) = {top}", p.c_high)));
    }
    if p.c_low >= bottom {
        return Err(ContactError::Precondition(format!("c = {} must be below min μ(p, −ε) = {bottom}", p.c_low)));
    }

    let m = p.collar_samples.max(3);
    let mut ts: Vec<f64> = (0..m).map(|k| -2.0 * p.delta + 4.0 * p.delta * k as f64 / (m - 1) as f64).collect();
    if let Some(nu) = p.closing_period {
        let span = nu - 4.0 * p.delta;
        ts.extend((1..m).map(|k| 2.0 * p.delta + span * k as f64 / m as f64));
    }
    for i in 0..n {
        for j in 0..n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            for &t in &ts {
                let lt = ext.log_jet(u, v, t)[3];
                let value = lt + ext.rate(u, v, t);
                if value < ext.margin || value.is_nan() {
                    ext.margin = value;
                    ext.argmin = [u, v, t];
                }
            }
        }
    }
    if !(ext.margin > POSITIVITY_MARGIN) {
        return Err(ContactError::PositivityLost {
            margin: ext.margin,
            point: ext.argmin,
        });
    }
    Ok(ext)
}
