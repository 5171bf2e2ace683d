use serde::Serialize;

use super::spectral::Spectral;
use super::PrelagError;
use crate::expr::{Env, Expr};
use crate::geom::{vars_uv, Chart, DifferentialForm};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverParams {
    /// Grid points per side.
    pub grid: usize,
    pub max_iterations: usize,
    /// Success threshold on the RMS of `d(f a − g b)`.
    pub tolerance: f64,
    /// L-BFGS memory.
    pub memory: usize,
    /// Fourier coefficients below this are dropped from the interpolants.
    pub truncation: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            grid: 64,
            max_iterations: 5000,
            tolerance: 1e-6,
            memory: 10,
            truncation: 1e-12,
        }
    }
}

/// `J(φ, γ) = ½ mean(c²)` with `c` the `du∧dv` coefficient of
/// `d(e^φ a − e^γ b)`, derivatives spectral.
#[derive(Clone, Debug)]
pub struct ClosednessObjective {
    spectral: Spectral,
    a: [Vec<f64>; 2],
    b: [Vec<f64>; 2],
}

fn torus_components(form: &DifferentialForm, n: usize) -> Result<[Vec<f64>; 2], PrelagError> {
    if form.chart() != Chart::Torus || form.degree() != 1 {
        return Err(PrelagError::Invalid("scaling data must be 1-forms on the torus".into()));
    }
    let env = Env::new();
    let progs = [form.coeffs()[0].compile(&env), form.coeffs()[1].compile(&env)];
    let mut out = [Vec::with_capacity(n * n), Vec::with_capacity(n * n)];
    for k in 0..n * n {
        let vars = vars_uv((k / n) as f64 / n as f64, (k % n) as f64 / n as f64);
        for c in 0..2 {
            out[c].push(progs[c].eval_checked(&vars)?);
        }
    }
    Ok(out)
}

impl ClosednessObjective {
    pub fn new(a: &DifferentialForm, b: &DifferentialForm, n: usize) -> Result<Self, PrelagError> {
        if n < 4 {
            return Err(PrelagError::Invalid(format!("grid {n} is too small")));
        }
        Ok(ClosednessObjective {
            spectral: Spectral::new(n),
            a: torus_components(a, n)?,
            b: torus_components(b, n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.spectral.n
    }

    /// Number of unknowns, `φ` then `γ`.
    pub fn dim(&self) -> usize {
        2 * self.n() * self.n()
    }

    fn curl(&self, x: &[f64]) -> Vec<f64> {
        let m = self.n() * self.n();
        let (phi, gamma) = x.split_at(m);
        let mut w = [vec![0.0; m], vec![0.0; m]];
        for k in 0..m {
            let (ef, eg) = (phi[k].exp(), gamma[k].exp());
            for c in 0..2 {
                w[c][k] = ef * self.a[c][k] - eg * self.b[c][k];
            }
        }
        let dv_u = self.spectral.derivative(&w[1], 0);
        let du_v = self.spectral.derivative(&w[0], 1);
        dv_u.iter().zip(&du_v).map(|(p, q)| p - q).collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let c = self.curl(x);
        0.5 * c.iter().map(|t| t * t).sum::<f64>() / c.len() as f64
    }

    /// RMS of the curl, `√(2J)`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        (2.0 * self.value(x)).sqrt()
    }

    /// `J` and its gradient by the adjoint of the spectral curl.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.n() * self.n();
        let c = self.curl(x);
        let value = 0.5 * c.iter().map(|t| t * t).sum::<f64>() / m as f64;
        // D is antisymmetric: ∂J/∂w_v = −D_u c / m, ∂J/∂w_u = D_v c / m
        let du_c = self.spectral.derivative(&c, 0);
        let dv_c = self.spectral.derivative(&c, 1);
        let (phi, gamma) = x.split_at(m);
        let mut grad = vec![0.0; 2 * m];
        for k in 0..m {
            let gu = dv_c[k] / m as f64;
            let gv = -du_c[k] / m as f64;
            grad[k] = phi[k].exp() * (self.a[0][k] * gu + self.a[1][k] * gv);
            grad[m + k] = -gamma[k].exp() * (self.b[0][k] * gu + self.b[1][k] * gv);
        }
        (value, grad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingSolution {
    pub grid: usize,
    /// `log f` and `log g` at the grid nodes.
    pub log_f: Vec<f64>,
    pub log_g: Vec<f64>,
    /// Objective value per iteration, starting at the initial guess.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// RMS of the spectral curl at the returned grid functions.
    pub grid_residual: f64,
    /// RMS of `d(f a − g b)` evaluated from the symbolic interpolants at the nodes.
    pub residual: f64,
    #[serde(skip)]
    pub f: Expr,
    #[serde(skip)]
    pub g: Expr,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_mean(v: &mut [f64], m: usize) {
    let mean = v[..m].iter().sum::<f64>() / m as f64;
    v[..m].iter_mut().for_each(|t| *t -= mean);
}

/// Best grid functions found and the objective history.
pub(crate) struct Descent {
    pub x: Vec<f64>,
    pub history: Vec<f64>,
}

/// L-BFGS with Armijo backtracking; `mean(φ)` stays zero.
pub(crate) fn minimize(obj: &ClosednessObjective, params: &SolverParams) -> Descent {
    let m = obj.n() * obj.n();
    let mut x = vec![0.0; obj.dim()];
    let (mut f, mut g) = obj.value_and_gradient(&x);
    project_mean(&mut g, m);
    let mut history = vec![f];
    let target = 0.5 * (0.01 * params.tolerance).powi(2);
    let mut mem: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut failures = 0;
    for _ in 0..params.max_iterations {
        if f <= target {
            break;
        }
        // two-loop recursion
        let mut q: Vec<f64> = g.iter().map(|t| -t).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let scale = match mem.last() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / g.iter().fold(0.0f64, |acc, t| acc.max(t.abs())).max(1.0),
        };
        q.iter_mut().for_each(|t| *t *= scale);
        for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d = q;
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|t| -t).collect();
            slope = dot(&g, &d);
            mem.clear();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let ft = obj.value(&trial);
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            failures += 1;
            mem.clear();
            if failures >= 2 {
                break;
            }
            continue;
        };
        failures = 0;
        let (_, mut gn) = obj.value_and_gradient(&xn);
        project_mean(&mut gn, m);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if mem.len() == params.memory {
                mem.remove(0);
            }
            mem.push((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
        history.push(f);
    }
    Descent { x, history }
}

/// RMS over the grid nodes of `d(f a − g b)` with symbolic `f`, `g`.
pub fn symbolic_residual(
    a: &DifferentialForm,
    b: &DifferentialForm,
    f: &Expr,
    g: &Expr,
    n: usize,
) -> Result<f64, PrelagError> {
    let omega = a.scale(f).sub(&b.scale(g))?;
    let d = omega.exterior_derivative()?.compile();
    let mut sum = 0.0;
    for k in 0..n * n {
        let vars = vars_uv((k / n) as f64 / n as f64, (k % n) as f64 / n as f64);
        let c = d.eval_checked(&vars)?[0];
        sum += c * c;
    }
    Ok((sum / (n * n) as f64).sqrt())
}

/// Positive `f`, `g` on the torus with `f a − g b` closed, in the
/// parameterization `f = e^φ`, `g = e^γ`, `mean(φ) = 0`.
pub fn scaling_solve(a: &DifferentialForm, b: &DifferentialForm, params: &SolverParams) -> Result<ScalingSolution, PrelagError> {
    let n = params.grid;
    let obj = ClosednessObjective::new(a, b, n)?;
    let m = n * n;
    let mut worst = f64::INFINITY;
    for k in 0..m {
        let det = obj.a[0][k] * obj.b[1][k] - obj.a[1][k] * obj.b[0][k];
        let scale = obj.a[0][k].hypot(obj.a[1][k]) * obj.b[0][k].hypot(obj.b[1][k]);
        worst = worst.min(det.abs() / scale);
    }
    if !(worst > 1e-9) {
        return Err(PrelagError::Invalid(format!(
            "kernels of the two forms are not transverse (min |a∧b| {worst:e})"
        )));
    }
    let descent = minimize(&obj, params);
    let x = descent.x;
    let grid_residual = obj.residual(&x);
    let spectral = Spectral::new(n);
    let log_f = x[..m].to_vec();
    let log_g = x[m..].to_vec();
    let f = Expr::exp(spectral.interpolant(&log_f, params.truncation));
    let g = Expr::exp(spectral.interpolant(&log_g, params.truncation));
    let residual = symbolic_residual(a, b, &f, &g, n)?;
    let iterations = descent.history.len() - 1;
    if !(residual < params.tolerance && grid_residual < params.tolerance) {
        return Err(PrelagError::NoConvergence {
            residual: residual.max(grid_residual),
            iterations,
        });
    }
    Ok(ScalingSolution {
        grid: n,
        log_f,
        log_g,
        history: descent.history,
        iterations,
        grid_residual,
        residual,
        f,
        g,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Var;
    use std::f64::consts::TAU;

    fn one(u: Expr, v: Expr) -> DifferentialForm {
        DifferentialForm::one_form(Chart::Torus, vec![u, v]).unwrap()
    }

    fn planted() -> (DifferentialForm, DifferentialForm) {
        let h = Expr::parse("0.3*sin(2*pi*u)").unwrap();
        let e = Expr::exp(h);
        let a = one(Expr::mul(Expr::Const(0.5), e.clone()), e);
        let b = one(Expr::Const(1.0), Expr::Const(0.0));
        (a, b)
    }

    #[test]
    fn closed_constant_forms_stop_at_once() {
        let a = one(Expr::Const(1.0), Expr::Const(0.5));
        let b = one(Expr::Const(0.0), Expr::Const(1.0));
        let s = scaling_solve(&a, &b, &SolverParams::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.residual < 1e-12);
        assert!(s.f.is_one() && s.g.is_one());
    }

    #[test]
    fn planted_scaling_is_recovered() {
        let (a, b) = planted();
        let s = scaling_solve(&a, &b, &SolverParams::default()).unwrap();
        assert!(s.residual < 1e-6 && s.grid_residual < 1e-6);
        assert!((s.residual - s.grid_residual).abs() < 1e-8);
        let n = s.grid;
        let want: Vec<f64> = (0..n * n).map(|k| -0.3 * (TAU * (k / n) as f64 / n as f64).sin()).collect();
        let mean = want.iter().sum::<f64>() / want.len() as f64;
        for (got, w) in s.log_f.iter().zip(&want) {
            assert!(((got - (w - mean)).exp() - 1.0).abs() < 1e-3);
        }
        for w in s.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn adjoint_gradient_matches_differences() {
        let (a, b) = planted();
        let obj = ClosednessObjective::new(&a, &b, 16).unwrap();
        let x: Vec<f64> = (0..obj.dim()).map(|k| 0.1 * ((k as f64) * 0.7).sin()).collect();
        let (_, g) = obj.value_and_gradient(&x);
        for k in [0, 5, 77, 255, 256, 300, 511] {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-8), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn tangent_kernels_are_rejected() {
        let a = one(Expr::Const(1.0), Expr::Const(0.0));
        let b = one(Expr::add(Expr::Const(2.0), Expr::sin(Expr::var(Var::U))), Expr::Const(0.0));
        assert!(matches!(scaling_solve(&a, &b, &SolverParams::default()), Err(PrelagError::Invalid(_))));
    }
}
