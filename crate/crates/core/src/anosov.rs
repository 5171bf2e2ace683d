//! Suspension flows of hyperbolic toral automorphisms and their defining
//! pairs.
//!
//! For `A ∈ SL(2, ℤ)` with trace above 2 and `P A P⁻¹ = D_ν`, the flow is
//! `∂_z` on `(ℝ²/P(ℤ²) × ℝ)/ψ` with `ψ(w, z) = (D_ν w, z − ν)`. The defining
//! pair is `α_u = e^z dx`, `α_s = −e^{−z} dy` with rates `r_u = 1`,
//! `r_s = −1`, and the standard pair is `α_± = α_u ∓ α_s`.

use serde::Serialize;

use crate::contact::{al_check, ALReport, ContactError, FormPair, Verdict};
use crate::expr::{Env, Expr, ExprError, Var};
use crate::foliation::{Foliation2, FoliationError, VALIDATION_GRID};
use crate::geom::{
    lie_derivative, reeb_field, vars3, Chart, DifferentialForm, GeomError, Gluing3, GluingKind, Grid3,
    TorusEmbedding, VectorField3,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum AnosovError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error("matrix is not unimodular (det {det})")]
    NotUnimodular { det: i64 },
    #[error("matrix is not hyperbolic with positive eigenvalues (trace {trace})")]
    NotHyperbolic { trace: i64 },
    #[error("invalid flow model: {0}")]
    Model(String),
    #[error("weak foliations are not transverse at {at:?} (|det| {det:e})")]
    FoliationsNotTransverse { at: [f64; 2], det: f64 },
    #[error("splitting estimate did not converge in {iterations} steps; last iterates {last:?}")]
    NoConvergence { iterations: usize, last: [[f64; 2]; 2] },
}

/// An Anosov flow with a defining pair, on a glued chart.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowModel {
    pub name: String,
    pub gluing: Gluing3,
    pub x: VectorField3,
    pub alpha_u: DifferentialForm,
    pub alpha_s: DifferentialForm,
    pub r_u: Expr,
    pub r_s: Expr,
    pub fibers: Vec<TorusEmbedding>,
    /// The automorphism being suspended, for built-in models.
    pub matrix: Option<[[i64; 2]; 2]>,
}

/// Invariant residuals of a [`FlowModel`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelReport {
    /// Sup of `L_X α − r α` over the sample points, for `α_u` and `α_s`.
    pub rate_residual: [f64; 2],
    pub min_r_u: f64,
    pub max_r_s: f64,
    pub periodicity_residual: f64,
    pub standard_pair: ALReport,
}

fn sample_points(gluing: &Gluing3, count: usize) -> Vec<[f64; 3]> {
    // Kronecker sequence: fixed, well spread, no RNG state
    let steps = [2f64.sqrt().fract(), 3f64.sqrt().fract(), 5f64.sqrt().fract()];
    (1..=count)
        .map(|k| {
            let c = steps.map(|s| (k as f64 * s).fract());
            gluing.domain_point(c[0], c[1], c[2])
        })
        .collect()
}

impl FlowModel {
    /// Validated user model.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        gluing: Gluing3,
        x: VectorField3,
        alpha_u: DifferentialForm,
        alpha_s: DifferentialForm,
        r_u: Expr,
        r_s: Expr,
        fibers: Vec<TorusEmbedding>,
    ) -> Result<FlowModel, AnosovError> {
        for a in [&alpha_u, &alpha_s] {
            if a.chart() != Chart::Ambient || a.degree() != 1 {
                return Err(AnosovError::Model("defining forms must be ambient 1-forms".into()));
            }
        }
        let m = FlowModel {
            name: name.to_string(),
            gluing,
            x,
            alpha_u,
            alpha_s,
            r_u,
            r_s,
            fibers,
            matrix: None,
        };
        let report = m.validate(&Grid3::cube(16))?;
        if report.rate_residual[0].max(report.rate_residual[1]) >= 1e-9 {
            return Err(AnosovError::Model(format!(
                "L_X α ≠ r α (residuals {:?})",
                report.rate_residual
            )));
        }
        if !(report.min_r_u > 0.0 && report.max_r_s < 0.0) {
            return Err(AnosovError::Model(format!(
                "rates must satisfy r_u > 0 > r_s (min r_u {}, max r_s {})",
                report.min_r_u, report.max_r_s
            )));
        }
        if report.standard_pair.verdict != Verdict::AnosovLiouville {
            return Err(AnosovError::Model("standard pair is not Anosov-Liouville".into()));
        }
        Ok(m)
    }

    /// `α_± = α_u ∓ α_s`.
    pub fn standard_pair(&self) -> Result<FormPair, AnosovError> {
        Ok(FormPair::new(
            self.alpha_u.sub(&self.alpha_s)?,
            self.alpha_u.add(&self.alpha_s)?,
            self.gluing.clone(),
        )?)
    }

    pub fn volume(&self) -> DifferentialForm {
        DifferentialForm::volume(Chart::Ambient)
    }

    /// Checks the rate identities, the signs of the rates and the standard
    /// pair on `grid`.
    pub fn validate(&self, grid: &Grid3) -> Result<ModelReport, AnosovError> {
        let env = Env::new();
        let mut rate_residual = [0.0f64; 2];
        let points = sample_points(&self.gluing, 100);
        for (k, (alpha, r)) in [(&self.alpha_u, &self.r_u), (&self.alpha_s, &self.r_s)].into_iter().enumerate() {
            let diff = lie_derivative(&self.x, alpha)?.sub(&alpha.scale(r))?.compile();
            for q in &points {
                for c in diff.eval_checked(&vars3(*q))? {
                    rate_residual[k] = rate_residual[k].max(c.abs());
                }
            }
        }
        let (ru, rs) = (self.r_u.compile(&env), self.r_s.compile(&env));
        let mut min_r_u = f64::INFINITY;
        let mut max_r_s = f64::NEG_INFINITY;
        for i in 0..grid.len() {
            let vars = vars3(grid.point(&self.gluing, i));
            min_r_u = min_r_u.min(ru.eval_checked(&vars)?);
            max_r_s = max_r_s.max(rs.eval_checked(&vars)?);
        }
        let pair = self.standard_pair()?;
        Ok(ModelReport {
            rate_residual,
            min_r_u,
            max_r_s,
            periodicity_residual: pair.periodicity_residual(grid)?,
            standard_pair: al_check(&pair, &self.volume(), grid)?,
        })
    }
}

fn hyperbolic_eigen(a: [[i64; 2]; 2]) -> Result<(f64, [[f64; 2]; 2]), AnosovError> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det != 1 {
        return Err(AnosovError::NotUnimodular { det });
    }
    let trace = a[0][0] + a[1][1];
    if trace <= 2 {
        return Err(AnosovError::NotHyperbolic { trace });
    }
    let t = trace as f64;
    let lambda = 0.5 * (t + (t * t - 4.0).sqrt());
    let af = a.map(|r| r.map(|e| e as f64));
    let eigvec = |l: f64| -> [f64; 2] {
        // b ≠ 0 for hyperbolic integer matrices
        let v = [af[0][1], l - af[0][0]];
        let n = v[0].hypot(v[1]);
        let s = v[0].signum();
        [s * v[0] / n, s * v[1] / n]
    };
    let e_u = eigvec(lambda);
    let mut e_s = eigvec(1.0 / lambda);
    let mut det_q = e_u[0] * e_s[1] - e_s[0] * e_u[1];
    if det_q < 0.0 {
        e_s = [-e_s[0], -e_s[1]];
        det_q = -det_q;
    }
    let k = 1.0 / det_q.sqrt();
    // Q has the eigenvectors as columns, P = Q⁻¹
    let q = [[k * e_u[0], k * e_s[0]], [k * e_u[1], k * e_s[1]]];
    let p = [[q[1][1], -q[0][1]], [-q[1][0], q[0][0]]];
    Ok((lambda.ln(), p))
}

/// Suspension of `A` with `|trace| > 2`, `det = 1`; only positive trace is
/// realized by a diagonal `D_ν` with `ν > 0`.
pub fn suspension_model(a: [[i64; 2]; 2]) -> Result<FlowModel, AnosovError> {
    let (nu, p) = hyperbolic_eigen(a)?;
    let deck = [[nu.exp(), 0.0], [0.0, (-nu).exp()]];
    let gluing = Gluing3::new(p, deck, nu, GluingKind::MappingTorus)?;
    let z = Expr::var(Var::Z);
    let alpha_u = DifferentialForm::one_form(
        Chart::Ambient,
        vec![Expr::exp(z.clone()), Expr::Const(0.0), Expr::Const(0.0)],
    )?;
    let alpha_s = DifferentialForm::one_form(
        Chart::Ambient,
        vec![Expr::Const(0.0), Expr::neg(Expr::exp(Expr::neg(z))), Expr::Const(0.0)],
    )?;
    let fibers = vec![TorusEmbedding::fiber(&gluing, 0.0), TorusEmbedding::fiber(&gluing, 0.5 * nu)];
    Ok(FlowModel {
        name: format!("suspension of {a:?}"),
        gluing,
        x: VectorField3::constant([0.0, 0.0, 1.0]),
        alpha_u,
        alpha_s,
        r_u: Expr::Const(1.0),
        r_s: Expr::Const(-1.0),
        fibers,
        matrix: Some(a),
    })
}

/// The pair `α_± = ±e^z dx + e^{−z} dy` on the suspension chart.
pub fn symmetric_pair(gluing: &Gluing3) -> Result<FormPair, AnosovError> {
    let z = Expr::var(Var::Z);
    let ez = Expr::exp(z.clone());
    let emz = Expr::exp(Expr::neg(z));
    let mk = |a: Expr| DifferentialForm::one_form(Chart::Ambient, vec![a, emz.clone(), Expr::Const(0.0)]);
    Ok(FormPair::new(mk(ez.clone())?, mk(Expr::neg(ez))?, gluing.clone())?)
}

/// Oriented kernels of `α_u|_Σ` and `α_s|_Σ` in the `(u, v)` chart of `Σ`.
pub fn weak_foliations_on_torus(
    m: &FlowModel,
    sigma: &TorusEmbedding,
) -> Result<(Foliation2, Foliation2), AnosovError> {
    sigma.check_transverse(&m.x, 32)?;
    let ws = Foliation2::from_form(&m.alpha_u.restrict(sigma)?)?;
    let wu = Foliation2::from_form(&m.alpha_s.restrict(sigma)?)?;
    let (at, det) = ws.transversality(&wu, VALIDATION_GRID);
    if det <= 1e-9 {
        return Err(AnosovError::FoliationsNotTransverse { at, det });
    }
    Ok((ws, wu))
}

/// Largest `|R·N|/(|R||N|)` over an `n × n` grid of `Σ`, `R` the Reeb field
/// of `alpha` and `N` the normal of `Σ`.
pub fn reeb_tangency_residual(alpha: &DifferentialForm, sigma: &TorusEmbedding, n: usize) -> Result<f64, AnosovError> {
    let r = reeb_field(alpha)?.compile();
    let normal = sigma.normal();
    let nn = normal.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let vars = vars3(sigma.point(i as f64 / n as f64, j as f64 / n as f64));
            let rv = [r[0].eval_checked(&vars)?, r[1].eval_checked(&vars)?, r[2].eval_checked(&vars)?];
            let rn = rv.iter().map(|c| c * c).sum::<f64>().sqrt();
            let dot = rv[0] * normal[0] + rv[1] * normal[1] + rv[2] * normal[2];
            worst = worst.max(dot.abs() / (rn * nn));
        }
    }
    Ok(worst)
}

/// Finite-time splitting of a suspension model, directions in the lattice
/// coordinates of the fiber.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingEstimate {
    pub base_point: [f64; 3],
    pub horizon: f64,
    pub unstable: [f64; 2],
    pub stable: [f64; 2],
    /// Expansion of the unstable direction over one horizon.
    pub unstable_factor: f64,
    /// Contraction of the stable direction over one horizon.
    pub stable_factor: f64,
    /// Angle change between successive iterates, forward then backward.
    pub history: [Vec<f64>; 2],
}

impl SplittingEstimate {
    pub fn unstable_slope(&self) -> f64 {
        self.unstable[1] / self.unstable[0]
    }

    pub fn stable_slope(&self) -> f64 {
        self.stable[1] / self.stable[0]
    }

    /// The unstable direction as an ambient tangent vector.
    pub fn unstable_ambient(&self, gluing: &Gluing3) -> [f64; 3] {
        let p = gluing.lattice;
        let u = self.unstable;
        [p[0][0] * u[0] + p[0][1] * u[1], p[1][0] * u[0] + p[1][1] * u[1], 0.0]
    }
}

const SPLIT_TOL: f64 = 1e-13;
const SPLIT_MAX: usize = 200;

fn power_iteration(m: [[f64; 2]; 2]) -> Result<([f64; 2], f64, Vec<f64>), [[f64; 2]; 2]> {
    let mut v: [f64; 2] = [1.0, 1.0 / 3.0];
    let n = v[0].hypot(v[1]);
    v = [v[0] / n, v[1] / n];
    let mut history = Vec::new();
    for _ in 0..SPLIT_MAX {
        let w = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        let factor = w[0].hypot(w[1]);
        let mut next = [w[0] / factor, w[1] / factor];
        if next[0] < 0.0 || (next[0] == 0.0 && next[1] < 0.0) {
            next = [-next[0], -next[1]];
        }
        let change = (v[0] * next[1] - v[1] * next[0]).abs();
        history.push(change);
        let prev = v;
        v = next;
        if change < SPLIT_TOL {
            return Ok((v, factor, history));
        }
        if history.len() == SPLIT_MAX {
            return Err([prev, v]);
        }
    }
    Err([v, v])
}

/// Power iteration of the time-`T` derivative `P⁻¹ D_T P` in lattice
/// coordinates, forward for `E^u` and backward for `E^s`.
pub fn estimate_splitting(m: &FlowModel, p: [f64; 3], horizon: f64) -> Result<SplittingEstimate, AnosovError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(AnosovError::Model(format!("horizon must be positive, got {horizon}")));
    }
    if m.matrix.is_none() || m.x.as_constant() != Some([0.0, 0.0, 1.0]) {
        return Err(AnosovError::Model("splitting estimates need a built-in suspension model".into()));
    }
    let lat = m.gluing.lattice;
    let inv = [[lat[1][1], -lat[0][1]], [-lat[1][0], lat[0][0]]];
    let cocycle = |t: f64| {
        let d = [t.exp(), (-t).exp()];
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..2).map(|k| inv[i][k] * d[k] * lat[k][j]).sum();
            }
        }
        out
    };
    let fail = |last: [[f64; 2]; 2]| AnosovError::NoConvergence {
        iterations: SPLIT_MAX,
        last,
    };
    let (unstable, unstable_factor, hu) = power_iteration(cocycle(horizon)).map_err(fail)?;
    let (stable, inv_factor, hs) = power_iteration(cocycle(-horizon)).map_err(fail)?;
    Ok(SplittingEstimate {
        base_point: p,
        horizon,
        unstable,
        stable,
        unstable_factor,
        stable_factor: 1.0 / inv_factor,
        history: [hu, hs],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

    #[test]
    fn cat_map_gluing() {
        let m = suspension_model(CAT).unwrap();
        let nu = (0.5 * (3.0 + 5f64.sqrt())).ln();
        assert!((m.gluing.shift - nu).abs() < 1e-15);
        let p = m.gluing.lattice;
        assert!((p[0][0] * p[1][1] - p[0][1] * p[1][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_parabolic_and_negative_trace() {
        assert!(matches!(suspension_model([[1, 1], [0, 1]]), Err(AnosovError::NotHyperbolic { trace: 2 })));
        assert!(matches!(suspension_model([[-2, -1], [-1, -1]]), Err(AnosovError::NotHyperbolic { .. })));
        assert!(matches!(suspension_model([[2, 1], [1, 2]]), Err(AnosovError::NotUnimodular { det: 3 })));
    }

    #[test]
    fn weak_foliations_of_the_fiber() {
        let m = suspension_model(CAT).unwrap();
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let (ws, wu) = weak_foliations_on_torus(&m, &m.fibers[0]).unwrap();
        let a = ws.at(0.3, 0.1);
        let b = wu.at(0.3, 0.1);
        assert!((a[1] / a[0] + phi).abs() < 1e-12);
        assert!((b[1] / b[0] - (phi - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn splitting_of_the_cat_map() {
        let m = suspension_model(CAT).unwrap();
        let s = estimate_splitting(&m, [0.0; 3], m.gluing.shift).unwrap();
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        assert!((s.unstable_slope() - (phi - 1.0)).abs() < 1e-6);
        assert!(s.history[0].len() <= 30);
        assert!((s.stable_slope() + phi).abs() < 1e-6);
        assert!((s.unstable_factor - 0.5 * (3.0 + 5f64.sqrt())).abs() < 1e-9);
        let e = s.unstable_ambient(&m.gluing);
        // α_s = −e^{−z} dy at z = 0
        assert!(e[1].abs() < 1e-6);
    }
}
