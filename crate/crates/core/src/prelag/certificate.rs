use std::time::Instant;

use rustfft::num_complex::Complex;
use serde::Serialize;

use super::solve::{scaling_solve, ScalingSolution, SolverParams};
use super::spectral::{freq, Spectral};
use super::{obstruction_test, ObstructionReport, ObstructionVerdict, PrelagError};
use crate::anosov::{weak_foliations_on_torus, FlowModel};
use crate::contact::{
    al_check, extend_scaling, perturb_field, wedge_11, CollarFrame, ContactError, FormPair, InnerRule, Jet, PairField,
    PerturbOptions, ScalingExtension, ScalingParams, Verdict, ALReport,
};
use crate::expr::{Env, Expr, Var};
use crate::foliation::{
    cone_separation, parallel_compact_leaves, ConeSearch, Foliation2, ParallelReport, ParallelVerdict, Separation,
};
use crate::geom::{inv2, mul2, vars3, vars_uv, Chart, CompiledForm, DifferentialForm, Gluing3, TorusEmbedding};

/// Diagnostic emitted when both foliations carry freely homotopic compact leaves.
const PARALLEL_DIAGNOSTIC: &str =
    "parallel compact leaves: the separation hypothesis of the construction fails, so the torus is left undecided";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreLagParams {
    /// `C` in `(C α₊, C⁻¹ α₋)`.
    pub scale_c: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Relative gap between the extended scalings and their plateaus.
    pub plateau_slack: f64,
    pub solver: SolverParams,
    pub perturb: PerturbOptions,
    pub cone: ConeSearch,
    /// Closedness threshold for a certificate.
    pub tolerance: f64,
    pub inner_rule: InnerRule,
}

impl Default for PreLagParams {
    fn default() -> Self {
        PreLagParams {
            scale_c: 10.0,
            epsilon: 0.02,
            delta: 0.1,
            plateau_slack: 1e-3,
            solver: SolverParams::default(),
            perturb: PerturbOptions::default(),
            cone: ConeSearch::default(),
            tolerance: 1e-6,
            inner_rule: InnerRule::AtBasePoint,
        }
    }
}

/// What the pipeline runs on.
#[derive(Clone, Copy, Debug)]
pub enum PreLagInput<'a> {
    Model {
        model: &'a FlowModel,
        sigma: &'a TorusEmbedding,
    },
    /// Bare foliation data; only the obstruction and leaf stages run.
    Foliations {
        ws: &'a Foliation2,
        wu: &'a Foliation2,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Stopped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub message: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Certificate,
    NotAttempted,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtensionSummary {
    pub epsilon: f64,
    pub delta: f64,
    pub closing_period: f64,
    /// Plateaus `(c, C)` of the extension of `f`.
    pub plateaus_f: [f64; 2],
    /// Plateaus of the extension of `1/g`.
    pub plateaus_inv_g: [f64; 2],
    /// `min (X log μ + r)` for `f` and for `1/g`.
    pub margins: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub scale_c: f64,
    pub scaling: ScalingSolution,
    pub extension: ExtensionSummary,
    /// The perturbation vanished.
    pub unperturbed: bool,
    /// `C¹` size of `σ` on the torus.
    pub sigma_c1: f64,
    /// `C¹` distance of the restricted sum from its closed target, `2 |σ|_{C¹}`.
    pub c1_distance: f64,
    pub c1_within_threshold: bool,
    /// Sup of `(α̃₊ + α̃₋)|_Σ − β`.
    pub restriction_residual: f64,
    /// Sup of `d[(α̃₊ + α̃₋)|_Σ]` on the torus samples.
    pub final_closedness: f64,
    pub final_al: ALReport,
    pub unscaled_al: ALReport,
    /// Final over unscaled `min(1 − f₀²/4f₊f₋)`.
    pub normalized_margin_ratio: f64,
    /// Final over unscaled `√(min f₊ · min f₋)`.
    pub geometric_margin_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreLagReport {
    pub input: String,
    pub obstruction: Option<ObstructionReport>,
    pub parallel: Option<ParallelReport>,
    pub separation: Option<Separation>,
    pub construction: Construction,
    pub diagnostic: Option<String>,
    pub certificate: Option<Certificate>,
    pub stages: Vec<StageRecord>,
}

impl PreLagReport {
    pub fn obstructed(&self) -> bool {
        self.obstruction
            .as_ref()
            .is_some_and(|o| o.verdict == ObstructionVerdict::Obstructed)
    }

    pub fn parallel_leaves(&self) -> bool {
        self.parallel.as_ref().is_some_and(|p| p.verdict == ParallelVerdict::Parallel)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphCheck {
    pub holds: bool,
    pub residual: f64,
}

fn torus_sup(form: &DifferentialForm, n: usize) -> Result<f64, PrelagError> {
    let c = form.compile();
    let mut sup = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for x in c.eval_checked(&vars_uv(i as f64 / n as f64, j as f64 / n as f64))? {
                sup = sup.max(x.abs());
            }
        }
    }
    Ok(sup)
}

/// Whether the graph of `f` over `Σ` is Lagrangian for the symplectization
/// of `p`: the sup of `d[(e^f α₊ + e^{−f} α₋)|_Σ]` on a `n × n` grid is
/// below `1e-6`. `f` is an expression in `u, v`.
pub fn check_graph_lagrangian(
    p: &FormPair,
    sigma: &TorusEmbedding,
    f: &Expr,
    n: usize,
) -> Result<GraphCheck, PrelagError> {
    if f.free_vars().iter().any(|w| !matches!(w, Var::U | Var::V)) {
        return Err(PrelagError::Invalid("the graph function must depend on u, v only".into()));
    }
    let plus = p.plus.restrict(sigma)?.scale(&Expr::exp(f.clone()));
    let minus = p.minus.restrict(sigma)?.scale(&Expr::exp(Expr::neg(f.clone())));
    let residual = torus_sup(&plus.add(&minus)?.exterior_derivative()?, n.max(2))?;
    Ok(GraphCheck {
        holds: residual < 1e-6,
        residual,
    })
}

/// The closed part `β = β̄ + dκ` of a 1-form on the torus: its mean plus the
/// exact part, computed spectrally on an `n × n` grid with `κ` a
/// trigonometric polynomial.
pub fn closed_projection(s: &DifferentialForm, n: usize, threshold: f64) -> Result<DifferentialForm, PrelagError> {
    if s.chart() != Chart::Torus || s.degree() != 1 {
        return Err(PrelagError::Invalid("closed projection needs a 1-form on the torus".into()));
    }
    let c = s.compile();
    let mut comps = [Vec::with_capacity(n * n), Vec::with_capacity(n * n)];
    for k in 0..n * n {
        let w = c.eval_checked(&vars_uv((k / n) as f64 / n as f64, (k % n) as f64 / n as f64))?;
        comps[0].push(w[0]);
        comps[1].push(w[1]);
    }
    let spectral = Spectral::new(n);
    let hu = spectral.coefficients(&comps[0]);
    let hv = spectral.coefficients(&comps[1]);
    let mut kappa = vec![Complex::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let (k0, k1) = (freq(i, n), freq(j, n));
            let nyquist = n % 2 == 0 && (i == n / 2 || j == n / 2);
            if (k0 == 0 && k1 == 0) || nyquist {
                continue;
            }
            let idx = i * n + j;
            let dot = hu[idx] * k0 as f64 + hv[idx] * k1 as f64;
            let norm2 = (k0 * k0 + k1 * k1) as f64;
            kappa[idx] = dot / Complex::new(0.0, std::f64::consts::TAU * norm2);
        }
    }
    let kappa = spectral.expr_from_coefficients(&kappa, threshold);
    let mean = DifferentialForm::one_form(Chart::Torus, vec![Expr::Const(hu[0].re), Expr::Const(hv[0].re)])?;
    let exact = DifferentialForm::scalar(Chart::Torus, kappa).exterior_derivative()?;
    Ok(mean.add(&exact)?)
}

/// `(C(μ_f α_u − μ_g α_s), C⁻¹(μ_f α_u + μ_g α_s))` with `μ_f`, `μ_g` the
/// flow-direction extensions of `f`, `g` from a horizontal torus.
#[derive(Clone, Debug)]
pub struct ExtendedPair {
    gluing: Gluing3,
    frame: CollarFrame,
    center: f64,
    alpha_u: (CompiledForm, CompiledForm),
    alpha_s: (CompiledForm, CompiledForm),
    pub mu_f: ScalingExtension,
    /// Extension of `1/g`; `μ_g` is its reciprocal.
    pub mu_inv_g: ScalingExtension,
    pub scale_c: f64,
}

fn plateaus(f: &Expr, r: &Expr, eps: f64, slack: f64, n: usize) -> Result<[f64; 2], PrelagError> {
    let (fp, rp) = (f.compile(&Env::new()), r.compile(&Env::new()));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let vars = vars_uv(i as f64 / n as f64, j as f64 / n as f64);
            let (fv, rv) = (fp.eval_checked(&vars)?, rp.eval_checked(&vars)?);
            let spread = (eps * (1.0 - rv)).abs();
            lo = lo.min(fv * (-spread).exp());
            hi = hi.max(fv * spread.exp());
        }
    }
    Ok([(1.0 - slack) * lo, (1.0 + slack) * hi])
}

impl ExtendedPair {
    pub fn new(
        model: &FlowModel,
        sigma: &TorusEmbedding,
        f: &Expr,
        g: &Expr,
        params: &PreLagParams,
    ) -> Result<ExtendedPair, PrelagError> {
        if sigma.du[2] != 0.0 || sigma.dv[2] != 0.0 || !sigma.closes_up {
            return Err(PrelagError::Invalid("the extension is implemented for closed horizontal tori only".into()));
        }
        let frame = CollarFrame::new(sigma, &model.x)?;
        if !(frame.x[2] > 0.0) {
            return Err(PrelagError::Invalid("the generator must have positive z-component".into()));
        }
        let period = model.gluing.shift / frame.x[2];
        // rates in collar coordinates, with z standing for the flow time t
        let base = sigma.base;
        let to_collar = |e: &Expr| {
            let c = |k: usize| {
                Expr::sum([
                    Expr::Const(base[k]),
                    Expr::mul(Expr::Const(sigma.du[k]), Expr::var(Var::U)),
                    Expr::mul(Expr::Const(sigma.dv[k]), Expr::var(Var::V)),
                    Expr::mul(Expr::Const(frame.x[k]), Expr::var(Var::Z)),
                ])
            };
            e.subst(&[(Var::X, c(0)), (Var::Y, c(1)), (Var::Z, c(2))])
        };
        let r_u = to_collar(&model.r_u);
        let neg_r_s = Expr::neg(to_collar(&model.r_s));
        let inv_g = Expr::div(Expr::Const(1.0), g.clone());
        let n = 32;
        let mk = |h: &Expr, r: &Expr| -> Result<ScalingExtension, PrelagError> {
            let [c_low, c_high] = plateaus(h, r, params.epsilon, params.plateau_slack, n)?;
            let mut sp = ScalingParams::new(params.epsilon, params.delta, c_low, c_high);
            sp.torus_samples = n;
            sp.rule = params.inner_rule;
            sp.closing_period = Some(period);
            Ok(extend_scaling(h, r, &sp)?)
        };
        let compile = |a: &DifferentialForm| -> Result<(CompiledForm, CompiledForm), PrelagError> {
            Ok((a.compile(), a.exterior_derivative()?.compile()))
        };
        Ok(ExtendedPair {
            gluing: model.gluing.clone(),
            center: base[2] + frame.x[2] * (0.5 * period - 2.0 * params.delta),
            frame,
            alpha_u: compile(&model.alpha_u)?,
            alpha_s: compile(&model.alpha_s)?,
            mu_f: mk(f, &r_u)?,
            mu_inv_g: mk(&inv_g, &neg_r_s)?,
            scale_c: params.scale_c,
        })
    }

    fn scaled_jet(&self, form: &(CompiledForm, CompiledForm), log: [f64; 4], q: [f64; 3]) -> Jet {
        let vars = vars3(q);
        let mut a = Jet::default();
        form.0.eval_into(&vars, &mut a.value);
        form.1.eval_into(&vars, &mut a.d);
        let dl: [f64; 3] = std::array::from_fn(|k| {
            (0..3).map(|i| log[i + 1] * self.frame.covector(i)[k]).sum::<f64>()
        });
        let mu = log[0].exp();
        let w = wedge_11(dl, a.value);
        Jet {
            value: a.value.map(|c| mu * c),
            d: std::array::from_fn(|k| mu * (w[k] + a.d[k])),
        }
    }

    /// Jets of `μ_f α_u` and `μ_g α_s`.
    pub fn defining_jets(&self, q: [f64; 3]) -> [Jet; 2] {
        let r = self.gluing.representative_near(q, self.center);
        let [u, v, t] = self.frame.coords(r);
        let lf = self.mu_f.log_jet(u, v, t);
        let lg = self.mu_inv_g.log_jet(u, v, t).map(|c| -c);
        let jets = [self.scaled_jet(&self.alpha_u, lf, r), self.scaled_jet(&self.alpha_s, lg, r)];
        let k = ((q[2] - r[2]) / self.gluing.shift).round() as i32;
        if k == 0 {
            return jets;
        }
        // pull back along ψ^k, which carries q to r
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        let step = if k > 0 { self.gluing.deck } else { inv2(&self.gluing.deck) };
        for _ in 0..k.unsigned_abs() {
            m = mul2(&step, &m);
        }
        let j = [[m[0][0], m[0][1], 0.0], [m[1][0], m[1][1], 0.0], [0.0, 0.0, 1.0]];
        jets.map(|jet| pull_back(&j, jet))
    }
}

/// `F*` of a jet for a linear map with Jacobian `j`.
fn pull_back(j: &[[f64; 3]; 3], jet: Jet) -> Jet {
    let value = std::array::from_fn(|i| (0..3).map(|c| j[c][i] * jet.value[c]).sum());
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let two = |a: usize, b: usize| -> f64 {
        match (a, b) {
            _ if a == b => 0.0,
            _ if a < b => jet.d[pairs.iter().position(|&p| p == (a, b)).unwrap()],
            _ => -jet.d[pairs.iter().position(|&p| p == (b, a)).unwrap()],
        }
    };
    let d = pairs.map(|(a, b)| {
        let mut acc = 0.0;
        for c in 0..3 {
            for e in 0..3 {
                acc += j[c][a] * j[e][b] * two(c, e);
            }
        }
        acc
    });
    Jet { value, d }
}

impl PairField for ExtendedPair {
    fn gluing(&self) -> &Gluing3 {
        &self.gluing
    }

    fn jets(&self, q: [f64; 3]) -> Result<[Jet; 2], ContactError> {
        let [u, s] = self.defining_jets(q);
        let c = self.scale_c;
        let jets = [u.add(s.scale(-1.0)).scale(c), u.add(s).scale(1.0 / c)];
        if jets.iter().any(|j| j.value.iter().chain(&j.d).any(|x| !x.is_finite())) {
            return Err(ContactError::NonFinite { point: q });
        }
        Ok(jets)
    }
}

struct Pipeline {
    report: PreLagReport,
    clock: Instant,
}

impl Pipeline {
    fn record(&mut self, name: &str, status: StageStatus, message: Option<String>) {
        let now = Instant::now();
        self.report.stages.push(StageRecord {
            name: name.to_string(),
            status,
            seconds: (now - self.clock).as_secs_f64(),
            message,
        });
        self.clock = now;
    }

    fn fail(mut self, name: &str, diagnostic: String) -> PreLagReport {
        self.record(name, StageStatus::Failed, Some(diagnostic.clone()));
        self.report.construction = Construction::Failed;
        self.report.diagnostic = Some(diagnostic);
        self.report
    }
}

/// Runs the obstruction test and, when it passes and no parallel compact
/// leaves are found, tries to build a certifying pair. Never fails: every
/// stage outcome is recorded in the report.
pub fn pre_lagrangian_certificate(input: PreLagInput<'_>, params: &PreLagParams) -> PreLagReport {
    let mut p = Pipeline {
        report: PreLagReport {
            input: match input {
                PreLagInput::Model { model, .. } => model.name.clone(),
                PreLagInput::Foliations { .. } => "foliations".into(),
            },
            obstruction: None,
            parallel: None,
            separation: None,
            construction: Construction::NotAttempted,
            diagnostic: None,
            certificate: None,
            stages: Vec::new(),
        },
        clock: Instant::now(),
    };

    let (ws, wu) = match input {
        PreLagInput::Model { model, sigma } => match weak_foliations_on_torus(model, sigma) {
            Ok(pair) => pair,
            Err(e) => return p.fail("foliations", e.to_string()),
        },
        PreLagInput::Foliations { ws, wu } => (ws.clone(), wu.clone()),
    };
    p.record("foliations", StageStatus::Ok, None);

    match obstruction_test(&ws, &wu) {
        Ok(o) => {
            let obstructed = o.verdict == ObstructionVerdict::Obstructed;
            let message = format!(
                "winding of the weak stable foliation ({}, {})",
                o.winding_ws.w_u, o.winding_ws.w_v
            );
            p.report.obstruction = Some(o);
            if obstructed {
                p.record("obstruction", StageStatus::Stopped, Some(message));
                p.report.diagnostic =
                    Some("the weak foliations wind nontrivially, so the torus is not pre-Lagrangian".into());
                return p.report;
            }
            p.record("obstruction", StageStatus::Ok, Some(message));
        }
        Err(e) => return p.fail("obstruction", e.to_string()),
    }

    match parallel_compact_leaves(&ws, &wu) {
        Ok(r) => {
            let parallel = r.verdict == ParallelVerdict::Parallel;
            p.report.parallel = Some(r);
            if parallel {
                return p.fail("parallel_leaves", PARALLEL_DIAGNOSTIC.into());
            }
        }
        Err(e) => return p.fail("parallel_leaves", e.to_string()),
    }
    match cone_separation(&ws, &wu, &params.cone) {
        Ok(s) => p.report.separation = s,
        Err(e) => return p.fail("parallel_leaves", e.to_string()),
    }
    p.record("parallel_leaves", StageStatus::Ok, None);

    let PreLagInput::Model { model, sigma } = input else {
        return p.report;
    };
    match build_certificate(&mut p, model, sigma, params) {
        Ok(cert) => {
            let ok = cert.final_closedness < params.tolerance && cert.final_al.verdict == Verdict::AnosovLiouville;
            if ok {
                p.report.construction = Construction::Certificate;
                p.report.certificate = Some(cert);
                p.record("final_check", StageStatus::Ok, None);
                p.report
            } else {
                let msg = format!(
                    "final closedness {:e} or AL verdict {:?} does not certify",
                    cert.final_closedness, cert.final_al.verdict
                );
                p.fail("final_check", msg)
            }
        }
        Err((stage, e)) => p.fail(stage, e.to_string()),
    }
}

type StageError = (&'static str, PrelagError);

fn at<T, E: Into<PrelagError>>(stage: &'static str, r: Result<T, E>) -> Result<T, StageError> {
    r.map_err(|e| (stage, e.into()))
}

fn build_certificate(
    p: &mut Pipeline,
    model: &FlowModel,
    sigma: &TorusEmbedding,
    params: &PreLagParams,
) -> Result<Certificate, StageError> {
    let a = at("scaling_solve", model.alpha_u.restrict(sigma))?;
    let b = at("scaling_solve", model.alpha_s.restrict(sigma))?;
    let solution = at("scaling_solve", scaling_solve(&a, &b, &params.solver))?;
    p.record(
        "scaling_solve",
        StageStatus::Ok,
        Some(format!("residual {:e} after {} iterations", solution.residual, solution.iterations)),
    );

    let ext = at("extend_scaling", ExtendedPair::new(model, sigma, &solution.f, &solution.g, params))?;
    let extension = ExtensionSummary {
        epsilon: params.epsilon,
        delta: params.delta,
        closing_period: ext.mu_f.params.closing_period.unwrap_or(model.gluing.shift),
        plateaus_f: [ext.mu_f.params.c_low, ext.mu_f.params.c_high],
        plateaus_inv_g: [ext.mu_inv_g.params.c_low, ext.mu_inv_g.params.c_high],
        margins: [ext.mu_f.margin, ext.mu_inv_g.margin],
    };
    p.record("extend_scaling", StageStatus::Ok, None);

    let c = params.scale_c;
    let sum = at(
        "perturb",
        a.scale(&Expr::mul(Expr::Const(c + 1.0 / c), solution.f.clone()))
            .sub(&b.scale(&Expr::mul(Expr::Const(c - 1.0 / c), solution.g.clone()))),
    )?;
    let n = params.perturb.torus_samples.max(4);
    let beta = at("perturb", closed_projection(&sum, n, params.solver.truncation))?;
    let vol = model.volume();
    let perturbed = at(
        "perturb",
        perturb_field(ext, &sum, &beta, sigma, &model.x, &vol, &params.perturb),
    )?;
    p.record("perturb", StageStatus::Ok, None);

    let restricted = match &perturbed.patch {
        None => sum.clone(),
        Some(patch) => at(
            "final_check",
            patch
                .extension
                .restrict(sigma)
                .and_then(|s| sum.add(&s.scale(&Expr::Const(2.0)))),
        )?,
    };
    let final_closedness = at(
        "final_check",
        restricted.exterior_derivative().map_err(PrelagError::from).and_then(|d| torus_sup(&d, n)),
    )?;
    let standard = at("final_check", model.standard_pair())?;
    let unscaled_al = at("final_check", al_check(&standard, &vol, &params.perturb.grid))?;
    let d = perturbed.diagnostics;
    let geometric = |r: &ALReport| (r.f_plus.min * r.f_minus.min).sqrt();
    Ok(Certificate {
        scale_c: c,
        scaling: solution,
        extension,
        unperturbed: perturbed.patch.is_none(),
        sigma_c1: d.sigma_c1,
        c1_distance: 2.0 * d.sigma_c1,
        c1_within_threshold: d.c1_within_threshold,
        restriction_residual: d.restriction_residual,
        final_closedness,
        normalized_margin_ratio: d.report.normalized_margin / unscaled_al.normalized_margin,
        geometric_margin_ratio: geometric(&d.report) / geometric(&unscaled_al),
        final_al: d.report,
        unscaled_al,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosov::{suspension_model, symmetric_pair};
    use crate::foliation::models;

    #[test]
    fn graph_check_on_the_fiber() {
        let m = suspension_model([[2, 1], [1, 1]]).unwrap();
        let pair = symmetric_pair(&m.gluing).unwrap();
        let fiber = &m.fibers[0];
        let zero = check_graph_lagrangian(&pair, fiber, &Expr::Const(0.0), 64).unwrap();
        assert!(zero.holds && zero.residual < 1e-12);
        assert!(check_graph_lagrangian(&pair, fiber, &Expr::Const(0.7), 64).unwrap().holds);
        let wavy = check_graph_lagrangian(&pair, fiber, &Expr::parse("sin(2*pi*u)").unwrap(), 64).unwrap();
        assert!(!wavy.holds && wavy.residual > 1e-3);
    }

    #[test]
    fn closed_projection_is_exactly_closed() {
        let s = DifferentialForm::one_form(
            Chart::Torus,
            vec![Expr::parse("1 + cos(2*pi*v)").unwrap(), Expr::parse("0.5 + sin(2*pi*u)").unwrap()],
        )
        .unwrap();
        let beta = closed_projection(&s, 32, 1e-14).unwrap();
        assert!(torus_sup(&beta.exterior_derivative().unwrap(), 32).unwrap() < 1e-12);
        // the coexact part here is the whole oscillation
        let vals = beta.compile().eval(&vars_uv(0.3, 0.1));
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 0.5).abs() < 1e-12);
        let grad = DifferentialForm::scalar(Chart::Torus, Expr::parse("sin(2*pi*(u+v))").unwrap())
            .exterior_derivative()
            .unwrap();
        let back = closed_projection(&grad, 16, 1e-14).unwrap();
        let (x, y) = (back.compile().eval(&vars_uv(0.2, 0.7)), grad.compile().eval(&vars_uv(0.2, 0.7)));
        assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
    }

    #[test]
    fn cat_map_fiber_is_certified() {
        let m = suspension_model([[2, 1], [1, 1]]).unwrap();
        let mut params = PreLagParams::default();
        params.perturb.grid = crate::geom::Grid3::cube(24);
        let r = pre_lagrangian_certificate(PreLagInput::Model { model: &m, sigma: &m.fibers[0] }, &params);
        assert_eq!(r.construction, Construction::Certificate, "{:?}", r.diagnostic);
        let o = r.obstruction.as_ref().unwrap();
        assert!(o.winding_ws.is_trivial() && o.windings_agree);
        let c = r.certificate.unwrap();
        assert_eq!(c.scaling.iterations, 0);
        assert!(c.final_closedness < 1e-9);
        assert!((c.normalized_margin_ratio - 1.0).abs() < 0.05);
        assert!((c.geometric_margin_ratio - 1.0).abs() < 0.05);
    }

    #[test]
    fn foliation_only_verdicts() {
        let (ws, wu) = (models::franks_williams(), models::franks_williams_partner());
        let r = pre_lagrangian_certificate(PreLagInput::Foliations { ws: &ws, wu: &wu }, &PreLagParams::default());
        assert!(r.obstructed());
        assert_eq!(r.construction, Construction::NotAttempted);
        assert!(r.certificate.is_none());

        let (ws, wu) = (models::figure3(), models::figure3_partner());
        let r = pre_lagrangian_certificate(PreLagInput::Foliations { ws: &ws, wu: &wu }, &PreLagParams::default());
        assert!(!r.obstructed() && r.parallel_leaves());
        assert_eq!(r.construction, Construction::Failed);
        assert!(r.diagnostic.unwrap().contains("parallel compact leaves"));
    }

    #[test]
    fn extended_pair_jets_are_consistent() {
        let m = suspension_model([[2, 1], [1, 1]]).unwrap();
        let f = Expr::parse("exp(0.05*sin(2*pi*u))").unwrap();
        let g = Expr::parse("1 + 0.03*cos(2*pi*v)").unwrap();
        let ext = ExtendedPair::new(&m, &m.fibers[0], &f, &g, &PreLagParams::default()).unwrap();
        assert!(ext.mu_f.margin > 0.0 && ext.mu_inv_g.margin > 0.0);
        let h = 1e-6;
        for q in [[0.13, 0.41, 0.01], [0.7, -0.2, 0.35], [-0.3, 0.5, -0.15], [0.2, 0.2, 0.9]] {
            let [a, _] = ext.jets(q).unwrap();
            // d of the value by central differences, basis xy, xz, yz
            let partial = |axis: usize| -> [f64; 3] {
                let (mut qp, mut qm) = (q, q);
                qp[axis] += h;
                qm[axis] -= h;
                let (p, n) = (ext.jets(qp).unwrap()[0].value, ext.jets(qm).unwrap()[0].value);
                std::array::from_fn(|k| (p[k] - n[k]) / (2.0 * h))
            };
            let (dx, dy, dz) = (partial(0), partial(1), partial(2));
            let want = [dx[1] - dy[0], dx[2] - dz[0], dy[2] - dz[1]];
            for k in 0..3 {
                assert!((a.d[k] - want[k]).abs() < 1e-5 * (1.0 + want[k].abs()), "{q:?} {k}: {:?} vs {want:?}", a.d);
            }
        }
        let r = crate::contact::al_check_field(&ext, &m.volume(), &crate::geom::Grid3::cube(16)).unwrap();
        assert_eq!(r.verdict, Verdict::AnosovLiouville);
    }
}
