use serde::Serialize;

use super::collar::{bump, CollarFrame};
use super::{al_check_field, ALReport, CompiledPair, ContactError, FormPair, Jet, PairField, Verdict};
use crate::expr::{Expr, Var};
use crate::geom::{vars3, vars_uv, Chart, CompiledForm, DifferentialForm, GeomError, Gluing3, Grid3, TorusEmbedding, VectorField3};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbOptions {
    /// Half-width of the collar in the flow parameter.
    pub width: f64,
    /// Advisory bound on the `C¹` size of `σ` on the torus.
    pub c1_threshold: f64,
    pub grid: Grid3,
    /// Torus samples per side for residuals and norms.
    pub torus_samples: usize,
    pub closedness_tol: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions {
            width: 0.4,
            c1_threshold: 1e-2,
            grid: Grid3::default(),
            torus_samples: 64,
            closedness_tol: 1e-9,
        }
    }
}

/// The collar extension `σ̃ = b(t)(σ_u du + σ_v dv)` of a form on the torus.
#[derive(Clone, Debug)]
pub struct CollarPatch {
    pub frame: CollarFrame,
    pub width: f64,
    /// `σ` on the torus chart.
    pub sigma: DifferentialForm,
    /// `σ̃` on the ambient chart, meaningful for `|t| < width`.
    pub extension: DifferentialForm,
    compiled: CompiledForm,
    compiled_d: CompiledForm,
}

impl CollarPatch {
    fn new(frame: CollarFrame, width: f64, sigma: DifferentialForm) -> Result<Self, GeomError> {
        let [u, v, t] = frame.coordinate_exprs();
        let b = bump(t, width);
        let map = [(Var::U, u), (Var::V, v)];
        let su = sigma.coeffs()[0].subst(&map);
        let sv = sigma.coeffs()[1].subst(&map);
        let (gu, gv) = (frame.covector(0), frame.covector(1));
        let coeffs = (0..3)
            .map(|k| {
                let inner = Expr::add(
                    Expr::mul(Expr::Const(gu[k]), su.clone()),
                    Expr::mul(Expr::Const(gv[k]), sv.clone()),
                );
                Expr::mul(b.clone(), inner)
            })
            .collect();
        let extension = DifferentialForm::one_form(Chart::Ambient, coeffs)?;
        let compiled = extension.compile();
        let compiled_d = extension.exterior_derivative()?.compile();
        Ok(CollarPatch {
            frame,
            width,
            sigma,
            extension,
            compiled,
            compiled_d,
        })
    }

    /// Jet of `σ̃` at a point already moved next to the torus.
    pub fn jet(&self, q: [f64; 3]) -> Jet {
        let t = self.frame.coords(q)[2];
        if t.abs() >= self.width {
            return Jet::default();
        }
        let vars = vars3(q);
        let mut jet = Jet::default();
        self.compiled.eval_into(&vars, &mut jet.value);
        self.compiled_d.eval_into(&vars, &mut jet.d);
        jet
    }

    fn center(&self) -> f64 {
        self.frame.sigma.base[2]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbDiagnostics {
    /// Sup of `σ` and its first derivatives on the torus samples.
    pub sigma_c1: f64,
    pub c1_within_threshold: bool,
    /// Sup of `d β` on the torus samples.
    pub target_closedness: f64,
    /// Sup of `(α̃₊ + α̃₋)|_Σ − β`.
    pub restriction_residual: f64,
    pub report: ALReport,
}

/// `(α₊ + σ̃, α₋ + σ̃)` with `σ̃` supported in a collar of the torus.
#[derive(Clone, Debug)]
pub struct PerturbedPair<B> {
    pub base: B,
    /// `None` when `σ` vanishes and the pair is returned unchanged.
    pub patch: Option<CollarPatch>,
    pub diagnostics: PerturbDiagnostics,
}

impl<B> PerturbedPair<B> {
    pub fn is_identity(&self) -> bool {
        self.patch.is_none()
    }
}

impl PerturbedPair<FormPair> {
    /// The perturbed forms as written inside the collar.
    pub fn collar_forms(&self) -> Result<FormPair, ContactError> {
        match &self.patch {
            None => Ok(self.base.clone()),
            Some(p) => FormPair::new(
                self.base.plus.add(&p.extension)?,
                self.base.minus.add(&p.extension)?,
                self.base.gluing.clone(),
            ),
        }
    }
}

fn patched_jets<B: PairField + ?Sized>(
    base: &B,
    patch: Option<&CollarPatch>,
    q: [f64; 3],
) -> Result<[Jet; 2], ContactError> {
    match patch {
        None => base.jets(q),
        Some(p) => {
            let q = base.gluing().representative_near(q, p.center());
            let [plus, minus] = base.jets(q)?;
            let s = p.jet(q);
            Ok([plus.add(s), minus.add(s)])
        }
    }
}

impl<B: PairField> PairField for PerturbedPair<B> {
    fn gluing(&self) -> &Gluing3 {
        self.base.gluing()
    }

    fn jets(&self, q: [f64; 3]) -> Result<[Jet; 2], ContactError> {
        patched_jets(&self.base, self.patch.as_ref(), q)
    }
}

struct Borrowed<'a, B: ?Sized> {
    base: &'a B,
    patch: Option<&'a CollarPatch>,
}

impl<B: PairField + ?Sized> PairField for Borrowed<'_, B> {
    fn gluing(&self) -> &Gluing3 {
        self.base.gluing()
    }

    fn jets(&self, q: [f64; 3]) -> Result<[Jet; 2], ContactError> {
        patched_jets(self.base, self.patch, q)
    }
}

fn torus_sup(form: &DifferentialForm, n: usize) -> Result<f64, ContactError> {
    let compiled = form.compile();
    let mut sup = 0.0f64;
    let mut buf = vec![0.0; compiled.len()];
    for i in 0..n {
        for j in 0..n {
            let vars = vars_uv(i as f64 / n as f64, j as f64 / n as f64);
            compiled.eval_into(&vars, &mut buf);
            for c in &buf {
                if !c.is_finite() {
                    compiled.eval_checked(&vars)?;
                }
                sup = sup.max(c.abs());
            }
        }
    }
    Ok(sup)
}

fn c1_norm(sigma: &DifferentialForm, n: usize) -> Result<f64, ContactError> {
    let mut parts = vec![sigma.clone()];
    for w in [Var::U, Var::V] {
        parts.push(sigma.map(|c| c.diff(w)));
    }
    let mut sup = 0.0f64;
    for p in &parts {
        sup = sup.max(torus_sup(p, n)?);
    }
    Ok(sup)
}

fn check_torus_one_form(f: &DifferentialForm, what: &str) -> Result<(), ContactError> {
    if f.chart() != Chart::Torus || f.degree() != 1 {
        return Err(ContactError::Precondition(format!("{what} must be a 1-form on the torus chart")));
    }
    Ok(())
}

/// Builds the perturbation for any pair field whose restricted sum
/// `(α₊ + α₋)|_Σ` is known symbolically.
#[allow(clippy::too_many_arguments)]
pub fn perturb_field<B: PairField>(
    base: B,
    restricted_sum: &DifferentialForm,
    beta: &DifferentialForm,
    sigma: &TorusEmbedding,
    x: &VectorField3,
    vol: &DifferentialForm,
    opts: &PerturbOptions,
) -> Result<PerturbedPair<B>, ContactError> {
    check_torus_one_form(restricted_sum, "restricted sum")?;
    check_torus_one_form(beta, "target")?;
    let n = opts.torus_samples.max(4);
    let closedness = torus_sup(&beta.exterior_derivative()?, n)?;
    if closedness >= opts.closedness_tol {
        return Err(ContactError::NotClosed { residual: closedness });
    }
    if !sigma.closes_up {
        return Err(GeomError::Embedding("the torus does not close up under the gluing".into()).into());
    }
    let frame = CollarFrame::new(sigma, x)?;
    let half = 0.5 * base.gluing().shift;
    if opts.width <= 0.0 || opts.width * frame.x[2].abs() >= half {
        return Err(ContactError::ExtensionExceedsCollar(format!(
            "collar half-width {} does not fit in half a period {half}",
            opts.width
        )));
    }

    let sig = beta.sub(restricted_sum)?.scale(&Expr::Const(0.5));
    let sigma_c1 = c1_norm(&sig, n)?;
    let patch = if torus_sup(&sig, n)? <= 1e-13 {
        None
    } else {
        Some(CollarPatch::new(frame, opts.width, sig)?)
    };

    let restriction_residual = match &patch {
        None => torus_sup(&restricted_sum.sub(beta)?, n)?,
        Some(p) => {
            let twice = p.extension.restrict(sigma)?.scale(&Expr::Const(2.0));
            torus_sup(&restricted_sum.add(&twice)?.sub(beta)?, n)?
        }
    };

    let report = al_check_field(
        &Borrowed {
            base: &base,
            patch: patch.as_ref(),
        },
        vol,
        &opts.grid,
    )?;
    if report.verdict != Verdict::AnosovLiouville {
        return Err(ContactError::PerturbationFailed {
            margin: report.worst_margin(),
            report: Box::new(report),
        });
    }
    Ok(PerturbedPair {
        base,
        patch,
        diagnostics: PerturbDiagnostics {
            sigma_c1,
            c1_within_threshold: sigma_c1 < opts.c1_threshold,
            target_closedness: closedness,
            restriction_residual,
            report,
        },
    })
}

/// Perturbs a symbolic pair so that `(α̃₊ + α̃₋)|_Σ = β`.
pub fn perturb_pair(
    pair: &FormPair,
    beta: &DifferentialForm,
    sigma: &TorusEmbedding,
    x: &VectorField3,
    vol: &DifferentialForm,
    opts: &PerturbOptions,
) -> Result<PerturbedPair<FormPair>, ContactError> {
    let restricted = pair.plus.add(&pair.minus)?.restrict(sigma)?;
    let compiled: CompiledPair = pair.compile()?;
    let done = perturb_field(compiled, &restricted, beta, sigma, x, vol, opts)?;
    Ok(PerturbedPair {
        base: pair.clone(),
        patch: done.patch,
        diagnostics: done.diagnostics,
    })
}
