//! Anosov-Liouville checks for pairs of contact forms.
//!
//! With `dvol = dx∧dy∧dz` the three scalar quantities are
//!
//! ```text
//! α₊∧dα₊ = f₊ dvol,   α₋∧dα₋ = −f₋ dvol,   d(α₋∧α₊) = f₀ dvol
//! ```
//!
//! and a pair is Anosov-Liouville iff `f₊, f₋ > 0` and `f₀² < 4 f₊ f₋`.
//! Expanding `λ = e^s α₊ + e^{−s} α₋` gives
//! `dλ∧dλ = 2 (e^{2s} f₊ + f₀ + e^{−2s} f₋) ds∧dvol`, which is what
//! [`liouville_direct_check`] samples.

mod collar;
mod perturb;
mod scaling;

use serde::Serialize;

use crate::expr::{Expr, Var};
use crate::geom::{check_periodicity, vars3, Chart, CompiledForm, DifferentialForm, GeomError, Gluing3, Grid3};

pub use collar::{bump, CollarFrame};
pub use perturb::{perturb_pair, perturb_field, CollarPatch, PerturbOptions, PerturbedPair};
pub use scaling::{extend_scaling, InnerRule, ScalingExtension, ScalingParams};

/// Default positivity margin for every strict inequality.
pub const POSITIVITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ContactError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("volume form vanishes at {point:?}")]
    VanishingVolume { point: [f64; 3] },
    #[error("target form is not closed (residual {residual:e})")]
    NotClosed { residual: f64 },
    #[error("extension exceeds collar: {0}")]
    ExtensionExceedsCollar(String),
    #[error("AL check failed after perturbation (margin {margin:e})")]
    PerturbationFailed { margin: f64, report: Box<ALReport> },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("positivity margin {margin:e} at (u, v, t) = {point:?} is below tolerance")]
    PositivityLost { margin: f64, point: [f64; 3] },
    #[error("non-finite value at {point:?}")]
    NonFinite { point: [f64; 3] },
}

/// Value and exterior derivative of a 1-form at a point.
///
/// `d` holds the `dx∧dy`, `dx∧dz`, `dy∧dz` components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: [f64; 3],
    pub d: [f64; 3],
}

impl Jet {
    pub fn add(self, other: Jet) -> Jet {
        Jet {
            value: std::array::from_fn(|i| self.value[i] + other.value[i]),
            d: std::array::from_fn(|i| self.d[i] + other.d[i]),
        }
    }

    pub fn scale(self, k: f64) -> Jet {
        Jet {
            value: self.value.map(|c| c * k),
            d: self.d.map(|c| c * k),
        }
    }
}

/// `a∧b` for a 1-form and a 2-form, as a multiple of `dvol`.
pub fn wedge_12(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[2] - a[1] * b[1] + a[2] * b[0]
}

/// `a∧b` for two 1-forms in the `xy, xz, yz` basis.
pub fn wedge_11(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] * b[1] - a[1] * b[0], a[0] * b[2] - a[2] * b[0], a[1] * b[2] - a[2] * b[1]]
}

/// `(f₊, f₋, f₀)` from the jets of `α₊` and `α₋`, before division by the volume.
pub fn pair_quantities(plus: &Jet, minus: &Jet) -> [f64; 3] {
    let fp = wedge_12(plus.value, plus.d);
    let fm = -wedge_12(minus.value, minus.d);
    let f0 = wedge_12(plus.value, minus.d) - wedge_12(minus.value, plus.d);
    [fp, fm, f0]
}

/// Anything that can produce the jets of a pair of 1-forms on a glued chart.
pub trait PairField: Sync {
    fn gluing(&self) -> &Gluing3;
    /// Jets of `(α₊, α₋)` at `q`.
    fn jets(&self, q: [f64; 3]) -> Result<[Jet; 2], ContactError>;
}

/// Two 1-forms on the ambient chart of a common gluing.
#[derive(Clone, Debug, PartialEq)]
pub struct FormPair {
    pub plus: DifferentialForm,
    pub minus: DifferentialForm,
    pub gluing: Gluing3,
}

impl FormPair {
    pub fn new(plus: DifferentialForm, minus: DifferentialForm, gluing: Gluing3) -> Result<Self, ContactError> {
        for f in [&plus, &minus] {
            if f.chart() != Chart::Ambient {
                return Err(GeomError::ChartMismatch(f.chart(), Chart::Ambient).into());
            }
            if f.degree() != 1 {
                return Err(GeomError::CoefficientCount {
                    degree: f.degree(),
                    expected: 3,
                    got: f.coeffs().len(),
                }
                .into());
            }
        }
        Ok(FormPair { plus, minus, gluing })
    }

    /// `(C α₊, C⁻¹ α₋)`.
    pub fn scaled(&self, c: f64) -> FormPair {
        FormPair {
            plus: self.plus.scale(&Expr::Const(c)),
            minus: self.minus.scale(&Expr::Const(1.0 / c)),
            gluing: self.gluing.clone(),
        }
    }

    /// `(α₊, −α₋)`.
    pub fn with_negated_minus(&self) -> FormPair {
        FormPair {
            plus: self.plus.clone(),
            minus: self.minus.neg(),
            gluing: self.gluing.clone(),
        }
    }

    /// Worst periodicity residual of the two forms.
    pub fn periodicity_residual(&self, grid: &Grid3) -> Result<f64, ContactError> {
        let a = check_periodicity(&self.plus, &self.gluing, grid, 1e-9)?;
        let b = check_periodicity(&self.minus, &self.gluing, grid, 1e-9)?;
        Ok(a.max_residual.max(b.max_residual))
    }

    pub fn compile(&self) -> Result<CompiledPair, ContactError> {
        let two = |f: &DifferentialForm| -> Result<(CompiledForm, CompiledForm), ContactError> {
            Ok((f.compile(), f.exterior_derivative()?.compile()))
        };
        Ok(CompiledPair {
            plus: two(&self.plus)?,
            minus: two(&self.minus)?,
            gluing: self.gluing.clone(),
        })
    }
}

/// A [`FormPair`] with its forms and derivatives compiled.
#[derive(Clone, Debug)]
pub struct CompiledPair {
    plus: (CompiledForm, CompiledForm),
    minus: (CompiledForm, CompiledForm),
    gluing: Gluing3,
}

fn jet_of(forms: &(CompiledForm, CompiledForm), vars: &[f64; 6]) -> Jet {
    let mut jet = Jet::default();
    forms.0.eval_into(vars, &mut jet.value);
    forms.1.eval_into(vars, &mut jet.d);
    jet
}

impl PairField for CompiledPair {
    fn gluing(&self) -> &Gluing3 {
        &self.gluing
    }

    fn jets(&self, q: [f64; 3]) -> Result<[Jet; 2], ContactError> {
        let vars = vars3(q);
        let jets = [jet_of(&self.plus, &vars), jet_of(&self.minus, &vars)];
        let finite = jets.iter().all(|j| j.value.iter().chain(&j.d).all(|c| c.is_finite()));
        if !finite {
            self.plus.0.eval_checked(&vars)?;
            self.plus.1.eval_checked(&vars)?;
            self.minus.0.eval_checked(&vars)?;
            self.minus.1.eval_checked(&vars)?;
            return Err(ContactError::NonFinite { point: q });
        }
        Ok(jets)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AnosovLiouville,
    /// `(α₊, α₋)` is a Liouville pair but `(α₊, −α₋)` is not.
    LiouvilleOnly,
    Fail,
}

/// Extrema of one sampled quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuantityStats {
    pub min: f64,
    pub max: f64,
    pub argmin: [f64; 3],
    pub argmax: [f64; 3],
}

impl QuantityStats {
    fn new() -> Self {
        QuantityStats {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            argmin: [0.0; 3],
            argmax: [0.0; 3],
        }
    }

    fn push(&mut self, value: f64, at: [f64; 3]) {
        if value < self.min {
            self.min = value;
            self.argmin = at;
        }
        if value > self.max {
            self.max = value;
            self.argmax = at;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ALReport {
    pub grid: Grid3,
    pub f_plus: QuantityStats,
    pub f_minus: QuantityStats,
    pub f_zero: QuantityStats,
    /// `4 f₊ f₋ − f₀²`.
    pub discriminant: QuantityStats,
    /// Minimum of `1 − f₀²/(4 f₊ f₋)`; invariant under `(C α₊, C⁻¹ α₋)`.
    pub normalized_margin: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

impl ALReport {
    /// Smallest of `min f₊`, `min f₋` and `min(4f₊f₋ − f₀²)`.
    pub fn worst_margin(&self) -> f64 {
        self.f_plus.min.min(self.f_minus.min).min(self.discriminant.min)
    }
}

/// Runs the Anosov-Liouville test on a symbolic pair.
pub fn al_check(pair: &FormPair, vol: &DifferentialForm, grid: &Grid3) -> Result<ALReport, ContactError> {
    al_check_field(&pair.compile()?, vol, grid)
}

/// [`al_check`] for any [`PairField`].
pub fn al_check_field<P: PairField + ?Sized>(
    pair: &P,
    vol: &DifferentialForm,
    grid: &Grid3,
) -> Result<ALReport, ContactError> {
    if vol.chart() != Chart::Ambient || vol.degree() != 3 {
        return Err(GeomError::ChartMismatch(vol.chart(), Chart::Ambient).into());
    }
    if grid.is_empty() {
        return Err(ContactError::Precondition("empty grid".into()));
    }
    let vol = vol.compile();
    let gluing = pair.gluing();
    let samples = crate::par::map_indices(grid.len(), |i| -> Result<[f64; 3], ContactError> {
        let q = grid.point(gluing, i);
        let v = vol.eval_checked(&vars3(q))?[0];
        if v.abs() <= 1e-300 {
            return Err(ContactError::VanishingVolume { point: q });
        }
        let [plus, minus] = pair.jets(q)?;
        Ok(pair_quantities(&plus, &minus).map(|c| c / v))
    });

    let mut fp = QuantityStats::new();
    let mut fm = QuantityStats::new();
    let mut f0 = QuantityStats::new();
    let mut disc = QuantityStats::new();
    let mut normalized = f64::INFINITY;
    // Liouville for (α₊, α₋) alone: e^{2s} f₊ + f₀ + e^{−2s} f₋ > 0 for all s.
    let mut liouville = true;
    let margin = POSITIVITY_MARGIN;
    for (i, s) in samples.into_iter().enumerate() {
        let [a, b, c] = s?;
        let q = grid.point(gluing, i);
        fp.push(a, q);
        fm.push(b, q);
        f0.push(c, q);
        let dsc = 4.0 * a * b - c * c;
        disc.push(dsc, q);
        normalized = normalized.min(if a * b > 0.0 { dsc / (4.0 * a * b) } else { f64::NEG_INFINITY });
        if !(c >= 0.0 || dsc > margin) {
            liouville = false;
        }
    }
    let positive = fp.min > margin && fm.min > margin;
    let verdict = if positive && disc.min > margin {
        Verdict::AnosovLiouville
    } else if positive && liouville {
        Verdict::LiouvilleOnly
    } else {
        Verdict::Fail
    };
    Ok(ALReport {
        grid: *grid,
        f_plus: fp,
        f_minus: fm,
        f_zero: f0,
        discriminant: disc,
        normalized_margin: normalized,
        margin,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub s_samples: Vec<f64>,
    pub grid: Grid3,
    /// Minimum of the `ds∧dx∧dy∧dz` coefficient of `dλ∧dλ`.
    pub min_coefficient: f64,
    /// `(s, x, y, z)` of the minimum.
    pub argmin: [f64; 4],
    pub pass: bool,
}

/// `13` equally spaced samples of `[−3, 3]`.
pub fn default_s_samples() -> Vec<f64> {
    (0..13).map(|k| -3.0 + 0.5 * k as f64).collect()
}

/// Builds `λ = e^s α₊ + e^{−s} α₋` on `ℝ_s × M` and samples `dλ∧dλ`.
pub fn liouville_direct_check(pair: &FormPair, s_samples: &[f64], grid: &Grid3) -> Result<LiouvilleReport, ContactError> {
    let s = Expr::var(Var::S);
    let lambda = pair
        .plus
        .to_symplectization()?
        .scale(&Expr::exp(s.clone()))
        .add(&pair.minus.to_symplectization()?.scale(&Expr::exp(Expr::neg(s))))?;
    let dl = lambda.exterior_derivative()?;
    let top = dl.wedge(&dl)?;
    let coeff = top.coeffs()[0].compile(&crate::Env::new());
    let gluing = &pair.gluing;
    let n = grid.len();
    let per_point = crate::par::map_indices(n, |i| {
        let q = grid.point(gluing, i);
        let mut worst = (f64::INFINITY, 0.0);
        for &sv in s_samples {
            let c = coeff.eval(&[q[0], q[1], q[2], sv, 0.0, 0.0]);
            if c < worst.0 || c.is_nan() {
                worst = (c, sv);
            }
        }
        worst
    });
    let mut min = f64::INFINITY;
    let mut argmin = [0.0; 4];
    for (i, (c, sv)) in per_point.into_iter().enumerate() {
        if c < min || c.is_nan() {
            let q = grid.point(gluing, i);
            min = c;
            argmin = [sv, q[0], q[1], q[2]];
        }
    }
    Ok(LiouvilleReport {
        s_samples: s_samples.to_vec(),
        grid: *grid,
        min_coefficient: min,
        argmin,
        pass: min > POSITIVITY_MARGIN,
    })
}

/// `((1−t) p₊ + t q₊, (1−t) p₋ + t q₋)` and its AL report.
pub fn convex_combination(
    p: &FormPair,
    q: &FormPair,
    t: f64,
    vol: &DifferentialForm,
    grid: &Grid3,
) -> Result<(FormPair, ALReport), ContactError> {
    if p.gluing != q.gluing {
        return Err(ContactError::Precondition("pairs live on different gluings".into()));
    }
    let mix = |a: &DifferentialForm, b: &DifferentialForm| -> Result<DifferentialForm, ContactError> {
        if t == 0.0 {
            return Ok(a.clone());
        }
        if t == 1.0 {
            return Ok(b.clone());
        }
        Ok(a.scale(&Expr::Const(1.0 - t)).add(&b.scale(&Expr::Const(t)))?)
    };
    let pair = FormPair::new(mix(&p.plus, &q.plus)?, mix(&p.minus, &q.minus)?, p.gluing.clone())?;
    let report = al_check(&pair, vol, grid)?;
    Ok((pair, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(c: [&str; 3]) -> DifferentialForm {
        DifferentialForm::one_form(Chart::Ambient, c.iter().map(|s| Expr::parse(s).unwrap()).collect()).unwrap()
    }

    fn example_pair() -> FormPair {
        FormPair::new(one(["exp(z)", "exp(-z)", "0"]), one(["-exp(z)", "exp(-z)", "0"]), Gluing3::unit_torus()).unwrap()
    }

    fn vol() -> DifferentialForm {
        DifferentialForm::volume(Chart::Ambient)
    }

    #[test]
    fn wedge_helpers_match_symbolic_engine() {
        let a = one(["exp(z)*y", "x", "sin(y)"]);
        let b = one(["z", "cos(x)", "x*y"]);
        let q = [0.3, -0.4, 0.8];
        let env = crate::Env::new().with(Var::X, q[0]).with(Var::Y, q[1]).with(Var::Z, q[2]);
        let av: Vec<f64> = a.eval(&env).unwrap();
        let bv: Vec<f64> = b.eval(&env).unwrap();
        let ab = a.wedge(&b).unwrap().eval(&env).unwrap();
        let w = wedge_11([av[0], av[1], av[2]], [bv[0], bv[1], bv[2]]);
        for k in 0..3 {
            assert!((ab[k] - w[k]).abs() < 1e-14);
        }
        let da = a.exterior_derivative().unwrap();
        let top = b.wedge(&da).unwrap().eval(&env).unwrap()[0];
        let dv = da.eval(&env).unwrap();
        assert!((top - wedge_12([bv[0], bv[1], bv[2]], [dv[0], dv[1], dv[2]])).abs() < 1e-14);
    }

    #[test]
    fn example_pair_quantities() {
        let r = al_check(&example_pair(), &vol(), &Grid3::cube(8)).unwrap();
        assert_eq!(r.verdict, Verdict::AnosovLiouville);
        assert!((r.f_plus.min - 2.0).abs() < 1e-12 && (r.f_plus.max - 2.0).abs() < 1e-12);
        assert!((r.f_minus.min - 2.0).abs() < 1e-12);
        assert!(r.f_zero.min.abs() < 1e-12 && r.f_zero.max.abs() < 1e-12);
    }

    #[test]
    fn closed_pair_fails() {
        let p = FormPair::new(one(["1", "1", "0"]), one(["1", "-1", "0"]), Gluing3::unit_torus()).unwrap();
        let r = al_check(&p, &vol(), &Grid3::cube(4)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.f_plus.max, 0.0);
        assert!(!liouville_direct_check(&p, &default_s_samples(), &Grid3::cube(4)).unwrap().pass);
    }

    #[test]
    fn scaled_pair() {
        let r = al_check(&example_pair().scaled(10.0), &vol(), &Grid3::cube(6)).unwrap();
        assert!((r.f_plus.min - 200.0).abs() < 1e-9);
        assert!((r.f_minus.max - 0.02).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::AnosovLiouville);
    }

    #[test]
    fn liouville_only_pair() {
        // f₀ = −2k e^{2z} with k < 0 stays positive, so only (α₊, α₋) is Liouville
        // once |k| e^{2z} reaches 2.
        let p = FormPair::new(
            one(["exp(z)", "exp(-z)", "0"]),
            one(["exp(z)", "-exp(-z) - 3*exp(z)", "0"]),
            Gluing3::unit_torus(),
        )
        .unwrap();
        let r = al_check(&p, &vol(), &Grid3::cube(6)).unwrap();
        assert_eq!(r.verdict, Verdict::LiouvilleOnly);
        assert!(liouville_direct_check(&p, &default_s_samples(), &Grid3::cube(6)).unwrap().pass);
        let flipped = liouville_direct_check(&p.with_negated_minus(), &default_s_samples(), &Grid3::cube(6)).unwrap();
        assert!(!flipped.pass);
    }

    #[test]
    fn direct_check_on_example() {
        let r = liouville_direct_check(&example_pair(), &default_s_samples(), &Grid3::cube(4)).unwrap();
        assert!(r.pass);
        // 2 (2 e^{2s} + 2 e^{−2s}) is smallest at s = 0.
        assert!((r.min_coefficient - 8.0).abs() < 1e-9);
    }

    #[test]
    fn convex_endpoints() {
        let p = example_pair();
        let q = p.scaled(2.0);
        let (c, r) = convex_combination(&p, &q, 0.0, &vol(), &Grid3::cube(4)).unwrap();
        assert_eq!(c, p);
        assert_eq!(r, al_check(&p, &vol(), &Grid3::cube(4)).unwrap());
    }
}
