//! Charts, gluings, differential forms and the exterior calculus on them.
//!
//! Orientation convention: `dvol = dx∧dy∧dz` on the ambient chart and
//! `ds∧dx∧dy∧dz` on the symplectization `ℝ_s × M`.

mod form;
mod periodicity;

use serde::Serialize;

use crate::expr::{Env, Expr, ExprError, Program, Var};

pub use form::{CompiledForm, DifferentialForm};
pub use periodicity::{check_periodicity, PeriodicityReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("degree overflow: degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("chart mismatch: {0:?} vs {1:?}")]
    ChartMismatch(Chart, Chart),
    #[error("expected {expected} coefficients for a degree-{degree} form, got {got}")]
    CoefficientCount {
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("invalid gluing: {0}")]
    Gluing(String),
    #[error("invalid torus embedding: {0}")]
    Embedding(String),
    #[error("vector field vanishes at {point:?}")]
    VanishingField { point: [f64; 3] },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Coordinate chart a form lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Chart {
    /// `(x, y, z)` on the 3-manifold.
    Ambient,
    /// `(s, x, y, z)` on `ℝ_s × M`.
    Symplectization,
    /// `(u, v)` on the standard 2-torus.
    Torus,
}

impl Chart {
    pub fn coords(self) -> &'static [Var] {
        match self {
            Chart::Ambient => &[Var::X, Var::Y, Var::Z],
            Chart::Symplectization => &[Var::S, Var::X, Var::Y, Var::Z],
            Chart::Torus => &[Var::U, Var::V],
        }
    }

    pub fn dim(self) -> usize {
        self.coords().len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GluingKind {
    /// `ℝ³ / (P ℤ² × ν ℤ)`.
    ThreeTorus,
    /// `(ℝ² / P ℤ² × ℝ) / ψ` with `ψ(w, z) = (D w, z − ν)`.
    MappingTorus,
}

/// Lattice in the `(x, y)` plane plus the deck transformation in `z`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gluing3 {
    /// Row-major matrix whose columns are the lattice basis vectors.
    pub lattice: [[f64; 2]; 2],
    /// Row-major linear part of the deck map acting on `(x, y)`.
    pub deck: [[f64; 2]; 2],
    pub shift: f64,
    pub kind: GluingKind,
}

pub(crate) fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub(crate) fn inv2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub(crate) fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn apply2(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

impl Gluing3 {
    pub fn new(
        lattice: [[f64; 2]; 2],
        deck: [[f64; 2]; 2],
        shift: f64,
        kind: GluingKind,
    ) -> Result<Gluing3, GeomError> {
        let det = det2(&lattice);
        if (det - 1.0).abs() > 1e-12 {
            return Err(GeomError::Gluing(format!("lattice determinant {det} is not 1")));
        }
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(GeomError::Gluing(format!("shift {shift} must be positive")));
        }
        let conj = mul2(&mul2(&inv2(&lattice), &deck), &lattice);
        for row in conj {
            for entry in row {
                if (entry - entry.round()).abs() > 1e-9 {
                    return Err(GeomError::Gluing(format!(
                        "deck map does not preserve the lattice: P^-1 D P = {conj:?}"
                    )));
                }
            }
        }
        if kind == GluingKind::ThreeTorus && deck != [[1.0, 0.0], [0.0, 1.0]] {
            return Err(GeomError::Gluing("a 3-torus gluing needs the identity deck map".into()));
        }
        Ok(Gluing3 {
            lattice,
            deck,
            shift,
            kind,
        })
    }

    /// Unit-lattice 3-torus `ℝ³/ℤ³`.
    pub fn unit_torus() -> Gluing3 {
        Gluing3::new([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]], 1.0, GluingKind::ThreeTorus)
            .expect("identity gluing is valid")
    }

    pub fn lattice_vector(&self, k: usize) -> [f64; 2] {
        [self.lattice[0][k], self.lattice[1][k]]
    }

    /// Point of the fundamental domain with fractional coordinates `(a, b, c)`.
    pub fn domain_point(&self, a: f64, b: f64, c: f64) -> [f64; 3] {
        let w = apply2(&self.lattice, [a, b]);
        [w[0], w[1], c * self.shift]
    }

    /// Image of `q` under the deck transformation `ψ`.
    pub fn deck_point(&self, q: [f64; 3]) -> [f64; 3] {
        let w = apply2(&self.deck, [q[0], q[1]]);
        [w[0], w[1], q[2] - self.shift]
    }

    pub fn inverse_deck_point(&self, q: [f64; 3]) -> [f64; 3] {
        let w = apply2(&inv2(&self.deck), [q[0], q[1]]);
        [w[0], w[1], q[2] + self.shift]
    }

    /// Row-major 3×3 Jacobian of the deck map.
    pub fn deck_jacobian(&self) -> [[f64; 3]; 3] {
        let d = self.deck;
        [[d[0][0], d[0][1], 0.0], [d[1][0], d[1][1], 0.0], [0.0, 0.0, 1.0]]
    }

    /// Representative of `q` whose `z` lies in `[center − ν/2, center + ν/2)`.
    pub fn representative_near(&self, q: [f64; 3], center: f64) -> [f64; 3] {
        let mut p = q;
        let half = 0.5 * self.shift;
        let mut guard = 0;
        while p[2] - center >= half && guard < 64 {
            p = self.deck_point(p);
            guard += 1;
        }
        while p[2] - center < -half && guard < 128 {
            p = self.inverse_deck_point(p);
            guard += 1;
        }
        p
    }
}

/// Sampling resolution of a fundamental domain, row-major in `(a, b, c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Grid3 {
    pub n: [usize; 3],
}

impl Default for Grid3 {
    fn default() -> Self {
        Grid3 { n: [48, 48, 48] }
    }
}

impl Grid3 {
    pub fn cube(n: usize) -> Grid3 {
        Grid3 { n: [n, n, n] }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fractional coordinates of the `i`-th node.
    pub fn fractional(&self, i: usize) -> [f64; 3] {
        let [na, nb, nc] = self.n;
        let c = i % nc;
        let b = (i / nc) % nb;
        let a = i / (nb * nc);
        [a as f64 / na as f64, b as f64 / nb as f64, c as f64 / nc as f64]
    }

    pub fn point(&self, gluing: &Gluing3, i: usize) -> [f64; 3] {
        let [a, b, c] = self.fractional(i);
        gluing.domain_point(a, b, c)
    }
}

pub(crate) fn vars3(q: [f64; 3]) -> [f64; 6] {
    [q[0], q[1], q[2], 0.0, 0.0, 0.0]
}

pub(crate) fn vars_uv(u: f64, v: f64) -> [f64; 6] {
    [0.0, 0.0, 0.0, 0.0, u, v]
}

/// Vector field `X = X₁∂x + X₂∂y + X₃∂z` on the ambient chart.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField3 {
    pub comps: [Expr; 3],
}

impl VectorField3 {
    pub fn new(comps: [Expr; 3]) -> Self {
        VectorField3 { comps }
    }

    pub fn constant(v: [f64; 3]) -> Self {
        VectorField3::new(v.map(Expr::Const))
    }

    pub fn as_constant(&self) -> Option<[f64; 3]> {
        Some([
            self.comps[0].as_const()?,
            self.comps[1].as_const()?,
            self.comps[2].as_const()?,
        ])
    }

    pub fn compile(&self) -> [Program; 3] {
        let env = Env::new();
        [
            self.comps[0].compile(&env),
            self.comps[1].compile(&env),
            self.comps[2].compile(&env),
        ]
    }

    /// Checks `|X| > tol` on every node of the grid.
    pub fn check_nonvanishing(&self, gluing: &Gluing3, grid: &Grid3, tol: f64) -> Result<(), GeomError> {
        let progs = self.compile();
        for i in 0..grid.len() {
            let q = grid.point(gluing, i);
            let vars = vars3(q);
            let mut norm2 = 0.0;
            for p in &progs {
                let c = p.eval_checked(&vars)?;
                norm2 += c * c;
            }
            if norm2.sqrt() <= tol {
                return Err(GeomError::VanishingField { point: q });
            }
        }
        Ok(())
    }
}

/// Affine embedding `(u, v) ↦ base + u·du + v·dv` of the standard torus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusEmbedding {
    pub base: [f64; 3],
    pub du: [f64; 3],
    pub dv: [f64; 3],
    /// Whether `du` and `dv` are periods of the ambient gluing.
    pub closes_up: bool,
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl TorusEmbedding {
    pub fn new(base: [f64; 3], du: [f64; 3], dv: [f64; 3]) -> Result<Self, GeomError> {
        let n = cross(du, dv);
        if dot3(n, n).sqrt() < 1e-12 {
            return Err(GeomError::Embedding("direction vectors are linearly dependent".into()));
        }
        Ok(TorusEmbedding {
            base,
            du,
            dv,
            closes_up: false,
        })
    }

    /// The fiber `{z = level}` of a gluing, parameterized by its lattice basis.
    pub fn fiber(gluing: &Gluing3, level: f64) -> TorusEmbedding {
        let e1 = gluing.lattice_vector(0);
        let e2 = gluing.lattice_vector(1);
        TorusEmbedding {
            base: [0.0, 0.0, level],
            du: [e1[0], e1[1], 0.0],
            dv: [e2[0], e2[1], 0.0],
            closes_up: true,
        }
    }

    pub fn point(&self, u: f64, v: f64) -> [f64; 3] {
        [
            self.base[0] + u * self.du[0] + v * self.dv[0],
            self.base[1] + u * self.du[1] + v * self.dv[1],
            self.base[2] + u * self.du[2] + v * self.dv[2],
        ]
    }

    pub fn normal(&self) -> [f64; 3] {
        cross(self.du, self.dv)
    }

    /// `x, y, z` as expressions in `u, v`.
    pub fn coordinate_map(&self) -> [(Var, Expr); 3] {
        let comp = |k: usize| {
            Expr::add(
                Expr::Const(self.base[k]),
                Expr::add(
                    Expr::mul(Expr::Const(self.du[k]), Expr::Var(Var::U)),
                    Expr::mul(Expr::Const(self.dv[k]), Expr::Var(Var::V)),
                ),
            )
        };
        [(Var::X, comp(0)), (Var::Y, comp(1)), (Var::Z, comp(2))]
    }

    /// Minimum over an `n × n` grid of `|X·N|/|N|`, `N` the normal.
    /// Fails when it drops to `1e-9` or below.
    pub fn check_transverse(&self, x: &VectorField3, n: usize) -> Result<f64, GeomError> {
        let progs = x.compile();
        let normal = self.normal();
        let nn = dot3(normal, normal).sqrt();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let q = self.point(i as f64 / n as f64, j as f64 / n as f64);
                let vars = vars3(q);
                let xv = [
                    progs[0].eval_checked(&vars)?,
                    progs[1].eval_checked(&vars)?,
                    progs[2].eval_checked(&vars)?,
                ];
                min = min.min(dot3(xv, normal).abs() / nn);
            }
        }
        if min > 1e-9 {
            Ok(min)
        } else {
            Err(GeomError::Embedding(format!(
                "generator is tangent to the torus (min normal component {min:e})"
            )))
        }
    }
}

/// Lie derivative `L_X α = ι_X dα + d(ι_X α)` on the ambient chart.
pub fn lie_derivative(x: &VectorField3, alpha: &DifferentialForm) -> Result<DifferentialForm, GeomError> {
    let d_alpha = alpha.exterior_derivative()?;
    let first = d_alpha.interior(x)?;
    if alpha.degree() == 0 {
        return Ok(first);
    }
    let second = alpha.interior(x)?.exterior_derivative()?;
    first.add(&second)
}

/// Reeb field of a contact form on the ambient chart: `ι_R dα = 0`,
/// `α(R) = 1`, built symbolically from the kernel of `dα`.
pub fn reeb_field(alpha: &DifferentialForm) -> Result<VectorField3, GeomError> {
    if alpha.chart() != Chart::Ambient || alpha.degree() != 1 {
        return Err(GeomError::ChartMismatch(alpha.chart(), Chart::Ambient));
    }
    let beta = alpha.exterior_derivative()?;
    let kernel = [
        beta.coeff(&[Var::Y, Var::Z]).clone(),
        Expr::neg(beta.coeff(&[Var::X, Var::Z]).clone()),
        beta.coeff(&[Var::X, Var::Y]).clone(),
    ];
    let pairing = Expr::sum((0..3).map(|i| Expr::mul(alpha.coeffs()[i].clone(), kernel[i].clone())));
    Ok(VectorField3::new(kernel.map(|k| Expr::div(k, pairing.clone()))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn gluing_validation() {
        assert!(Gluing3::new([[2.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]], 1.0, GluingKind::ThreeTorus).is_err());
        // D = [[2,1],[1,1]] preserves ℤ² with P = I.
        assert!(Gluing3::new([[1.0, 0.0], [0.0, 1.0]], [[2.0, 1.0], [1.0, 1.0]], 1.0, GluingKind::MappingTorus).is_ok());
        assert!(Gluing3::new([[1.0, 0.0], [0.0, 1.0]], [[1.5, 0.0], [0.0, 1.0]], 1.0, GluingKind::MappingTorus).is_err());
    }

    #[test]
    fn lie_derivative_of_defining_forms() {
        let x = VectorField3::constant([0.0, 0.0, 1.0]);
        let au = DifferentialForm::one_form(Chart::Ambient, vec![ex("exp(z)"), ex("0"), ex("0")]).unwrap();
        let l = lie_derivative(&x, &au).unwrap();
        assert_eq!(l, au);
        let as_ = DifferentialForm::one_form(Chart::Ambient, vec![ex("0"), ex("exp(-z)"), ex("0")]).unwrap();
        let l = lie_derivative(&x, &as_).unwrap();
        assert_eq!(l, as_.scale(&Expr::Const(-1.0)));
    }

    #[test]
    fn lie_derivative_vanishes_for_translation_invariant_data() {
        let x = VectorField3::constant([0.3, -1.0, 2.0]);
        let a = DifferentialForm::one_form(Chart::Ambient, vec![ex("1"), ex("2"), ex("-3")]).unwrap();
        let l = lie_derivative(&x, &a).unwrap();
        assert!(l.coeffs().iter().all(Expr::is_zero));
    }

    #[test]
    fn transversality_of_fiber() {
        let g = Gluing3::unit_torus();
        let fiber = TorusEmbedding::fiber(&g, 0.2);
        assert!(fiber.check_transverse(&VectorField3::constant([0.0, 0.0, 1.0]), 8).is_ok());
        assert!(fiber.check_transverse(&VectorField3::constant([1.0, 0.0, 0.0]), 8).is_err());
        assert!(TorusEmbedding::new([0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn representative_near_center() {
        let g = Gluing3::new([[1.0, 0.0], [0.0, 1.0]], [[2.0, 1.0], [1.0, 1.0]], 1.0, GluingKind::MappingTorus).unwrap();
        let q = g.representative_near([0.1, 0.2, 0.9], 0.0);
        assert!((q[2] + 0.1).abs() < 1e-15);
        assert!((q[0] - 0.4).abs() < 1e-15 && (q[1] - 0.3).abs() < 1e-15);
    }
}
