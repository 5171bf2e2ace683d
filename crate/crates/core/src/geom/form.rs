use super::{Chart, GeomError, TorusEmbedding, VectorField3};
use crate::expr::{Env, Expr, Program, Var};

/// Strictly increasing index sets of size `k` out of `n`, as bitmasks, in
/// lexicographic order of the sorted tuples.
fn basis(n: usize, k: usize) -> Vec<u8> {
    fn rec(start: usize, n: usize, k: usize, acc: u8, out: &mut Vec<u8>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            rec(i + 1, n, k - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Sign of `dx_I ∧ dx_J` relative to `dx_{I∪J}`; `None` when they overlap.
fn merge_sign(i: u8, j: u8) -> Option<f64> {
    if i & j != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for b in 0..8 {
        if j & (1 << b) != 0 {
            inversions += (i >> (b + 1)).count_ones();
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

fn bits(mask: u8) -> impl Iterator<Item = usize> {
    (0..8).filter(move |b| mask & (1 << b) != 0)
}

/// Degree-`k` form with one [`Expr`] coefficient per basis element.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialForm {
    chart: Chart,
    degree: usize,
    coeffs: Vec<Expr>,
}

impl DifferentialForm {
    pub fn new(chart: Chart, degree: usize, coeffs: Vec<Expr>) -> Result<Self, GeomError> {
        let dim = chart.dim();
        if degree > dim {
            return Err(GeomError::DegreeOverflow { degree, dim });
        }
        let expected = binomial(dim, degree);
        if coeffs.len() != expected {
            return Err(GeomError::CoefficientCount {
                degree,
                expected,
                got: coeffs.len(),
            });
        }
        Ok(DifferentialForm {
            chart,
            degree,
            coeffs,
        })
    }

    pub fn zero(chart: Chart, degree: usize) -> Result<Self, GeomError> {
        let n = binomial(chart.dim(), degree);
        DifferentialForm::new(chart, degree, vec![Expr::Const(0.0); n])
    }

    pub fn scalar(chart: Chart, f: Expr) -> Self {
        DifferentialForm {
            chart,
            degree: 0,
            coeffs: vec![f],
        }
    }

    pub fn one_form(chart: Chart, coeffs: Vec<Expr>) -> Result<Self, GeomError> {
        DifferentialForm::new(chart, 1, coeffs)
    }

    /// `dx ∧ dy ∧ dz` or the top form of the given chart.
    pub fn volume(chart: Chart) -> Self {
        DifferentialForm {
            chart,
            degree: chart.dim(),
            coeffs: vec![Expr::Const(1.0)],
        }
    }

    /// `f · dw₁ ∧ … ∧ dw_k`, the variables in any order.
    pub fn monomial(chart: Chart, f: Expr, vars: &[Var]) -> Result<Self, GeomError> {
        let mut form = DifferentialForm::zero(chart, vars.len())?;
        let (mask, sign) = form.mask_of(vars)?;
        let idx = form.index_of(mask);
        form.coeffs[idx] = if sign > 0.0 { f } else { Expr::neg(f) };
        Ok(form)
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn basis(&self) -> Vec<u8> {
        basis(self.chart.dim(), self.degree)
    }

    /// Basis element names such as `dx∧dz`, aligned with [`Self::coeffs`].
    pub fn basis_names(&self) -> Vec<String> {
        let coords = self.chart.coords();
        self.basis()
            .into_iter()
            .map(|m| {
                if m == 0 {
                    "1".to_string()
                } else {
                    bits(m).map(|b| format!("d{}", coords[b].name())).collect::<Vec<_>>().join("∧")
                }
            })
            .collect()
    }

    fn index_of(&self, mask: u8) -> usize {
        basis(self.chart.dim(), self.degree)
            .iter()
            .position(|m| *m == mask)
            .expect("mask belongs to the basis")
    }

    fn mask_of(&self, vars: &[Var]) -> Result<(u8, f64), GeomError> {
        let coords = self.chart.coords();
        let mut positions = Vec::with_capacity(vars.len());
        for v in vars {
            let p = coords
                .iter()
                .position(|c| c == v)
                .ok_or(GeomError::ChartMismatch(self.chart, self.chart))?;
            positions.push(p);
        }
        let mut sign = 1.0;
        for a in 0..positions.len() {
            for b in a + 1..positions.len() {
                if positions[a] == positions[b] {
                    return Ok((0, 0.0));
                }
                if positions[a] > positions[b] {
                    sign = -sign;
                }
            }
        }
        let mask = positions.iter().fold(0u8, |m, p| m | (1 << p));
        Ok((mask, sign))
    }

    /// Coefficient of `dw₁∧…∧dw_k` for variables given in increasing chart order.
    ///
    /// # Panics
    /// If the variables are not an increasing basis element of this form.
    pub fn coeff(&self, vars: &[Var]) -> &Expr {
        let (mask, sign) = self.mask_of(vars).expect("variables belong to the chart");
        assert!(sign > 0.0 && vars.len() == self.degree, "not a basis element");
        &self.coeffs[self.index_of(mask)]
    }

    fn same_shape(&self, other: &Self) -> Result<(), GeomError> {
        if self.chart != other.chart {
            return Err(GeomError::ChartMismatch(self.chart, other.chart));
        }
        if self.degree != other.degree {
            return Err(GeomError::CoefficientCount {
                degree: self.degree,
                expected: self.coeffs.len(),
                got: other.coeffs.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, GeomError> {
        self.same_shape(other)?;
        Ok(self.zip(other, Expr::add))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GeomError> {
        self.same_shape(other)?;
        Ok(self.zip(other, Expr::sub))
    }

    fn zip(&self, other: &Self, f: impl Fn(Expr, Expr) -> Expr) -> Self {
        DifferentialForm {
            chart: self.chart,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(a.clone(), b.clone()))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(Expr::neg)
    }

    /// Multiplies every coefficient by the scalar function `f`.
    pub fn scale(&self, f: &Expr) -> Self {
        self.map(|c| Expr::mul(f.clone(), c))
    }

    pub fn map(&self, f: impl Fn(Expr) -> Expr) -> Self {
        DifferentialForm {
            chart: self.chart,
            degree: self.degree,
            coeffs: self.coeffs.iter().cloned().map(f).collect(),
        }
    }

    pub fn exterior_derivative(&self) -> Result<Self, GeomError> {
        let dim = self.chart.dim();
        if self.degree >= dim {
            return Err(GeomError::DegreeOverflow {
                degree: self.degree + 1,
                dim,
            });
        }
        let coords = self.chart.coords();
        let mut out = DifferentialForm::zero(self.chart, self.degree + 1)?;
        for (mask, c) in self.basis().into_iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            for (j, var) in coords.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let dc = c.diff(*var);
                if dc.is_zero() {
                    continue;
                }
                let sign = merge_sign(1 << j, mask).expect("disjoint");
                let idx = out.index_of(mask | (1 << j));
                let term = if sign > 0.0 { dc } else { Expr::neg(dc) };
                out.coeffs[idx] = Expr::add(out.coeffs[idx].clone(), term);
            }
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, GeomError> {
        if self.chart != other.chart {
            return Err(GeomError::ChartMismatch(self.chart, other.chart));
        }
        let dim = self.chart.dim();
        let degree = self.degree + other.degree;
        if degree > dim {
            return Err(GeomError::DegreeOverflow { degree, dim });
        }
        let mut out = DifferentialForm::zero(self.chart, degree)?;
        for (mi, a) in self.basis().into_iter().zip(&self.coeffs) {
            if a.is_zero() {
                continue;
            }
            for (mj, b) in other.basis().into_iter().zip(&other.coeffs) {
                if b.is_zero() {
                    continue;
                }
                if let Some(sign) = merge_sign(mi, mj) {
                    let prod = Expr::mul(a.clone(), b.clone());
                    let term = if sign > 0.0 { prod } else { Expr::neg(prod) };
                    let idx = out.index_of(mi | mj);
                    out.coeffs[idx] = Expr::add(out.coeffs[idx].clone(), term);
                }
            }
        }
        Ok(out)
    }

    /// Interior product `ι_X ω` for an ambient vector field.
    pub fn interior(&self, x: &VectorField3) -> Result<Self, GeomError> {
        if self.chart != Chart::Ambient {
            return Err(GeomError::ChartMismatch(self.chart, Chart::Ambient));
        }
        if self.degree == 0 {
            return DifferentialForm::zero(self.chart, 0);
        }
        let mut out = DifferentialForm::zero(self.chart, self.degree - 1)?;
        for (mask, c) in self.basis().into_iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            for (pos, j) in bits(mask).enumerate() {
                let xj = &x.comps[j];
                if xj.is_zero() {
                    continue;
                }
                let prod = Expr::mul(xj.clone(), c.clone());
                let term = if pos % 2 == 0 { prod } else { Expr::neg(prod) };
                let idx = out.index_of(mask & !(1 << j));
                out.coeffs[idx] = Expr::add(out.coeffs[idx].clone(), term);
            }
        }
        Ok(out)
    }

    /// Pullback along an affine torus embedding; the result lives on the
    /// torus chart with coefficients in `u, v`.
    pub fn restrict(&self, sigma: &TorusEmbedding) -> Result<Self, GeomError> {
        if self.chart != Chart::Ambient {
            return Err(GeomError::ChartMismatch(self.chart, Chart::Ambient));
        }
        if self.degree > 2 {
            return Err(GeomError::DegreeOverflow {
                degree: self.degree,
                dim: 2,
            });
        }
        let map = sigma.coordinate_map();
        let pulled: Vec<Expr> = self.coeffs.iter().map(|c| c.subst(&map)).collect();
        let jac = [
            [sigma.du[0], sigma.dv[0]],
            [sigma.du[1], sigma.dv[1]],
            [sigma.du[2], sigma.dv[2]],
        ];
        let mut out = DifferentialForm::zero(Chart::Torus, self.degree)?;
        for (mask, c) in self.basis().into_iter().zip(pulled) {
            if c.is_zero() {
                continue;
            }
            let idx: Vec<usize> = bits(mask).collect();
            match self.degree {
                0 => out.coeffs[0] = c,
                1 => {
                    let i = idx[0];
                    for (k, target) in out.coeffs.iter_mut().enumerate() {
                        let term = Expr::mul(Expr::Const(jac[i][k]), c.clone());
                        *target = Expr::add(target.clone(), term);
                    }
                }
                _ => {
                    let (i, j) = (idx[0], idx[1]);
                    let minor = jac[i][0] * jac[j][1] - jac[j][0] * jac[i][1];
                    let term = Expr::mul(Expr::Const(minor), c);
                    out.coeffs[0] = Expr::add(out.coeffs[0].clone(), term);
                }
            }
        }
        Ok(out)
    }

    /// Reinterprets an ambient form on `ℝ_s × M` (coefficients unchanged).
    pub fn to_symplectization(&self) -> Result<Self, GeomError> {
        if self.chart != Chart::Ambient {
            return Err(GeomError::ChartMismatch(self.chart, Chart::Ambient));
        }
        let mut out = DifferentialForm::zero(Chart::Symplectization, self.degree)?;
        for (mask, c) in self.basis().into_iter().zip(&self.coeffs) {
            let idx = out.index_of(mask << 1);
            out.coeffs[idx] = c.clone();
        }
        Ok(out)
    }

    /// Substitutes variables in every coefficient.
    pub fn subst(&self, map: &[(Var, Expr)]) -> Self {
        self.map(|c| c.subst(map))
    }

    pub fn compile(&self) -> CompiledForm {
        let env = Env::new();
        CompiledForm {
            progs: self.coeffs.iter().map(|c| c.compile(&env)).collect(),
        }
    }

    /// Coefficients at a point given by variable values.
    pub fn eval(&self, env: &Env) -> Result<Vec<f64>, GeomError> {
        self.coeffs.iter().map(|c| c.eval(env).map_err(GeomError::from)).collect()
    }
}

/// Coefficients of a form compiled for grid evaluation.
#[derive(Clone, Debug)]
pub struct CompiledForm {
    progs: Vec<Program>,
}

impl CompiledForm {
    pub fn eval_into(&self, vars: &[f64; 6], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.progs) {
            *o = p.eval(vars);
        }
    }

    pub fn eval(&self, vars: &[f64; 6]) -> Vec<f64> {
        self.progs.iter().map(|p| p.eval(vars)).collect()
    }

    pub fn eval_checked(&self, vars: &[f64; 6]) -> Result<Vec<f64>, GeomError> {
        self.progs.iter().map(|p| p.eval_checked(vars).map_err(GeomError::from)).collect()
    }

    pub fn len(&self) -> usize {
        self.progs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.progs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Gluing3;

    fn ex(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn amb(coeffs: [&str; 3]) -> DifferentialForm {
        DifferentialForm::one_form(Chart::Ambient, coeffs.iter().map(|s| ex(s)).collect()).unwrap()
    }

    #[test]
    fn basis_ordering() {
        assert_eq!(basis(3, 2), vec![0b011, 0b101, 0b110]);
        assert_eq!(basis(4, 4), vec![0b1111]);
        assert_eq!(binomial(4, 2), 6);
    }

    #[test]
    fn coefficient_count_checked() {
        assert!(DifferentialForm::new(Chart::Ambient, 2, vec![Expr::Const(1.0)]).is_err());
        assert!(matches!(
            DifferentialForm::new(Chart::Ambient, 4, vec![]),
            Err(GeomError::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn derivative_of_exp_z_dx() {
        // d(e^z dx) = e^z dz∧dx = -e^z dx∧dz
        let d = amb(["exp(z)", "0", "0"]).exterior_derivative().unwrap();
        let expected = DifferentialForm::monomial(Chart::Ambient, ex("exp(z)"), &[Var::Z, Var::X]).unwrap();
        assert_eq!(d, expected);
        assert_eq!(d.coeff(&[Var::X, Var::Z]), &Expr::neg(ex("exp(z)")));
    }

    #[test]
    fn top_degree_derivative_overflows() {
        let vol = DifferentialForm::volume(Chart::Ambient);
        assert!(matches!(vol.exterior_derivative(), Err(GeomError::DegreeOverflow { .. })));
        let two = vol.clone();
        assert!(amb(["1", "0", "0"]).wedge(&two).is_err());
    }

    #[test]
    fn dx_wedge_dx_vanishes() {
        let dx = amb(["1", "0", "0"]);
        let w = dx.wedge(&dx).unwrap();
        assert!(w.coeffs().iter().all(Expr::is_zero));
    }

    #[test]
    fn contact_volumes_of_the_suspension_pair() {
        let plus = amb(["exp(z)", "exp(-z)", "0"]);
        let minus = amb(["-exp(z)", "exp(-z)", "0"]);
        let env = Env::new().with(Var::X, 0.3).with(Var::Y, 0.1).with(Var::Z, -0.7);
        let fp = plus.wedge(&plus.exterior_derivative().unwrap()).unwrap().eval(&env).unwrap();
        assert!((fp[0] - 2.0).abs() < 1e-14);
        let fm = minus.wedge(&minus.exterior_derivative().unwrap()).unwrap().eval(&env).unwrap();
        assert!((fm[0] + 2.0).abs() < 1e-14);
        let wedge = minus.wedge(&plus).unwrap();
        let w = wedge.eval(&env).unwrap();
        assert!((w[0] + 2.0).abs() < 1e-14 && w[1] == 0.0 && w[2] == 0.0);
        let d = wedge.exterior_derivative().unwrap().eval(&env).unwrap();
        assert!(d[0].abs() < 1e-14);
    }

    #[test]
    fn restriction_to_fibers() {
        let g = Gluing3::new(
            [[0.8, -0.3], [0.5, 1.0625]],
            [[1.0, 0.0], [0.0, 1.0]],
            1.0,
            crate::geom::GluingKind::ThreeTorus,
        );
        // determinant 0.85 + 0.15 = 1
        let g = g.unwrap();
        let fiber = TorusEmbedding::fiber(&g, 0.4);
        let sum = amb(["0", "2*exp(-z)", "0"]);
        let r = sum.restrict(&fiber).unwrap();
        let env = Env::new().with(Var::U, 0.2).with(Var::V, 0.9);
        let vals = r.eval(&env).unwrap();
        let k = 2.0 * (-0.4f64).exp();
        assert!((vals[0] - k * 0.5).abs() < 1e-14 && (vals[1] - k * 1.0625).abs() < 1e-14);
        assert!(r.exterior_derivative().unwrap().coeffs()[0].is_zero());

        let dz = amb(["0", "0", "1"]).restrict(&fiber).unwrap();
        assert!(dz.coeffs().iter().all(Expr::is_zero));

        let dxdy = DifferentialForm::monomial(Chart::Ambient, Expr::Const(1.0), &[Var::X, Var::Y]).unwrap();
        let area = dxdy.restrict(&fiber).unwrap();
        assert!((area.coeffs()[0].as_const().unwrap() - 1.0).abs() < 1e-15);
    }
}
