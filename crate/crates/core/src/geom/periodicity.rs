use serde::Serialize;

use super::{vars3, Chart, DifferentialForm, GeomError, Gluing3, Grid3};

/// Sup-norm residual of `φ*ω − ω` over the gluing's generators.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicityReport {
    pub max_residual: f64,
    pub worst_point: [f64; 3],
    /// Which identification produced the worst residual.
    pub worst_map: &'static str,
    pub tolerance: f64,
    pub pass: bool,
}

fn minor(jac: &[[f64; 3]; 3], rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => jac[rows[0]][cols[0]],
        2 => jac[rows[0]][cols[0]] * jac[rows[1]][cols[1]] - jac[rows[0]][cols[1]] * jac[rows[1]][cols[0]],
        _ => {
            let m = |r: usize, c: usize| jac[rows[r]][cols[c]];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
    }
}

fn mask_bits(mask: u8) -> Vec<usize> {
    (0..3).filter(|b| mask & (1 << b) != 0).collect()
}

/// Samples `ψ*ω − ω` on the grid for the two lattice translations and the
/// deck map of `gluing`.
pub fn check_periodicity(
    form: &DifferentialForm,
    gluing: &Gluing3,
    grid: &Grid3,
    tolerance: f64,
) -> Result<PeriodicityReport, GeomError> {
    if form.chart() != Chart::Ambient {
        return Err(GeomError::ChartMismatch(form.chart(), Chart::Ambient));
    }
    if grid.is_empty() {
        return Err(GeomError::Gluing("empty sampling grid".into()));
    }
    let compiled = form.compile();
    let basis = form.basis();
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let deck_jac = gluing.deck_jacobian();
    let e1 = gluing.lattice_vector(0);
    let e2 = gluing.lattice_vector(1);

    type MapFn<'a> = Box<dyn Fn([f64; 3]) -> [f64; 3] + Sync + 'a>;
    let maps: Vec<(&'static str, MapFn, [[f64; 3]; 3])> = vec![
        ("lattice e1", Box::new(move |q: [f64; 3]| [q[0] + e1[0], q[1] + e1[1], q[2]]), identity),
        ("lattice e2", Box::new(move |q: [f64; 3]| [q[0] + e2[0], q[1] + e2[1], q[2]]), identity),
        ("deck", Box::new(|q: [f64; 3]| gluing.deck_point(q)), deck_jac),
    ];

    let results = crate::par::map_indices(grid.len(), |i| -> Result<(f64, usize), GeomError> {
        let q = grid.point(gluing, i);
        let here = compiled.eval_checked(&vars3(q))?;
        let mut worst = (0.0f64, 0usize);
        for (m, (_, map, jac)) in maps.iter().enumerate() {
            let there = compiled.eval_checked(&vars3(map(q)))?;
            for (a, &mask_i) in basis.iter().enumerate() {
                let cols = mask_bits(mask_i);
                let pulled: f64 = basis
                    .iter()
                    .enumerate()
                    .map(|(b, &mask_j)| there[b] * minor(jac, &mask_bits(mask_j), &cols))
                    .sum();
                let r = (pulled - here[a]).abs();
                if r > worst.0 {
                    worst = (r, m);
                }
            }
        }
        Ok(worst)
    });

    let mut report = PeriodicityReport {
        max_residual: 0.0,
        worst_point: grid.point(gluing, 0),
        worst_map: maps[0].0,
        tolerance,
        pass: true,
    };
    for (i, r) in results.into_iter().enumerate() {
        let (res, m) = r?;
        if res > report.max_residual {
            report.max_residual = res;
            report.worst_point = grid.point(gluing, i);
            report.worst_map = maps[m].0;
        }
    }
    report.pass = report.max_residual < tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::geom::GluingKind;

    fn cat_gluing() -> Gluing3 {
        // Lattice P with P A P^-1 = diag(e^ν, e^-ν) for A = [[2,1],[1,1]].
        let s5 = 5f64.sqrt();
        let nu = ((3.0 + s5) / 2.0).ln();
        let phi = (1.0 + s5) / 2.0;
        let q = [[1.0, -1.0], [phi - 1.0, phi]];
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
        let k = 1.0 / det.sqrt();
        let q = [[q[0][0] * k, q[0][1] * k], [q[1][0] * k, q[1][1] * k]];
        let p = crate::geom::inv2(&q);
        let d = [[nu.exp(), 0.0], [0.0, (-nu).exp()]];
        Gluing3::new(p, d, nu, GluingKind::MappingTorus).unwrap()
    }

    fn one(c: [&str; 3]) -> DifferentialForm {
        DifferentialForm::one_form(Chart::Ambient, c.iter().map(|s| Expr::parse(s).unwrap()).collect()).unwrap()
    }

    #[test]
    fn suspension_forms_are_deck_invariant() {
        let g = cat_gluing();
        for f in [one(["exp(z)", "exp(-z)", "0"]), one(["-exp(z)", "exp(-z)", "0"]), one(["0", "0", "1"])] {
            let r = check_periodicity(&f, &g, &Grid3::cube(8), 1e-9).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.max_residual < 1e-9);
        }
    }

    #[test]
    fn non_periodic_form_fails() {
        let g = cat_gluing();
        let r = check_periodicity(&one(["exp(x)", "0", "0"]), &g, &Grid3::cube(6), 1e-9).unwrap();
        assert!(!r.pass);
        assert!(r.max_residual > 0.1);
    }

    #[test]
    fn two_forms_pull_back_with_minors() {
        let g = cat_gluing();
        let f = DifferentialForm::monomial(Chart::Ambient, Expr::Const(1.0), &[crate::Var::X, crate::Var::Y]).unwrap();
        assert!(check_periodicity(&f, &g, &Grid3::cube(4), 1e-9).unwrap().pass);
        let f = DifferentialForm::monomial(Chart::Ambient, Expr::parse("exp(-z)").unwrap(), &[crate::Var::X, crate::Var::Z])
            .unwrap();
        assert!(!check_periodicity(&f, &g, &Grid3::cube(4), 1e-9).unwrap().pass);
    }
}
