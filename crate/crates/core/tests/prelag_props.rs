use allab_core::anosov::{suspension_model, weak_foliations_on_torus};
use allab_core::contact::Verdict;
use allab_core::foliation::{models, winding, Foliation2};
use allab_core::geom::{Chart, DifferentialForm, Grid3};
use allab_core::prelag::{
    check_graph_lagrangian, obstruction_test, pre_lagrangian_certificate, scaling_solve, ClosednessObjective,
    Construction, ObstructionVerdict, PreLagInput, PreLagParams, PreLagReport, SolverParams,
};
use allab_core::Expr;
use proptest::prelude::*;

mod common;
use common::config;

const MATRICES: [[[i64; 2]; 2]; 4] = [[[2, 1], [1, 1]], [[3, 1], [2, 1]], [[1, 1], [1, 2]], [[5, 2], [2, 1]]];

fn check_invariants(r: &PreLagReport) {
    if r.obstructed() {
        assert!(r.certificate.is_none());
    }
    if let Some(c) = &r.certificate {
        assert_eq!(r.construction, Construction::Certificate);
        assert!(c.final_closedness < 1e-6);
        assert_eq!(c.final_al.verdict, Verdict::AnosovLiouville);
    }
}

#[test]
fn verdicts_do_not_depend_on_the_scaling_constant() {
    let m = suspension_model(MATRICES[0]).unwrap();
    for sigma in &m.fibers {
        let mut seen = Vec::new();
        for c in [1.0, 2.0, 10.0] {
            let mut params = PreLagParams {
                scale_c: c,
                ..PreLagParams::default()
            };
            params.perturb.grid = Grid3::cube(16);
            let r = pre_lagrangian_certificate(PreLagInput::Model { model: &m, sigma }, &params);
            check_invariants(&r);
            let o = r.obstruction.as_ref().unwrap();
            seen.push((o.verdict, o.winding_ws, o.winding_wu, r.parallel.as_ref().map(|p| p.verdict)));
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{seen:?}");
        assert_eq!(seen[0].0, ObstructionVerdict::PassesObstruction);
    }
}

#[test]
fn graph_lagrangian_fibers_pass_the_obstruction() {
    let mut found = 0;
    for a in MATRICES {
        let m = suspension_model(a).unwrap();
        let pair = m.standard_pair().unwrap();
        for sigma in &m.fibers {
            let g = check_graph_lagrangian(&pair, sigma, &Expr::Const(0.0), 32).unwrap();
            if g.holds {
                found += 1;
                let (ws, wu) = weak_foliations_on_torus(&m, sigma).unwrap();
                let o = obstruction_test(&ws, &wu).unwrap();
                assert_eq!(o.verdict, ObstructionVerdict::PassesObstruction, "{a:?}");
            }
        }
    }
    assert_eq!(found, 2 * MATRICES.len());
}

#[test]
fn transverse_pairs_have_equal_windings() {
    let mut pairs: Vec<(String, Foliation2, Foliation2)> = vec![
        ("two_reeb".into(), models::two_reeb(), models::two_reeb_partner()),
        ("franks_williams".into(), models::franks_williams(), models::franks_williams_partner()),
        ("figure3".into(), models::figure3(), models::figure3_partner()),
        ("morse_smale".into(), models::morse_smale(), models::morse_smale().rotated()),
        ("rotation".into(), models::rotation(0.3), models::rotation(0.3).rotated()),
    ];
    for a in MATRICES {
        let m = suspension_model(a).unwrap();
        for sigma in &m.fibers {
            let (ws, wu) = weak_foliations_on_torus(&m, sigma).unwrap();
            pairs.push((format!("{a:?}"), ws, wu));
        }
    }
    for (name, f, g) in pairs {
        assert_eq!(winding(&f).unwrap(), winding(&g).unwrap(), "{name}");
        assert!(obstruction_test(&f, &g).unwrap().windings_agree, "{name}");
    }
}

fn planted(h: f64, k: i32, a0: (f64, f64)) -> (DifferentialForm, DifferentialForm) {
    let e = Expr::exp(Expr::parse(&format!("{h:?}*sin(2*pi*({k}*u + v))")).unwrap());
    let a = DifferentialForm::one_form(
        Chart::Torus,
        vec![Expr::mul(Expr::Const(a0.0), e.clone()), Expr::mul(Expr::Const(a0.1), e)],
    )
    .unwrap();
    let b = DifferentialForm::one_form(Chart::Torus, vec![Expr::Const(1.0), Expr::Const(0.0)]).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(config(20, 40))]

    #[test]
    fn adjoint_gradient_matches_differences(
        x in prop::collection::vec(-0.2..0.2f64, 2 * 16 * 16),
        picks in prop::collection::vec(0usize..2 * 16 * 16, 4),
    ) {
        let (a, b) = planted(0.3, 1, (0.5, 1.0));
        let obj = ClosednessObjective::new(&a, &b, 16).unwrap();
        let (_, g) = obj.value_and_gradient(&x);
        for k in picks {
            let h = 1e-6;
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-8), "{}: {} vs {}", k, fd, g[k]);
        }
    }
}

proptest! {
    #![proptest_config(config(10, 41))]

    #[test]
    fn solver_history_never_increases(h in -0.4..0.4f64, k in -1i32..=1, a0 in (0.2..1.0f64, 0.5..1.5f64)) {
        let (a, b) = planted(h, k, a0);
        let params = SolverParams { grid: 32, ..SolverParams::default() };
        let s = scaling_solve(&a, &b, &params).unwrap();
        prop_assert!(s.residual < 1e-6);
        for w in s.history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}
