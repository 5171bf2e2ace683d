use std::f64::consts::TAU;

use allab_core::foliation::{
    compact_leaves, integrate_leaf, models, reeb_annuli, return_map, rotation_number, winding, Foliation2, ReturnMap,
    Transversal, Winding, RETURN_NODES,
};
use allab_core::Expr;
use proptest::prelude::*;

mod common;
use common::config;

const ZERO: Winding = Winding { w_u: 0, w_v: 0 };

const SL2Z: [[[i64; 2]; 2]; 5] = [
    [[1, 1], [0, 1]],
    [[2, 1], [1, 1]],
    [[0, -1], [1, 0]],
    [[1, 0], [-3, 1]],
    [[3, 2], [4, 3]],
];

/// Kernel of `dv − c(u) du + dg` with `|∂_v g| < 1`.
fn closed_form_foliation(c: (f64, f64), g: (f64, i32, i32, f64)) -> Foliation2 {
    let (amp, p, q, phase) = g;
    let arg = format!("2*pi*({p}*u + {q}*v) + {phase:?}");
    let gu = format!("{amp:?}*2*pi*{p}*cos({arg})");
    let gv = format!("{amp:?}*2*pi*{q}*cos({arg})");
    let cu = format!("{:?} + {:?}*sin(2*pi*u)", c.0, c.1);
    Foliation2::parse(&format!("-(1 + {gv})"), &format!("-({cu}) + {gu}")).unwrap()
}

fn closed_form() -> impl Strategy<Value = Foliation2> {
    ((-2.0..2.0f64, -2.0..2.0f64), (-2i32..=2, -2i32..=2, 0.0..TAU)).prop_map(|(c, (p, q, phase))| {
        let amp = 0.9 / (TAU * f64::from(q.abs().max(1)));
        closed_form_foliation(c, (amp, p, q, phase))
    })
}

fn planted() -> impl Strategy<Value = (Foliation2, Winding)> {
    (-3i64..=3, -3i64..=3, 0.0..2.0f64, -2i32..=2, -2i32..=2).prop_map(|(m, n, c, p, q)| {
        let theta = format!("2*pi*({m}*u + {n}*v) + {c:?}*sin(2*pi*({p}*u + {q}*v))");
        let f = Foliation2::parse(&format!("cos({theta})"), &format!("sin({theta})")).unwrap();
        (f, Winding { w_u: m, w_v: n })
    })
}

fn positive_factor() -> impl Strategy<Value = Expr> {
    (-1.5..1.5f64, -1.5..1.5f64, -2i32..=2).prop_map(|(a, b, k)| {
        Expr::parse(&format!("exp({a:?}*sin(2*pi*u) + {b:?}*cos(2*pi*({k}*u + v)))")).unwrap()
    })
}

fn lift_inverse(h: &dyn Fn(f64) -> f64, y: f64) -> f64 {
    let (mut lo, mut hi) = (y - 1.0, y + 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(config(30, 30))]

    #[test]
    fn closed_forms_have_no_winding(f in closed_form()) {
        prop_assert_eq!(winding(&f).unwrap(), ZERO);
    }

    #[test]
    fn planted_windings_are_recovered((f, w) in planted()) {
        prop_assert_eq!(winding(&f).unwrap(), w);
    }

    #[test]
    fn winding_ignores_positive_rescaling((f, w) in planted(), phi in positive_factor()) {
        prop_assert_eq!(winding(&f.scaled(&phi).unwrap()).unwrap(), w);
    }

    #[test]
    fn triviality_survives_linear_maps(f in closed_form(), (g, w) in planted()) {
        for a in SL2Z {
            prop_assert_eq!(winding(&f.precompose(a).unwrap()).unwrap(), ZERO);
            let image = winding(&g.precompose(a).unwrap()).unwrap();
            prop_assert_eq!(image.is_trivial(), w.is_trivial(), "{:?} under {:?}", image, a);
        }
    }

    #[test]
    fn rotation_number_is_conjugation_invariant(
        rho in 0.0..1.0f64,
        b in 0.0..0.4f64,
        a in prop::collection::vec(-0.9..0.9f64, 3),
    ) {
        let r = return_map(&models::suspension(rho, b), Transversal::U(0.0)).unwrap();
        let n = 10_000;
        let base = rotation_number(&r, n).value;
        for a in a {
            let h = move |t: f64| t + a * (TAU * t).sin() / TAU;
            let conj = ReturnMap::from_lift(|t| h(r.eval(lift_inverse(&h, t))), RETURN_NODES).unwrap();
            let other = rotation_number(&conj, n).value;
            prop_assert!((other - base).abs() <= 2.0 / n as f64, "{} vs {} (a = {})", other, base, a);
        }
    }
}

proptest! {
    #![proptest_config(config(8, 31))]

    #[test]
    fn returning_foliations_have_no_reeb_annuli(rho in -1.0..1.0f64, b in 0.0..0.9f64) {
        let f = models::suspension(rho, b);
        let transversals = (0..8).flat_map(|k| [Transversal::U(k as f64 / 8.0), Transversal::V(k as f64 / 8.0)]);
        let returns = transversals.into_iter().any(|t| return_map(&f, t).is_ok());
        prop_assert!(returns);
        prop_assert!(reeb_annuli(&f, &compact_leaves(&f)).is_empty());
    }
}

#[test]
fn catalog_dichotomy() {
    let catalog = [
        ("two_reeb", models::two_reeb()),
        ("franks_williams", models::franks_williams()),
        ("figure3", models::figure3()),
        ("morse_smale", models::morse_smale()),
        ("rotation", models::rotation(0.3)),
    ];
    for (name, f) in catalog {
        let set = compact_leaves(&f);
        let annuli = reeb_annuli(&f, &set);
        let transversals = (0..16).flat_map(|k| [Transversal::U(k as f64 / 16.0), Transversal::V(k as f64 / 16.0)]);
        let returns = transversals.into_iter().any(|t| return_map(&f, t).is_ok());
        assert!(!(returns && !annuli.is_empty()), "{name}: returns and has {} annuli", annuli.len());
        for leaf in &set.leaves {
            // the stored class is the displacement of one circuit; repelling
            // leaves are followed backwards, where they attract
            let error = |sign: f64| {
                let end = integrate_leaf(&f, leaf.point, sign * leaf.period).unwrap().end();
                let moved = [end[0] - leaf.point[0], end[1] - leaf.point[1]];
                (0..2).map(|k| (moved[k] - sign * leaf.class[k] as f64).abs()).fold(0.0, f64::max)
            };
            let best = error(1.0).min(error(-1.0));
            assert!(best < 1e-5, "{name}: leaf at {:?} misses {:?} by {best:e}", leaf.point, leaf.class);
        }
    }
    assert_eq!(reeb_annuli(&models::two_reeb(), &compact_leaves(&models::two_reeb())).len(), 2);
    assert!(reeb_annuli(&models::figure3(), &compact_leaves(&models::figure3())).len() >= 2);
}
