#![allow(dead_code)]

use allab_core::{Env, Expr, Var};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

/// Fixed seed, no persistence files: runs are reproducible.
pub fn config(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub const SPACE: [Var; 3] = [Var::X, Var::Y, Var::Z];

/// Smooth trees over `vars` with bounded growth: no division, logarithms,
/// roots or exponentials of unbounded arguments.
pub fn smooth_tree(vars: &'static [Var], depth: u32) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-2.0..2.0f64).prop_map(Expr::Const),
        prop::sample::select(vars.to_vec()).prop_map(Expr::var),
    ];
    leaf.prop_recursive(depth, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(|a| Expr::exp(Expr::sin(a))),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| Expr::pow(a, Expr::Const(k as f64))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::mul(a, b)),
        ]
    })
}

pub fn point3() -> impl Strategy<Value = [f64; 3]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
}

pub fn env3(p: [f64; 3]) -> Env {
    Env::new().with(Var::X, p[0]).with(Var::Y, p[1]).with(Var::Z, p[2])
}

pub fn env_uv(u: f64, v: f64) -> Env {
    Env::new().with(Var::U, u).with(Var::V, v)
}

/// Deterministic spread of sample points in `[−1, 1]³`.
pub fn samples(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|k| {
            let t = k as f64;
            [(0.37 * t).sin(), (0.71 * t + 0.2).cos(), 0.9 * (1.13 * t).sin()]
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
