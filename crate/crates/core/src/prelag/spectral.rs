//! Fourier transforms and trigonometric interpolation on the `N × N` torus
//! grid, indexed `i·N + j` for `(u, v) = (i/N, j/N)`.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::expr::{Expr, Var};

#[derive(Clone)]
pub struct Spectral {
    pub n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Spectral({})", self.n)
    }
}

/// Signed frequency of index `k`.
pub fn freq(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl Spectral {
    pub fn new(n: usize) -> Spectral {
        let mut planner = FftPlanner::new();
        Spectral {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn transform2(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Normalized coefficients `ĉ_k` with `f = Σ ĉ_k e^{2πi k·x}`.
    pub fn coefficients(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut data: Vec<Complex<f64>> = values.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.transform2(&mut data, &self.forward);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    /// Real part of the synthesis from normalized coefficients.
    pub fn synthesize(&self, coeffs: &[Complex<f64>]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform2(&mut data, &self.inverse);
        data.iter().map(|c| c.re).collect()
    }

    /// Spectral partial derivative along `u` (`axis = 0`) or `v`, with the
    /// Nyquist mode dropped so the operator is antisymmetric.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let n = self.n;
        let mut c = self.coefficients(values);
        for i in 0..n {
            for j in 0..n {
                let k = if axis == 0 { i } else { j };
                let nyquist = n % 2 == 0 && k == n / 2;
                let w = if nyquist { 0.0 } else { TAU * freq(k, n) as f64 };
                c[i * n + j] *= Complex::new(0.0, w);
            }
        }
        self.synthesize(&c)
    }

    /// Trigonometric interpolant as an expression in `u, v`; coefficients
    /// with modulus below `threshold` are dropped.
    pub fn interpolant(&self, values: &[f64], threshold: f64) -> Expr {
        self.expr_from_coefficients(&self.coefficients(values), threshold)
    }

    pub fn expr_from_coefficients(&self, c: &[Complex<f64>], threshold: f64) -> Expr {
        let n = self.n as i64;
        let in_range = |k: i64| k >= -(n / 2) && k < n - n / 2;
        let mut terms = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let k = [freq(i, self.n), freq(j, self.n)];
                let ck = c[i * self.n + j];
                if ck.norm() < threshold {
                    continue;
                }
                let mirrored = in_range(-k[0]) && in_range(-k[1]);
                let positive = k[0] > 0 || (k[0] == 0 && k[1] > 0);
                let factor = if k == [0, 0] || !mirrored {
                    1.0
                } else if positive {
                    2.0
                } else {
                    continue;
                };
                if k == [0, 0] {
                    terms.push(Expr::Const(ck.re));
                    continue;
                }
                let theta = Expr::mul(
                    Expr::Const(TAU),
                    Expr::add(
                        Expr::mul(Expr::Const(k[0] as f64), Expr::var(Var::U)),
                        Expr::mul(Expr::Const(k[1] as f64), Expr::var(Var::V)),
                    ),
                );
                if factor * ck.re != 0.0 {
                    terms.push(Expr::mul(Expr::Const(factor * ck.re), Expr::cos(theta.clone())));
                }
                if factor * ck.im != 0.0 {
                    terms.push(Expr::mul(Expr::Const(-factor * ck.im), Expr::sin(theta)));
                }
            }
        }
        if terms.is_empty() {
            Expr::Const(0.0)
        } else {
            Expr::sum(terms)
        }
    }
}

/// Samples of `values(u, v)` on the grid.
pub fn sample(n: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..n * n).map(|k| f((k / n) as f64 / n as f64, (k % n) as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Env;

    #[test]
    fn derivative_of_a_trig_polynomial() {
        let n = 16;
        let s = Spectral::new(n);
        let f = sample(n, |u, v| (TAU * u).sin() * (2.0 * TAU * v).cos());
        let du = s.derivative(&f, 0);
        let want = sample(n, |u, v| TAU * (TAU * u).cos() * (2.0 * TAU * v).cos());
        for (a, b) in du.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_nodes() {
        for n in [8, 9] {
            let s = Spectral::new(n);
            let f = sample(n, |u, v| (u * 7.3 + v * v).sin() + 0.1 * u);
            let e = s.interpolant(&f, 0.0);
            let prog = e.compile(&Env::new());
            for i in 0..n {
                for j in 0..n {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    let got = prog.eval(&[0.0, 0.0, 0.0, 0.0, u, v]);
                    assert!((got - f[i * n + j]).abs() < 1e-12, "n={n}");
                }
            }
        }
    }
}
