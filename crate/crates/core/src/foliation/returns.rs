use std::fmt;

use serde::Serialize;

use super::{rk4_step, Foliation2, FoliationError, MAX_STEP};

/// A closed transversal candidate: the circle `u = c` or `v = c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transversal {
    U(f64),
    V(f64),
}

impl fmt::Display for Transversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transversal::U(c) => write!(f, "the circle u = {c}"),
            Transversal::V(c) => write!(f, "the circle v = {c}"),
        }
    }
}

impl Transversal {
    /// Index of the coordinate held fixed.
    pub(crate) fn fixed_axis(self) -> usize {
        match self {
            Transversal::U(_) => 0,
            Transversal::V(_) => 1,
        }
    }

    /// Point of the circle with parameter `t`.
    pub fn point(self, t: f64) -> [f64; 2] {
        match self {
            Transversal::U(c) => [c, t],
            Transversal::V(c) => [t, c],
        }
    }
}

/// Tabulated lift of a first-return map, interpolated by a monotone cubic.
///
/// The lift satisfies `F(t + 1) = F(t) + 1` by construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnMap {
    pub transversal: Option<Transversal>,
    /// Leaves were followed against their orientation to move in the
    /// positive direction across the transversal.
    pub backward: bool,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Default number of tabulation nodes.
pub const RETURN_NODES: usize = 1024;

impl ReturnMap {
    fn from_values(transversal: Option<Transversal>, backward: bool, values: Vec<f64>) -> Result<Self, FoliationError> {
        let n = values.len();
        if n < 4 {
            return Err(FoliationError::Invalid("need at least 4 tabulation nodes".into()));
        }
        let next = |i: usize| if i + 1 < n { values[i + 1] } else { values[0] + 1.0 };
        let secants: Vec<f64> = (0..n).map(|i| (next(i) - values[i]) * n as f64).collect();
        if let Some(i) = secants.iter().position(|d| !(*d > 0.0)) {
            return Err(FoliationError::NotMonotone { at: i as f64 / n as f64 });
        }
        let mut slopes: Vec<f64> = (0..n).map(|i| 0.5 * (secants[(i + n - 1) % n] + secants[i])).collect();
        for i in 0..n {
            let j = (i + 1) % n;
            let a = slopes[i] / secants[i];
            let b = slopes[j] / secants[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * a * secants[i];
                slopes[j] = tau * b * secants[i];
            }
        }
        Ok(ReturnMap {
            transversal,
            backward,
            values,
            slopes,
        })
    }

    /// Tabulates an arbitrary lift of an orientation-preserving circle map.
    pub fn from_lift(f: impl Fn(f64) -> f64, nodes: usize) -> Result<Self, FoliationError> {
        let values: Vec<f64> = (0..nodes).map(|i| f(i as f64 / nodes as f64)).collect();
        for k in 0..8 {
            let t = k as f64 / 8.0 + 0.03;
            if (f(t + 1.0) - f(t) - 1.0).abs() > 1e-6 {
                return Err(FoliationError::Invalid("lift does not commute with unit translation".into()));
            }
        }
        ReturnMap::from_values(None, false, values)
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    /// Lift values at the nodes `i / nodes`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The lift `F(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let k = t.floor();
        let s = (t - k) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let x = s - i as f64;
        let h = 1.0 / n as f64;
        let (y0, m0) = (self.values[i], self.slopes[i]);
        let (y1, m1) = if i + 1 < n {
            (self.values[i + 1], self.slopes[i + 1])
        } else {
            (self.values[0] + 1.0, self.slopes[0])
        };
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        k + h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
    }

    /// `F^p(t)`.
    pub fn iterate(&self, t: f64, p: usize) -> f64 {
        (0..p).fold(t, |x, _| self.eval(x))
    }
}

/// Follows the leaf through `start` until the fixed coordinate has grown by
/// one; returns the lifted parameter there and the arc length used.
pub(crate) fn follow_to_return(
    f: &Foliation2,
    transversal: Transversal,
    start: [f64; 2],
    sign: f64,
    turns: usize,
) -> Result<(f64, f64), FoliationError> {
    let a = transversal.fixed_axis();
    let target = start[a] + turns as f64;
    let max_length = 200.0 * turns as f64;
    let mut p = start;
    let mut length = 0.0;
    while length < max_length {
        let q = rk4_step(f, p, MAX_STEP, sign);
        if q[a] >= target {
            let (mut lo, mut hi) = (0.0, MAX_STEP);
            let mut hit = q;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let r = rk4_step(f, p, mid, sign);
                if r[a] >= target {
                    hi = mid;
                    hit = r;
                } else {
                    lo = mid;
                }
            }
            return Ok((hit[1 - a], length + hi));
        }
        p = q;
        length += MAX_STEP;
    }
    Err(FoliationError::NoReturn {
        transversal,
        start,
        length: max_length,
    })
}

/// Sign of the transverse component along the circle, or the offending point.
pub(crate) fn transverse_sign(f: &Foliation2, transversal: Transversal, samples: usize) -> Result<f64, FoliationError> {
    let a = transversal.fixed_axis();
    let mut sign = 0.0;
    for k in 0..samples {
        let p = transversal.point(k as f64 / samples as f64);
        let w = f.unit(p[0], p[1]);
        let c = w[a];
        if c.abs() <= 1e-6 || (sign != 0.0 && c.signum() != sign) {
            return Err(FoliationError::NotTransverse {
                transversal,
                at: p,
                component: c,
            });
        }
        sign = c.signum();
    }
    Ok(sign)
}

/// First-return map of the circle to itself along leaves, crossing in the
/// positive direction of the fixed coordinate.
pub fn return_map(f: &Foliation2, transversal: Transversal) -> Result<ReturnMap, FoliationError> {
    return_map_with(f, transversal, RETURN_NODES)
}

pub fn return_map_with(f: &Foliation2, transversal: Transversal, nodes: usize) -> Result<ReturnMap, FoliationError> {
    let sign = transverse_sign(f, transversal, nodes.max(1024))?;
    // one leaf first, so a trapped transversal fails once rather than per node
    follow_to_return(f, transversal, transversal.point(0.0), sign, 1)?;
    let results = crate::par::map_indices(nodes, |i| {
        let t = i as f64 / nodes as f64;
        follow_to_return(f, transversal, transversal.point(t), sign, 1).map(|r| r.0)
    });
    let values = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    ReturnMap::from_values(Some(transversal), sign < 0.0, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub bound: f64,
    pub iterations: usize,
}

/// Birkhoff average of the lift displacement from `t = 0`.
pub fn rotation_number(r: &ReturnMap, iterations: usize) -> RotationEstimate {
    let n = iterations.max(1);
    let end = r.iterate(0.0, n);
    RotationEstimate {
        value: end / n as f64,
        bound: 1.0 / n as f64,
        iterations: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn rigid_rotation_from_constant_field() {
        let f = Foliation2::constant(1.0, 0.3).unwrap();
        let r = return_map_with(&f, Transversal::U(0.0), 64).unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.047;
            assert!((r.eval(t) - t - 0.3).abs() < 1e-9);
        }
        let rho = rotation_number(&r, 1000);
        assert!((rho.value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn reversed_leaves_give_the_same_map() {
        let f = Foliation2::constant(-1.0, -0.3).unwrap();
        let r = return_map_with(&f, Transversal::U(0.2), 64).unwrap();
        assert!(r.backward);
        assert!((r.eval(0.5) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn tangent_transversal_is_reported() {
        let f = Foliation2::parse("sin(2*pi*u)", "cos(2*pi*u)").unwrap();
        assert!(matches!(
            return_map(&f, Transversal::U(0.0)),
            Err(FoliationError::NotTransverse { .. })
        ));
    }

    #[test]
    fn zero_rotation_is_exact() {
        let r = ReturnMap::from_lift(|t| t, 1024).unwrap();
        assert_eq!(rotation_number(&r, 10_000).value, 0.0);
    }

    #[test]
    fn interpolation_is_monotone_and_accurate() {
        let lift = |t: f64| t + 0.1 * (TAU * t).sin() / TAU + 0.2;
        let r = ReturnMap::from_lift(lift, 1024).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..5000 {
            let t = -1.0 + 3.0 * k as f64 / 5000.0;
            let y = r.eval(t);
            assert!(y > prev);
            assert!((y - lift(t)).abs() < 1e-9);
            prev = y;
        }
    }
}
