use crate::expr::{Expr, Var};
use crate::geom::{GeomError, TorusEmbedding, VectorField3};

/// Affine coordinates `(u, v, t)` near an embedded torus, with
/// `q = Σ(u, v) + t X` for a constant generator `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollarFrame {
    pub sigma: TorusEmbedding,
    pub x: [f64; 3],
    /// Rows are the differentials of `u`, `v`, `t`.
    inv: [[f64; 3]; 3],
}

fn inverse3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |r: usize, k: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        m[r1][k1] * m[r2][k2] - m[r1][k2] * m[r2][k1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if det.abs() < 1e-12 {
        return None;
    }
    // inverse = adjugate / det, adjugate[i][j] = cofactor[j][i]
    Some(std::array::from_fn(|i| std::array::from_fn(|j| c(j, i) / det)))
}

impl CollarFrame {
    /// Needs a constant generator transverse to `sigma`.
    pub fn new(sigma: &TorusEmbedding, x: &VectorField3) -> Result<CollarFrame, GeomError> {
        let xc = x
            .as_constant()
            .ok_or_else(|| GeomError::Embedding("collar coordinates need a constant generator".into()))?;
        let m = [
            [sigma.du[0], sigma.dv[0], xc[0]],
            [sigma.du[1], sigma.dv[1], xc[1]],
            [sigma.du[2], sigma.dv[2], xc[2]],
        ];
        let inv = inverse3(m).ok_or_else(|| GeomError::Embedding("generator is tangent to the torus".into()))?;
        Ok(CollarFrame {
            sigma: sigma.clone(),
            x: xc,
            inv,
        })
    }

    pub fn coords(&self, q: [f64; 3]) -> [f64; 3] {
        let d = [q[0] - self.sigma.base[0], q[1] - self.sigma.base[1], q[2] - self.sigma.base[2]];
        self.inv.map(|row| row[0] * d[0] + row[1] * d[1] + row[2] * d[2])
    }

    pub fn point(&self, u: f64, v: f64, t: f64) -> [f64; 3] {
        let p = self.sigma.point(u, v);
        [p[0] + t * self.x[0], p[1] + t * self.x[1], p[2] + t * self.x[2]]
    }

    /// Differential of the `k`-th collar coordinate as an ambient covector.
    pub fn covector(&self, k: usize) -> [f64; 3] {
        self.inv[k]
    }

    /// `u`, `v`, `t` as affine expressions in `x, y, z`.
    pub fn coordinate_exprs(&self) -> [Expr; 3] {
        let base = self.sigma.base;
        self.inv.map(|row| {
            let offset = -(row[0] * base[0] + row[1] * base[1] + row[2] * base[2]);
            Expr::sum([
                Expr::Const(offset),
                Expr::mul(Expr::Const(row[0]), Expr::var(Var::X)),
                Expr::mul(Expr::Const(row[1]), Expr::var(Var::Y)),
                Expr::mul(Expr::Const(row[2]), Expr::var(Var::Z)),
            ])
        })
    }
}

/// `b(t) = 1 − S(t²/w²)` with `S(r) = 10r³ − 15r⁴ + 6r⁵`, valid for `|t| < w`.
/// It is `1` with vanishing derivative at `t = 0` and meets zero in a `C²`
/// fashion at `|t| = w`.
pub fn bump(t: Expr, width: f64) -> Expr {
    let r = Expr::pow(Expr::div(t, Expr::Const(width)), Expr::Const(2.0));
    let s = Expr::sum([
        Expr::mul(Expr::Const(10.0), Expr::pow(r.clone(), Expr::Const(3.0))),
        Expr::mul(Expr::Const(-15.0), Expr::pow(r.clone(), Expr::Const(4.0))),
        Expr::mul(Expr::Const(6.0), Expr::pow(r, Expr::Const(5.0))),
    ]);
    Expr::sub(Expr::Const(1.0), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Env;

    #[test]
    fn bump_profile() {
        let b = bump(Expr::var(Var::Z), 0.4);
        let db = b.diff(Var::Z);
        let ddb = db.diff(Var::Z);
        let at = |e: &Expr, z: f64| e.eval(&Env::new().with(Var::Z, z)).unwrap();
        assert_eq!(at(&b, 0.0), 1.0);
        assert_eq!(at(&db, 0.0), 0.0);
        for z in [-0.4, 0.4] {
            assert!(at(&b, z).abs() < 1e-14);
            assert!(at(&db, z).abs() < 1e-12);
            assert!(at(&ddb, z).abs() < 1e-9);
        }
    }

    #[test]
    fn frame_round_trip() {
        let sigma = TorusEmbedding::new([0.1, 0.2, 0.3], [1.0, 0.5, 0.0], [-0.2, 1.0, 0.1]).unwrap();
        let frame = CollarFrame::new(&sigma, &VectorField3::constant([0.0, 0.0, 1.0])).unwrap();
        let q = frame.point(0.3, -0.7, 0.2);
        let c = frame.coords(q);
        assert!((c[0] - 0.3).abs() < 1e-14 && (c[1] + 0.7).abs() < 1e-14 && (c[2] - 0.2).abs() < 1e-14);
        let exprs = frame.coordinate_exprs();
        let env = Env::new().with(Var::X, q[0]).with(Var::Y, q[1]).with(Var::Z, q[2]);
        assert!((exprs[1].eval(&env).unwrap() + 0.7).abs() < 1e-14);
    }
}
