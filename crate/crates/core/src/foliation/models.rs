//! Built-in foliations of the torus used by the examples and scenarios.

use super::Foliation2;

fn parse(v1: &str, v2: &str) -> Foliation2 {
    Foliation2::parse(v1, v2).expect("built-in model is valid")
}

/// `V = (sin 2πu, cos 2πu)`: compact leaves `u = 0` and `u = ½` with
/// opposite orientations, two Reeb bands, winding `(−1, 0)`.
pub fn two_reeb() -> Foliation2 {
    parse("sin(2*pi*u)", "cos(2*pi*u)")
}

/// Transverse partner of [`two_reeb`], with compact leaves `u = ¼, ¾`.
pub fn two_reeb_partner() -> Foliation2 {
    two_reeb().rotated()
}

/// `V = (cos 2πu, sin 2πu)`, winding `(1, 0)`.
pub fn franks_williams() -> Foliation2 {
    parse("cos(2*pi*u)", "sin(2*pi*u)")
}

pub fn franks_williams_partner() -> Foliation2 {
    franks_williams().rotated()
}

/// Direction angle `θ(u) = π/2 + 2π(1 − cos 2πu)`. The angle climbs by 4π
/// and comes back down, so there are 8 vertical compact leaves bounding 8
/// Reeb bands while the winding is `(0, 0)`.
pub fn figure3() -> Foliation2 {
    parse(
        "cos(pi/2 + 2*pi*(1 - cos(2*pi*u)))",
        "sin(pi/2 + 2*pi*(1 - cos(2*pi*u)))",
    )
}

/// Quarter turn of [`figure3`]; its 8 vertical leaves are parallel to
/// those of [`figure3`].
pub fn figure3_partner() -> Foliation2 {
    figure3().rotated()
}

/// Two vertical compact leaves `u = 0, ½`, both oriented upwards.
pub fn morse_smale() -> Foliation2 {
    parse("0.3*sin(2*pi*u)", "1")
}

/// Constant slope `ρ`.
pub fn rotation(rho: f64) -> Foliation2 {
    Foliation2::constant(1.0, rho).expect("constant field")
}

/// `V = (1, ρ + b sin 2π(u + v))`, a suspension for `|b| < 1 − |ρ|` or any
/// `b` when the field stays transverse to `u = 0`.
pub fn suspension(rho: f64, b: f64) -> Foliation2 {
    parse("1", &format!("{rho} + {b}*sin(2*pi*(u + v))"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::{compact_leaves, reeb_annuli, winding, Winding};

    #[test]
    fn figure3_has_eight_reeb_bands_and_no_winding() {
        let f = figure3();
        assert_eq!(winding(&f).unwrap(), Winding { w_u: 0, w_v: 0 });
        let set = compact_leaves(&f);
        let mut us: Vec<f64> = set.leaves.iter().map(|l| l.point[0]).collect();
        us.sort_by(f64::total_cmp);
        let want = [0.0, 1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75, 5.0 / 6.0];
        assert_eq!(us.len(), 8, "{us:?}");
        for (a, b) in us.iter().zip(want) {
            assert!((a - b).abs() < 1e-6, "{us:?}");
        }
        assert_eq!(reeb_annuli(&f, &set).len(), 8);
    }
}
