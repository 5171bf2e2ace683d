use serde::Serialize;

use super::returns::{follow_to_return, return_map, transverse_sign, ReturnMap, Transversal};
use super::{integrate_leaf, Foliation2, FoliationError, VALIDATION_GRID};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LeafSource {
    /// A leaf lying on an axis circle.
    AxisCircle { transversal: Transversal },
    /// A periodic orbit of a return map.
    Periodic { transversal: Transversal, period: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactLeaf {
    pub point: [f64; 2],
    /// Arc length of one circuit.
    pub period: f64,
    /// Oriented primitive class: lift displacement after one circuit.
    pub class: [i64; 2],
    /// Sign of `class` against its canonical representative.
    pub orientation: i8,
    pub source: LeafSource,
}

impl CompactLeaf {
    /// Unoriented class, normalized so the first nonzero entry is positive.
    pub fn canonical_class(&self) -> [i64; 2] {
        canonical(self.class).0
    }
}

/// Every leaf is compact, all in one oriented class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafFamily {
    pub class: [i64; 2],
    pub transversal: Transversal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct CompactLeafSet {
    pub leaves: Vec<CompactLeaf>,
    pub family: Option<LeafFamily>,
}

impl CompactLeafSet {
    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty() && self.family.is_none()
    }

    /// Oriented classes present, family included.
    pub fn classes(&self) -> Vec<[i64; 2]> {
        let mut out: Vec<[i64; 2]> = self.leaves.iter().map(|l| l.class).collect();
        if let Some(f) = &self.family {
            out.push(f.class);
        }
        out.sort();
        out.dedup();
        out
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn canonical(c: [i64; 2]) -> ([i64; 2], i8) {
    if c[0] > 0 || (c[0] == 0 && c[1] > 0) {
        (c, 1)
    } else {
        ([-c[0], -c[1]], -1)
    }
}

/// Search space of [`compact_leaves`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeafSearch {
    /// Axis circles `u = k/n`, `v = k/n` tried as candidates and transversals.
    pub circles: usize,
    pub max_period: usize,
}

impl Default for LeafSearch {
    fn default() -> Self {
        LeafSearch {
            circles: 64,
            max_period: 8,
        }
    }
}

const SCAN: usize = 1024;
const AXIS_TOL: f64 = 1e-9;
const CLOSE_TOL: f64 = 1e-6;

fn golden_min(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    while b - a > 1e-14 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    0.5 * (a + b)
}

fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if b - a < 1e-15 {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Roots of `g` on `[0, 1)`, from sign changes and from near-zero minima of
/// `|g|`, plus the extra candidates.
fn roots(g: &dyn Fn(f64) -> f64, extra: &[f64], tol: f64) -> Vec<f64> {
    let vals: Vec<f64> = (0..=SCAN).map(|i| g(i as f64 / SCAN as f64)).collect();
    let h = 1.0 / SCAN as f64;
    let mut out = Vec::new();
    for i in 0..SCAN {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            out.push(i as f64 * h);
        } else if a * b < 0.0 {
            out.push(bisect(g, i as f64 * h, (i + 1) as f64 * h));
        }
        let prev = if i == 0 { vals[SCAN - 1] } else { vals[i - 1] };
        if a.abs() <= prev.abs() && a.abs() <= b.abs() && a.abs() < 1e-2 {
            let abs = |t: f64| g(t).abs();
            out.push(golden_min(&abs, (i as f64 - 1.0) * h, (i as f64 + 1.0) * h));
        }
    }
    out.extend_from_slice(extra);
    let mut kept: Vec<f64> = out
        .into_iter()
        .map(|t| t.rem_euclid(1.0))
        .filter(|&t| g(t).abs() < tol)
        .collect();
    kept.sort_by(f64::total_cmp);
    let near = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(1.0 - d) < 1e-7
    };
    kept.dedup_by(|a, b| near(*a, *b));
    if kept.len() > 1 && near(kept[0], kept[kept.len() - 1]) {
        kept.pop();
    }
    kept
}

fn axis_leaves(f: &Foliation2, search: &LeafSearch) -> Vec<CompactLeaf> {
    let extra: Vec<f64> = (0..search.circles).map(|k| k as f64 / search.circles as f64).collect();
    let mut out = Vec::new();
    // axis 0: leaves on u = c, along which V₁ vanishes.
    for axis in 0..2 {
        let at = |c: f64, s: f64| if axis == 0 { f.unit(c, s) } else { f.unit(s, c) };
        let g = |c: f64| at(c, 0.0)[axis];
        for c in roots(&g, &extra, 1e-6) {
            let n = VALIDATION_GRID;
            let on_circle = (0..n).all(|j| at(c, j as f64 / n as f64)[axis].abs() < AXIS_TOL);
            if !on_circle {
                continue;
            }
            let along = at(c, 0.0)[1 - axis].signum() as i64;
            let transversal = if axis == 0 { Transversal::U(c) } else { Transversal::V(c) };
            let class = if axis == 0 { [0, along] } else { [along, 0] };
            out.push(CompactLeaf {
                point: transversal.point(0.0),
                period: 1.0,
                class,
                orientation: canonical(class).1,
                source: LeafSource::AxisCircle { transversal },
            });
        }
    }
    out
}

fn first_transverse(f: &Foliation2, axis: usize, circles: usize) -> Option<(Transversal, ReturnMap)> {
    let t = (0..circles).find_map(|k| {
        let c = k as f64 / circles as f64;
        let t = if axis == 0 { Transversal::U(c) } else { Transversal::V(c) };
        transverse_sign(f, t, 1024).ok().map(|_| t)
    })?;
    return_map(f, t).ok().map(|r| (t, r))
}

enum PeriodicScan {
    Family([i64; 2]),
    Points(Vec<(f64, usize, i64)>),
}

fn periodic_points(r: &ReturnMap, max_period: usize) -> PeriodicScan {
    let mut found = Vec::new();
    for p in 1..=max_period {
        let disp = |t: f64| r.iterate(t, p) - t;
        let samples: Vec<f64> = (0..SCAN).map(|i| disp(i as f64 / SCAN as f64)).collect();
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for k in (lo.floor() as i64)..=(hi.ceil() as i64) {
            if gcd(p as i64, k) != 1 {
                continue;
            }
            if samples.iter().all(|s| (s - k as f64).abs() < 1e-9) {
                return PeriodicScan::Family([p as i64, k]);
            }
            let g = |t: f64| disp(t) - k as f64;
            for t in roots(&g, &[], 1e-8) {
                found.push((t, p, k));
            }
        }
    }
    PeriodicScan::Points(found)
}

fn oriented(axis: usize, p: i64, k: i64, backward: bool) -> [i64; 2] {
    let s = if backward { -1 } else { 1 };
    if axis == 0 {
        [s * p, s * k]
    } else {
        [s * k, s * p]
    }
}

fn periodic_leaves(f: &Foliation2, search: &LeafSearch) -> (Vec<CompactLeaf>, Option<LeafFamily>) {
    let mut out = Vec::new();
    for axis in 0..2 {
        let Some((transversal, r)) = first_transverse(f, axis, search.circles) else {
            continue;
        };
        match periodic_points(&r, search.max_period) {
            PeriodicScan::Family([p, k]) => {
                let class = oriented(axis, p, k, r.backward);
                return (Vec::new(), Some(LeafFamily { class, transversal }));
            }
            PeriodicScan::Points(points) => {
                let Ok(sign) = transverse_sign(f, transversal, 64) else {
                    continue;
                };
                for (t, p, k) in points {
                    let start = transversal.point(t);
                    let Ok((_, length)) = follow_to_return(f, transversal, start, sign, p) else {
                        continue;
                    };
                    let class = oriented(axis, p as i64, k, r.backward);
                    out.push(CompactLeaf {
                        point: start,
                        period: length,
                        class,
                        orientation: canonical(class).1,
                        source: LeafSource::Periodic { transversal, period: p },
                    });
                }
            }
        }
    }
    (out, None)
}

/// Lift displacement after one circuit matches the class. Repelling leaves
/// are checked backwards, where they attract.
fn closes(f: &Foliation2, leaf: &CompactLeaf) -> bool {
    [1.0, -1.0].into_iter().any(|s| {
        let Ok(path) = integrate_leaf(f, leaf.point, s * leaf.period) else {
            return false;
        };
        let e = path.end();
        let want = [
            leaf.point[0] + s * leaf.class[0] as f64,
            leaf.point[1] + s * leaf.class[1] as f64,
        ];
        (e[0] - want[0]).hypot(e[1] - want[1]) < CLOSE_TOL
    })
}

fn seg_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    // shift p next to a
    let p = [p[0] - (p[0] - a[0]).round(), p[1] - (p[1] - a[1]).round()];
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - s * d[0]).hypot(p[1] - a[1] - s * d[1])
}

fn same_leaf(f: &Foliation2, a: &CompactLeaf, b: &CompactLeaf) -> bool {
    if a.canonical_class() != b.canonical_class() {
        return false;
    }
    [1.0, -1.0].into_iter().any(|s| {
        integrate_leaf(f, a.point, s * a.period)
            .map(|path| path.points.windows(2).any(|w| seg_distance(b.point, w[0], w[1]) < 1e-5))
            .unwrap_or(false)
    })
}

/// Compact leaves found on axis circles and as periodic orbits of return
/// maps, each re-integrated to confirm closure.
pub fn compact_leaves(f: &Foliation2) -> CompactLeafSet {
    compact_leaves_with(f, &LeafSearch::default())
}

pub fn compact_leaves_with(f: &Foliation2, search: &LeafSearch) -> CompactLeafSet {
    let (periodic, family) = periodic_leaves(f, search);
    if family.is_some() {
        return CompactLeafSet {
            leaves: Vec::new(),
            family,
        };
    }
    let mut leaves: Vec<CompactLeaf> = Vec::new();
    for leaf in axis_leaves(f, search).into_iter().chain(periodic) {
        if !closes(f, &leaf) {
            continue;
        }
        if leaves.iter().any(|l| same_leaf(f, l, &leaf)) {
            continue;
        }
        leaves.push(leaf);
    }
    CompactLeafSet { leaves, family: None }
}

/// Annulus between two adjacent parallel compact leaves of opposite
/// orientation, its interior free of compact leaves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReebAnnulus {
    pub boundary: [CompactLeaf; 2],
    /// Unoriented class of the boundary leaves.
    pub class: [i64; 2],
    /// Transverse positions of the boundary, `band.0 < band.1`, in the
    /// coordinate `q·u − p·v`.
    pub band: (f64, f64),
}

fn transverse_coordinate(class: [i64; 2], p: [f64; 2]) -> f64 {
    class[1] as f64 * p[0] - class[0] as f64 * p[1]
}

/// Range of the transverse coordinate over one circuit.
fn leaf_range(f: &Foliation2, leaf: &CompactLeaf, class: [i64; 2]) -> Option<(f64, f64)> {
    let path = integrate_leaf(f, leaf.point, leaf.period).ok()?;
    let vals = path.points.iter().map(|p| transverse_coordinate(class, *p));
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let shift = lo.floor();
    Some((lo - shift, hi - shift))
}

/// The transverse coordinate is strictly monotone along leaves throughout
/// the open band, so no closed leaf lies inside.
fn band_is_empty(f: &Foliation2, class: [i64; 2], lo: f64, hi: f64) -> bool {
    if hi <= lo {
        return false;
    }
    let n = 128;
    // (a, b) with q·a − p·b = 1 completes the class to a basis
    let (a, b) = bezout(class);
    let mut sign = 0.0;
    for i in 1..n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        for j in 0..n {
            let along = j as f64 / n as f64;
            let p = [
                s * a as f64 + along * class[0] as f64,
                s * b as f64 + along * class[1] as f64,
            ];
            let w = f.unit(p[0], p[1]);
            let d = class[1] as f64 * w[0] - class[0] as f64 * w[1];
            if d.abs() < 1e-9 || (sign != 0.0 && d.signum() != sign) {
                return false;
            }
            sign = d.signum();
        }
    }
    true
}

fn bezout(class: [i64; 2]) -> (i64, i64) {
    // solve q·a − p·b = 1
    let (p, q) = (class[0], class[1]);
    let (mut r0, mut r1, mut s0, mut s1, mut t0, mut t1) = (q, -p, 1i64, 0i64, 0i64, 1i64);
    while r1 != 0 {
        let k = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    // q·s0 + (−p)·t0 = r0 = ±1
    let sgn = r0.signum();
    (sgn * s0, sgn * t0)
}

/// Reeb annuli bounded by the given compact leaves.
pub fn reeb_annuli(f: &Foliation2, set: &CompactLeafSet) -> Vec<ReebAnnulus> {
    let mut classes: Vec<[i64; 2]> = set.leaves.iter().map(|l| l.canonical_class()).collect();
    classes.sort();
    classes.dedup();
    let mut out = Vec::new();
    for class in classes {
        let mut group: Vec<(&CompactLeaf, (f64, f64))> = set
            .leaves
            .iter()
            .filter(|l| l.canonical_class() == class)
            .filter_map(|l| leaf_range(f, l, class).map(|r| (l, r)))
            .collect();
        if group.len() < 2 {
            continue;
        }
        group.sort_by(|x, y| (x.1 .0 + x.1 .1).total_cmp(&(y.1 .0 + y.1 .1)));
        let n = group.len();
        for i in 0..n {
            let (a, ra) = group[i];
            let (b, rb) = group[(i + 1) % n];
            if a.orientation == b.orientation {
                continue;
            }
            let lo = ra.1;
            let hi = if i + 1 < n { rb.0 } else { rb.0 + 1.0 };
            if band_is_empty(f, class, lo, hi) {
                let mid = |r: (f64, f64)| 0.5 * (r.0 + r.1);
                let end = if i + 1 < n { mid(rb) } else { mid(rb) + 1.0 };
                out.push(ReebAnnulus {
                    boundary: [a.clone(), b.clone()],
                    class,
                    band: (mid(ra), end),
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParallelVerdict {
    Parallel,
    NotParallel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelReport {
    pub verdict: ParallelVerdict,
    /// Pairs of oriented classes, one from each foliation, equal up to sign.
    pub witnesses: Vec<([i64; 2], [i64; 2])>,
    /// Some witness pair agrees with orientations.
    pub strictly_parallel: bool,
    /// The verdict flips if orientations must agree.
    pub orientation_sensitive: bool,
    pub leaves_f: CompactLeafSet,
    pub leaves_g: CompactLeafSet,
}

fn check_transverse(f: &Foliation2, g: &Foliation2) -> Result<(), FoliationError> {
    let (at, det) = f.transversality(g, VALIDATION_GRID);
    if det <= 1e-9 {
        return Err(FoliationError::NotTransversePair { at, det });
    }
    Ok(())
}

/// Whether some compact leaf of `f` and some compact leaf of `g` are freely
/// homotopic, classes compared up to sign.
pub fn parallel_compact_leaves(f: &Foliation2, g: &Foliation2) -> Result<ParallelReport, FoliationError> {
    check_transverse(f, g)?;
    let leaves_f = compact_leaves(f);
    let leaves_g = compact_leaves(g);
    let mut witnesses = Vec::new();
    let mut strict = false;
    for a in leaves_f.classes() {
        for b in leaves_g.classes() {
            if a == b || a == [-b[0], -b[1]] {
                strict |= a == b;
                witnesses.push((a, b));
            }
        }
    }
    let verdict = if witnesses.is_empty() {
        ParallelVerdict::NotParallel
    } else {
        ParallelVerdict::Parallel
    };
    Ok(ParallelReport {
        verdict,
        orientation_sensitive: !witnesses.is_empty() && !strict,
        strictly_parallel: strict,
        witnesses,
        leaves_f,
        leaves_g,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeSearch {
    /// Largest denominator and numerator of candidate slopes.
    pub bound: i64,
    pub grid: usize,
}

impl Default for ConeSearch {
    fn default() -> Self {
        ConeSearch { bound: 10, grid: 64 }
    }
}

/// Two constant directions, transverse to both foliations, whose lines
/// separate the direction of `F` from that of `G` everywhere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separation {
    /// Integer direction vectors `(q, p)` of slopes `p/q`.
    pub directions: [[i64; 2]; 2],
    /// `None` for the vertical direction.
    pub slopes: [Option<f64>; 2],
}

fn candidates(bound: i64) -> Vec<[i64; 2]> {
    let mut out = vec![[1, 0], [0, 1]];
    for q in 1..=bound {
        for p in -bound..=bound {
            if p != 0 && gcd(p.abs(), q) == 1 {
                out.push([q, p]);
            }
        }
    }
    out
}

/// Constant sign of `det(h, V)` over the grid, or zero if it changes or
/// comes close to vanishing.
fn side(h: [i64; 2], units: &[[f64; 2]]) -> f64 {
    let n = (h[0] as f64).hypot(h[1] as f64);
    let h = [h[0] as f64 / n, h[1] as f64 / n];
    let mut sign = 0.0;
    for w in units {
        let d = h[0] * w[1] - h[1] * w[0];
        if d.abs() <= 1e-9 || (sign != 0.0 && d.signum() != sign) {
            return 0.0;
        }
        sign = d.signum();
    }
    sign
}

/// Searches constant directions of slope `p/q` with `|p|, q ≤ bound` and
/// the two axes.
pub fn cone_separation(f: &Foliation2, g: &Foliation2, search: &ConeSearch) -> Result<Option<Separation>, FoliationError> {
    check_transverse(f, g)?;
    let n = search.grid.max(2);
    let sample = |fol: &Foliation2| -> Vec<[f64; 2]> {
        (0..n * n)
            .map(|k| fol.unit((k / n) as f64 / n as f64, (k % n) as f64 / n as f64))
            .collect()
    };
    let (uf, ug) = (sample(f), sample(g));
    let mut by_product: [Option<[i64; 2]>; 2] = [None, None];
    for h in candidates(search.bound) {
        let (sf, sg) = (side(h, &uf), side(h, &ug));
        if sf == 0.0 || sg == 0.0 {
            continue;
        }
        let slot = usize::from(sf * sg > 0.0);
        if by_product[slot].is_none() {
            by_product[slot] = Some(h);
        }
        if let [Some(a), Some(b)] = by_product {
            let slope = |d: [i64; 2]| (d[0] != 0).then(|| d[1] as f64 / d[0] as f64);
            let mut directions = [a, b];
            if h == a {
                directions.swap(0, 1);
            }
            return Ok(Some(Separation {
                directions,
                slopes: directions.map(slope),
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::models;

    #[test]
    fn two_reeb_leaves_and_annuli() {
        let f = models::two_reeb();
        let set = compact_leaves(&f);
        assert_eq!(set.leaves.len(), 2, "{:?}", set.leaves);
        let mut found: Vec<(f64, [i64; 2])> = set.leaves.iter().map(|l| (l.point[0], l.class)).collect();
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(found[0].0.abs() < 1e-9 && found[0].1 == [0, 1]);
        assert!((found[1].0 - 0.5).abs() < 1e-9 && found[1].1 == [0, -1]);
        assert_eq!(reeb_annuli(&f, &set).len(), 2);
    }

    #[test]
    fn linear_families_and_irrational_flows() {
        let set = compact_leaves(&Foliation2::constant(1.0, 2.0).unwrap());
        assert_eq!(set.family.as_ref().map(|f| f.class), Some([1, 2]));
        let set = compact_leaves(&Foliation2::constant(1.0, 0.5 * (5f64.sqrt() - 1.0)).unwrap());
        assert!(set.is_empty());
    }

    #[test]
    fn morse_smale_bands_are_not_reeb() {
        let f = models::morse_smale();
        let set = compact_leaves(&f);
        assert_eq!(set.leaves.len(), 2);
        assert!(set.leaves.iter().all(|l| l.class == [0, 1]));
        assert!(reeb_annuli(&f, &set).is_empty());
    }

    #[test]
    fn parallel_verdicts() {
        let h = Foliation2::constant(1.0, 0.0).unwrap();
        let v = Foliation2::constant(0.0, 1.0).unwrap();
        assert_eq!(parallel_compact_leaves(&h, &v).unwrap().verdict, ParallelVerdict::NotParallel);
        let f = models::two_reeb();
        let r = parallel_compact_leaves(&f, &models::two_reeb_partner()).unwrap();
        assert_eq!(r.verdict, ParallelVerdict::Parallel);
        assert!(parallel_compact_leaves(&f, &v).is_err());
    }

    #[test]
    fn bezout_completes_a_basis() {
        for c in [[0, 1], [1, 0], [1, 2], [3, -5], [2, 7]] {
            let (a, b) = bezout(c);
            assert_eq!(c[1] * a - c[0] * b, 1, "{c:?}");
        }
    }

    #[test]
    fn axis_pair_separates_the_cat_map_directions() {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let f = Foliation2::constant(1.0, phi - 1.0).unwrap();
        let g = Foliation2::constant(-1.0, phi).unwrap();
        let s = cone_separation(&f, &g, &ConeSearch::default()).unwrap().unwrap();
        let mut d = s.directions;
        d.sort();
        assert_eq!(d, [[0, 1], [1, 0]]);
    }

    #[test]
    fn near_tangent_pair_needs_finer_slopes() {
        let f = Foliation2::constant(1.0, 0.3334).unwrap();
        let g = Foliation2::constant(1.0, 0.341).unwrap();
        assert!(cone_separation(&f, &g, &ConeSearch { bound: 10, grid: 64 }).unwrap().is_none());
        let s = cone_separation(&f, &g, &ConeSearch { bound: 50, grid: 64 }).unwrap().unwrap();
        let between = s.slopes.iter().flatten().any(|&m| m > 0.3334 && m < 0.341);
        assert!(between);
    }
}
