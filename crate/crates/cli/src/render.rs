//! Plain SVG pictures of torus foliations. Output depends only on the
//! inputs: fixed seeds, fixed float formatting, no timestamps.

use std::fmt::Write;

use allab_core::foliation::{integrate_leaf, CompactLeafSet, Foliation2, FoliationError};

use crate::config::RenderSpec;

const MARGIN: f64 = 24.0;
/// Keep every n-th integrator point.
const DECIMATE: usize = 4;

fn wrap(x: f64) -> f64 {
    x - x.floor()
}

/// Splits a path of the universal cover into pieces inside the unit square.
fn wrapped_pieces(points: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let mut pieces = Vec::new();
    let mut current: Vec<[f64; 2]> = Vec::new();
    let mut cell = [f64::NAN; 2];
    for (i, p) in points.iter().enumerate() {
        if i % DECIMATE != 0 && i + 1 != points.len() {
            continue;
        }
        let c = [p[0].floor(), p[1].floor()];
        if c != cell && !current.is_empty() {
            pieces.push(std::mem::take(&mut current));
        }
        cell = c;
        current.push([wrap(p[0]), wrap(p[1])]);
    }
    if current.len() > 1 {
        pieces.push(current);
    }
    pieces.retain(|p| p.len() > 1);
    pieces
}

struct Canvas {
    size: f64,
    body: String,
}

impl Canvas {
    fn xy(&self, p: [f64; 2]) -> (f64, f64) {
        let s = self.size - 2.0 * MARGIN;
        (MARGIN + p[0] * s, self.size - MARGIN - p[1] * s)
    }

    fn polyline(&mut self, pts: &[[f64; 2]], class: &str) {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.xy(*p);
            if i > 0 {
                d.push(' ');
            }
            let _ = write!(d, "{x:.2},{y:.2}");
        }
        let _ = writeln!(self.body, r#"<polyline class="{class}" points="{d}"/>"#);
    }

    fn arrow(&mut self, at: [f64; 2], dir: [f64; 2]) {
        let (x, y) = self.xy(at);
        let n = dir[0].hypot(dir[1]);
        let (dx, dy) = (dir[0] / n, -dir[1] / n);
        let len = 8.0;
        let tip = (x + dx * len * 0.5, y + dy * len * 0.5);
        let back = (x - dx * len * 0.5, y - dy * len * 0.5);
        let side = (-dy * len * 0.35, dx * len * 0.35);
        let _ = writeln!(
            self.body,
            r#"<polygon class="arrow" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
            tip.0,
            tip.1,
            back.0 + side.0,
            back.1 + side.1,
            back.0 - side.0,
            back.1 - side.1
        );
    }
}

/// SVG document with seeded leaves, the compact leaves in bold and
/// orientation arrows.
pub fn render_foliation(
    f: &Foliation2,
    leaves: &CompactLeafSet,
    style: &RenderSpec,
    title: &str,
) -> Result<String, FoliationError> {
    let size = style.size as f64;
    let mut c = Canvas {
        size,
        body: String::new(),
    };
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for k in 0..style.seeds {
        let start = [(k as f64 + 0.5) / style.seeds as f64, wrap(0.5 + k as f64 * golden)];
        let path = integrate_leaf(f, start, style.length)?;
        for piece in wrapped_pieces(&path.points) {
            c.polyline(&piece, "leaf");
        }
        let mid = path.points[path.points.len() / 2];
        c.arrow([wrap(mid[0]), wrap(mid[1])], f.unit(mid[0], mid[1]));
    }
    for leaf in &leaves.leaves {
        let path = integrate_leaf(f, leaf.point, leaf.period.max(1e-3))?;
        for piece in wrapped_pieces(&path.points) {
            c.polyline(&piece, "compact");
        }
    }
    let s = size - 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str(
        "<style>.frame{fill:none;stroke:#000;stroke-width:1}.leaf{fill:none;stroke:#4a6fa5;stroke-width:0.8}\
         .compact{fill:none;stroke:#c0392b;stroke-width:2.4}.arrow{fill:#4a6fa5}</style>\n",
    );
    let _ = writeln!(out, r#"<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{s}" height="{s}"/>"#);
    out.push_str(&c.body);
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_foliation_gives_straight_segments() {
        let f = Foliation2::constant(1.0, 0.0).unwrap();
        let style = RenderSpec {
            seeds: 3,
            length: 1.0,
            size: 100,
        };
        let svg = render_foliation(&f, &CompactLeafSet::default(), &style, "flat").unwrap();
        for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
            let ys: Vec<&str> = line
                .split('"')
                .nth(3)
                .unwrap()
                .split(' ')
                .map(|p| p.split(',').nth(1).unwrap())
                .collect();
            assert!(ys.iter().all(|y| *y == ys[0]));
        }
        assert_eq!(svg, render_foliation(&f, &CompactLeafSet::default(), &style, "flat").unwrap());
    }

    #[test]
    fn pieces_break_at_the_boundary() {
        let pts: Vec<[f64; 2]> = (0..=40).map(|i| [0.9 + i as f64 * 0.005, 0.5]).collect();
        let pieces = wrapped_pieces(&pts);
        assert_eq!(pieces.len(), 2);
        assert!(pieces[1].iter().all(|p| p[0] < 0.2));
    }
}
