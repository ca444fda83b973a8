//! Convex polygon helpers: area, clipping, point tests and exact union area.

use crate::linalg::Vec2;

pub type Polygon = Vec<Vec2>;

pub fn signed_area(p: &[Vec2]) -> f64 {
    let n = p.len();
    let mut a = 0.0;
    for i in 0..n {
        a += p[i].cross(p[(i + 1) % n]);
    }
    0.5 * a
}

pub fn area(p: &[Vec2]) -> f64 {
    signed_area(p).abs()
}

/// Reorders vertices counter-clockwise.
pub fn to_ccw(mut p: Polygon) -> Polygon {
    if signed_area(&p) < 0.0 {
        p.reverse();
    }
    p
}

/// Intersection of two counter-clockwise convex polygons.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Polygon {
    let mut out: Polygon = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let edge = b - a;
        let inside = |q: Vec2| edge.cross(q - a) >= 0.0;
        let input = std::mem::take(&mut out);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let prev = input[(j + n - 1) % n];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    out.push(segment_line_hit(prev, cur, a, edge));
                }
                out.push(cur);
            } else if pi {
                out.push(segment_line_hit(prev, cur, a, edge));
            }
        }
    }
    out
}

fn segment_line_hit(p: Vec2, q: Vec2, a: Vec2, edge: Vec2) -> Vec2 {
    let dp = edge.cross(p - a);
    let dq = edge.cross(q - a);
    let t = dp / (dp - dq);
    p + (q - p) * t
}

pub fn overlap_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let c = clip_convex(a, b);
    if c.len() < 3 {
        0.0
    } else {
        area(&c)
    }
}

pub fn contains_convex(p: &[Vec2], q: Vec2) -> bool {
    let n = p.len();
    (0..n).all(|i| (p[(i + 1) % n] - p[i]).cross(q - p[i]) >= 0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub lo: Vec2,
    pub hi: Vec2,
}

pub fn bounds(p: &[Vec2]) -> Bounds {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in p {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    Bounds { lo, hi }
}

impl Bounds {
    pub fn overlaps(&self, o: &Bounds) -> bool {
        self.lo.x < o.hi.x && o.lo.x < self.hi.x && self.lo.y < o.hi.y && o.lo.y < self.hi.y
    }
}

/// Vertical extent `[ymin, ymax]` of a convex polygon along the line `x = c`.
fn vertical_section(p: &[Vec2], c: f64) -> Option<(f64, f64)> {
    let n = p.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let a = p[i];
        let b = p[(i + 1) % n];
        let (l, r) = if a.x <= b.x { (a, b) } else { (b, a) };
        if c < l.x || c > r.x || r.x == l.x {
            continue;
        }
        let y = l.y + (r.y - l.y) * (c - l.x) / (r.x - l.x);
        lo = lo.min(y);
        hi = hi.max(y);
    }
    (hi > lo).then_some((lo, hi))
}

/// Area of the union of convex polygons, exact up to rounding.
///
/// Sweeps vertical slabs between consecutive event abscissae (vertices and
/// pairwise edge crossings). Inside a slab every section is a trapezoid, so
/// the union length is linear and the midpoint rule is exact.
pub fn union_area(polys: &[Polygon]) -> f64 {
    let polys: Vec<&Polygon> = polys.iter().filter(|p| p.len() >= 3 && area(p) > 0.0).collect();
    if polys.is_empty() {
        return 0.0;
    }
    let bbs: Vec<Bounds> = polys.iter().map(|p| bounds(p)).collect();
    let mut xs: Vec<f64> = polys.iter().flat_map(|p| p.iter().map(|v| v.x)).collect();
    for i in 0..polys.len() {
        for j in (i + 1)..polys.len() {
            if !bbs[i].overlaps(&bbs[j]) {
                continue;
            }
            for (a0, a1) in edges(polys[i]) {
                for (b0, b1) in edges(polys[j]) {
                    if let Some(x) = crossing_x(a0, a1, b0, b1) {
                        xs.push(x);
                    }
                }
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut total = 0.0;
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for w in xs.windows(2) {
        let width = w[1] - w[0];
        if width <= 0.0 {
            continue;
        }
        let c = 0.5 * (w[0] + w[1]);
        spans.clear();
        for (p, b) in polys.iter().zip(&bbs) {
            if c > b.lo.x && c < b.hi.x {
                if let Some(s) = vertical_section(p, c) {
                    spans.push(s);
                }
            }
        }
        total += width * union_length(&mut spans);
    }
    total
}

fn edges(p: &[Vec2]) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
    (0..p.len()).map(move |i| (p[i], p[(i + 1) % p.len()]))
}

fn crossing_x(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Option<f64> {
    let da = a1 - a0;
    let db = b1 - b0;
    let den = da.cross(db);
    if den == 0.0 {
        return None;
    }
    let t = (b0 - a0).cross(db) / den;
    let u = (b0 - a0).cross(da) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(a0.x + t * da.x)
}

fn union_length(spans: &mut [(f64, f64)]) -> f64 {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut len = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(lo, hi) in spans.iter() {
        match cur {
            Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                len += chi - clo;
                cur = Some((lo, hi));
            }
            None => cur = Some((lo, hi)),
        }
    }
    if let Some((clo, chi)) = cur {
        len += chi - clo;
    }
    len
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> Polygon {
        vec![
            Vec2::new(x, y),
            Vec2::new(x + s, y),
            Vec2::new(x + s, y + s),
            Vec2::new(x, y + s),
        ]
    }

    #[test]
    fn clip_squares() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(0.5, 0.25, 1.0);
        assert!((overlap_area(&a, &b) - 0.375).abs() < 1e-15);
        assert_eq!(overlap_area(&a, &square(2.0, 0.0, 1.0)), 0.0);
        assert_eq!(overlap_area(&a, &square(1.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn union_of_overlapping_squares() {
        let u = union_area(&[square(0.0, 0.0, 1.0), square(0.5, 0.25, 1.0)]);
        assert!((u - (2.0 - 0.375)).abs() < 1e-14);
        let tiles: Vec<Polygon> = (0..4)
            .flat_map(|i| (0..4).map(move |j| square(i as f64, j as f64, 1.0)))
            .collect();
        assert!((union_area(&tiles) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn union_with_rotated_square() {
        // a unit square rotated by 45 degrees about the centre of another
        let c = Vec2::new(0.5, 0.5);
        let h = 0.5f64.sqrt();
        let d = vec![
            c + Vec2::new(0.0, -h),
            c + Vec2::new(h, 0.0),
            c + Vec2::new(0.0, h),
            c + Vec2::new(-h, 0.0),
        ];
        let s = square(0.0, 0.0, 1.0);
        let corner = (h - 0.5) * (h - 0.5);
        let expected = 1.0 + 4.0 * corner;
        assert!((union_area(&[s.clone(), d.clone()]) - expected).abs() < 1e-14);
        assert!((overlap_area(&s, &d) - (1.0 - 4.0 * corner)).abs() < 1e-14);
    }

    #[test]
    fn orientation() {
        let mut s = square(0.0, 0.0, 2.0);
        s.reverse();
        assert!(signed_area(&s) < 0.0);
        assert!((signed_area(&to_ccw(s)) - 4.0).abs() < 1e-15);
        assert!(contains_convex(&square(0.0, 0.0, 1.0), Vec2::new(0.5, 0.5)));
        assert!(!contains_convex(&square(0.0, 0.0, 1.0), Vec2::new(1.5, 0.5)));
    }
}
