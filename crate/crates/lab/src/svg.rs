//! Deterministic SVG drawings of deformed checkerboards.

use checkerboard::geometry::{lattice_cells, Domain, Rect};
use checkerboard::kinematics::PiecewiseAffineMap;
use checkerboard::solver::Mesh;
use checkerboard::Vec2;
use std::fmt::Write as _;

/// A closed polygon and whether it is a stiff tile.
#[derive(Clone, Debug, PartialEq)]
pub struct TilePath {
    pub points: Vec<Vec2>,
    pub stiff: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Style {
    /// Pixels per length unit.
    pub scale: f64,
    pub margin: f64,
    pub stiff_fill: String,
    pub stroke: String,
    pub reference_stroke: String,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            scale: 400.0,
            margin: 12.0,
            stiff_fill: "#a0a0a0".into(),
            stroke: "#303030".into(),
            reference_stroke: "#d0d0d0".into(),
        }
    }
}

/// Tiles of `map` on `domain`, as deformed polygons.
pub fn map_tiles(map: &PiecewiseAffineMap, domain: &Rect) -> Vec<TilePath> {
    let Ok(cells) = lattice_cells(&Domain::rect(*domain), map.epsilon) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for k in cells.indices() {
        for t in checkerboard::geometry::Tile::ALL {
            if let Some(points) = map.piece_image(&k, t, domain) {
                out.push(TilePath { points, stiff: t.is_stiff() });
            }
        }
    }
    out
}

/// Undeformed tiles of the lattice on `domain`.
pub fn reference_tiles(partition: checkerboard::geometry::CellPartition, epsilon: f64, domain: &Rect) -> Vec<TilePath> {
    let id = checkerboard::kinematics::rotating_squares_map(
        checkerboard::Rotation::IDENTITY,
        checkerboard::Rotation::IDENTITY,
        partition,
        epsilon,
        Vec2::ZERO,
    );
    map_tiles(&id, domain)
}

/// Tile outlines of a mesh deformation, traced through the boundary nodes of each tile.
pub fn mesh_tiles(mesh: &Mesh, positions: &[Vec2]) -> Vec<TilePath> {
    let r = mesh.resolution;
    let (cx, cy) = (mesh.nx() / (2 * r), mesh.ny() / (2 * r));
    let mut out = Vec::new();
    for c2 in 0..cy {
        for c1 in 0..cx {
            for (dx, dy) in [(0, 0), (0, 1), (1, 1), (1, 0)] {
                let (i0, j0) = (2 * r * c1 + dx * r, 2 * r * c2 + dy * r);
                let (i1, j1) = (i0 + r, j0 + r);
                let mut ring = Vec::with_capacity(4 * r);
                ring.extend((i0..i1).map(|i| (i, j0)));
                ring.extend((j0..j1).map(|j| (i1, j)));
                ring.extend((i0 + 1..=i1).rev().map(|i| (i, j1)));
                ring.extend((j0 + 1..=j1).rev().map(|j| (i0, j)));
                let points = ring.into_iter().map(|(i, j)| positions[mesh.node_index(i, j)]).collect();
                let e = j0 * mesh.nx() + i0;
                out.push(TilePath { points, stiff: mesh.tags[e].is_stiff() });
            }
        }
    }
    out
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// SVG document with the reference tiles as faint outlines underneath the
/// deformed ones; stiff tiles are filled.
pub fn render_svg(tiles: &[TilePath], reference: &[TilePath], style: &Style) -> String {
    let all = tiles.iter().chain(reference).flat_map(|t| t.points.iter());
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in all {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.x.is_finite() {
        lo = Vec2::ZERO;
        hi = Vec2::ZERO;
    }
    let s = style.scale;
    let w = (hi.x - lo.x) * s + 2.0 * style.margin;
    let h = (hi.y - lo.y) * s + 2.0 * style.margin;
    // flip y so the drawing has the usual orientation
    let px = |p: &Vec2| (style.margin + (p.x - lo.x) * s, style.margin + (hi.y - p.y) * s);
    let path = |t: &TilePath| {
        let mut d = String::new();
        for (i, p) in t.points.iter().enumerate() {
            let (x, y) = px(p);
            let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, num(x), num(y));
        }
        d.push('Z');
        d
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !reference.is_empty() {
        let _ = writeln!(out, r#"<g fill="none" stroke="{}" stroke-width="0.8">"#, style.reference_stroke);
        for t in reference {
            let _ = writeln!(out, r#"<path d="{}"/>"#, path(t));
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r#"<g stroke="{}" stroke-width="1" stroke-linejoin="round">"#, style.stroke);
    for t in tiles {
        let fill = if t.stiff { style.stiff_fill.as_str() } else { "none" };
        let _ = writeln!(out, r#"<path d="{}" fill="{}"/>"#, path(t), fill);
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use checkerboard::geometry::CellPartition;
    use checkerboard::kinematics::rotating_squares_map;
    use checkerboard::Rotation;

    fn filled(svg: &str, style: &Style) -> usize {
        svg.matches(&format!(r#"fill="{}""#, style.stiff_fill)).count()
    }

    #[test]
    fn identity_on_three_cells_has_eighteen_grey_squares() {
        let style = Style::default();
        let p = CellPartition::new(0.5).unwrap();
        let tiles = reference_tiles(p, 1.0, &Rect::new(0.0, 0.0, 3.0, 3.0));
        assert_eq!(tiles.len(), 36);
        let svg = render_svg(&tiles, &[], &style);
        assert_eq!(filled(&svg, &style), 18);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn counter_rotated_squares_touch_at_vertices() {
        let p = CellPartition::new(0.5).unwrap();
        let m = rotating_squares_map(Rotation::from_degrees(45.0), Rotation::from_degrees(-45.0), p, 1.0, Vec2::ZERO);
        let tiles = map_tiles(&m, &Rect::new(0.0, 0.0, 2.0, 2.0));
        let stiff: Vec<&TilePath> = tiles.iter().filter(|t| t.stiff).collect();
        assert_eq!(stiff.len(), 8);
        // every stiff square shares at least one image vertex with a differently turned neighbour
        for a in &stiff {
            let touches = stiff.iter().any(|b| {
                !std::ptr::eq(*a, *b) && a.points.iter().any(|p| b.points.iter().any(|q| (*p - *q).norm() < 1e-12))
            });
            assert!(touches);
        }
    }

    #[test]
    fn rendering_is_byte_stable() {
        let p = CellPartition::new(0.4).unwrap();
        let m = rotating_squares_map(Rotation::from_degrees(20.0), Rotation::from_degrees(-10.0), p, 0.5, Vec2::ZERO);
        let d = Rect::new(0.0, 0.0, 1.5, 1.0);
        let a = render_svg(&map_tiles(&m, &d), &reference_tiles(p, 0.5, &d), &Style::default());
        let b = render_svg(&map_tiles(&m, &d), &reference_tiles(p, 0.5, &d), &Style::default());
        assert_eq!(a, b);
        assert!(!a.contains("NaN") && !a.contains('\r'));
    }

    #[test]
    fn mesh_tiles_follow_the_tiling() {
        let mesh = checkerboard::solver::build_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 0.5, 3, 0.5).unwrap();
        let tiles = mesh_tiles(&mesh, &mesh.nodes());
        assert_eq!(tiles.len(), 16);
        assert_eq!(tiles.iter().filter(|t| t.stiff).count(), 8);
        assert!(tiles.iter().all(|t| t.points.len() == 12));
        let area: f64 = tiles.iter().map(|t| checkerboard::polygon::area(&t.points)).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }
}
