//! Rotating-squares kinematics on the checkerboard.

use crate::error::{check_positive, Error, Result};
use crate::geometry::{lattice_cells, tile_at, CellPartition, Domain, LatticeIndex, Rect, Tile};
use crate::linalg::{Mat2, Rotation, Vec2};
use crate::polygon::{self, Polygon};
use serde::{Deserialize, Serialize};

/// Periodic piecewise-affine map on the ε-checkerboard.
///
/// On tile `t` of cell `k`, with `x` measured from the cell corner `εk`:
/// `v(εk + x) = translation + ε·drift·k + G_t x + ε·offset_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffineMap {
    pub partition: CellPartition,
    pub epsilon: f64,
    pub gradients: [Mat2; 4],
    pub offsets: [Vec2; 4],
    pub drift: Mat2,
    pub translation: Vec2,
    /// Generating rotations `(S, R)` when built by [`rotating_squares_map`].
    pub generators: Option<(Rotation, Rotation)>,
    /// False for maps with jumps across tile edges.
    pub continuous: bool,
}

impl PiecewiseAffineMap {
    pub fn gradient(&self, tile: Tile) -> Mat2 {
        self.gradients[tile.index()]
    }

    /// Evaluates the affine piece of `(k, tile)` at `p`, also outside that tile.
    pub fn eval_piece(&self, k: &LatticeIndex, tile: Tile, p: Vec2) -> Vec2 {
        let i = tile.index();
        let (k1, k2) = (k.k.0 as f64, k.k.1 as f64);
        let x = p - k.origin();
        self.translation
            + self.drift * Vec2::new(k1, k2) * self.epsilon
            + self.gradients[i] * x
            + self.offsets[i] * self.epsilon
    }

    pub fn eval(&self, p: Vec2) -> Vec2 {
        let (k, t) = tile_at(&self.partition, p, self.epsilon);
        let k = LatticeIndex::new(k.k.0, k.k.1, self.epsilon);
        self.eval_piece(&k, t, p)
    }

    /// Image of the tile `(k, tile)` clipped to `clip`, as a polygon.
    pub fn piece_image(&self, k: &LatticeIndex, tile: Tile, clip: &Rect) -> Option<Polygon> {
        let r = k.tile_rect(&self.partition, tile).intersection(clip);
        if r.is_empty() {
            return None;
        }
        Some(r.corners().iter().map(|&c| self.eval_piece(k, tile, c)).collect())
    }

    /// Area-weighted average of the tile gradients over one period.
    pub fn mean_gradient(&self) -> Mat2 {
        Tile::ALL.iter().fold(Mat2::ZERO, |acc, &t| {
            acc + self.gradients[t.index()] * self.partition.tile_rect(t).area()
        })
    }

    /// Same map on a lattice of period `epsilon`.
    pub fn rescaled(&self, epsilon: f64) -> Self {
        PiecewiseAffineMap {
            epsilon,
            ..self.clone()
        }
    }
}

/// Rotating-squares map: `S` on `Y1`, `R` on `Y3`, soft tiles interpolate.
pub fn rotating_squares_map(
    s: Rotation,
    r: Rotation,
    partition: CellPartition,
    epsilon: f64,
    translation: Vec2,
) -> PiecewiseAffineMap {
    let l = partition.lambda();
    let (sm, rm) = (s.matrix(), r.matrix());
    let d = sm - rm;
    let g2 = Mat2::from_cols(s.e1(), r.e2());
    let g4 = Mat2::from_cols(r.e1(), s.e2());
    let offsets = [
        Vec2::ZERO,
        d * Vec2::new(0.0, l),
        d * Vec2::new(l, l),
        d * Vec2::new(l, 0.0),
    ];
    PiecewiseAffineMap {
        partition,
        epsilon,
        gradients: [sm, g2, rm, g4],
        offsets,
        drift: sm * l + rm * (1.0 - l),
        translation,
        generators: Some((s, r)),
        continuous: true,
    }
}

/// Weak limit of the oscillating map: the period average of the gradient.
pub fn periodic_limit_gradient(map: &PiecewiseAffineMap) -> Mat2 {
    map.mean_gradient()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu <= 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name: "mu",
            value: mu,
            expected: "(0, 1]",
        })
    }
}

fn rotation_from_combination(m: Mat2) -> Result<Rotation> {
    let c = m.col1();
    if (c.norm() - 1.0).abs() > 1e-9 || (m - Rotation::from_first_column(c).matrix()).max_abs() > 1e-9 {
        return Err(Error::Inconsistent(format!("reflection branch is not a rotation: {m:?}")));
    }
    Ok(Rotation::from_first_column(c))
}

const BRANCH_EPS: f64 = 1e-14;

/// Rotation of the edge opposite to the reference edge in the reflected hook.
pub fn reflection_branch_f(r: Rotation, s: Rotation, mu: f64, sign: Sign) -> Result<Rotation> {
    check_mu(mu)?;
    let sp = s.e1().dot(r.e2());
    let pm = sign.value();
    let den = 1.0 + mu * mu + pm * 2.0 * mu * sp;
    if den.abs() < BRANCH_EPS {
        return Err(Error::BranchDegenerate { denominator: den });
    }
    let m = r.perp().matrix() * ((pm * 2.0 * mu + 2.0 * mu * mu * sp) / den)
        + s.matrix() * ((1.0 - mu * mu) / den);
    rotation_from_combination(m)
}

/// Companion of [`reflection_branch_f`] for the edge opposite `S`.
pub fn reflection_branch_g(r: Rotation, s: Rotation, mu: f64, sign: Sign) -> Result<Rotation> {
    check_mu(mu)?;
    let sp = s.e1().dot(r.e2());
    let pm = sign.value();
    let den = 1.0 + mu * mu - pm * 2.0 * mu * sp;
    if den.abs() < BRANCH_EPS {
        return Err(Error::BranchDegenerate { denominator: den });
    }
    let m = s.perp().matrix() * ((pm * 2.0 * mu - 2.0 * sp) / den) - r.matrix() * ((1.0 - mu * mu) / den);
    rotation_from_combination(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: Rotation,
    pub translation: Vec2,
}

impl RigidMotion {
    pub fn new(rotation: Rotation, translation: Vec2) -> Self {
        RigidMotion { rotation, translation }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        self.rotation.apply(p) + self.translation
    }
}

/// Corners of `(0,1) x (0,mu)` in edge order: the edge `i` runs from
/// `corner[i]` to `corner[i+1]`. Edges: left, top, right, bottom.
fn soft_corners(mu: f64) -> [Vec2; 4] {
    [
        Vec2::new(0.0, 0.0),
        Vec2::new(0.0, mu),
        Vec2::new(1.0, mu),
        Vec2::new(1.0, 0.0),
    ]
}

/// Builds edge motions of `(0,1)x(0,mu)` from edge rotations (left, top,
/// right, bottom), chaining translations around the boundary from the
/// lower-left corner, which maps to `base`.
pub fn chain_boundary_motions(rotations: [Rotation; 4], mu: f64, base: Vec2) -> [RigidMotion; 4] {
    let c = soft_corners(mu);
    let mut out = [RigidMotion::new(Rotation::IDENTITY, Vec2::ZERO); 4];
    let mut anchor = base;
    for i in 0..4 {
        let q = rotations[i];
        out[i] = RigidMotion::new(q, anchor - q.apply(c[i]));
        anchor = out[i].apply(c[(i + 1) % 4]);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCase {
    /// Boundary image is a (possibly rotated) parallelogram.
    Parallelogram,
    /// Degenerate parallelogram: the image is a segment of full length.
    LineFull,
    /// Hook with two arms, or the reflected configuration when `mu < 1`.
    HookOrReflected,
    /// Both hook configurations at once: a short segment.
    LineShort,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub case: BoundaryCase,
    pub r: Rotation,
    pub s: Rotation,
    pub branch: Option<Sign>,
}

pub const TRACE_TOL: f64 = 1e-9;

/// Classifies rigid boundary data on the four edges of a soft rectangle
/// `(0,1) x (0,mu)`. Motions are given for the left, top, right and bottom
/// edges.
pub fn classify_soft_boundary(motions: &[RigidMotion; 4], mu: f64) -> Result<BoundaryClass> {
    check_mu(mu)?;
    let c = soft_corners(mu);
    let mut mismatch: f64 = 0.0;
    for i in 0..4 {
        let p = c[(i + 1) % 4];
        mismatch = mismatch.max((motions[i].apply(p) - motions[(i + 1) % 4].apply(p)).norm());
    }
    if mismatch > TRACE_TOL {
        return Err(Error::InvalidTrace { mismatch });
    }
    let [r1, r2, r3, r4] = motions.map(|m| m.rotation);
    let close = |a: Rotation, b: Rotation| a.distance(b) <= TRACE_TOL;

    if close(r1, r3) && close(r2, r4) {
        let sp = r2.e1().dot(r1.e1());
        let case = if sp.abs() > TRACE_TOL {
            BoundaryCase::Parallelogram
        } else {
            BoundaryCase::LineFull
        };
        return Ok(BoundaryClass {
            case,
            r: r1,
            s: r2,
            branch: None,
        });
    }

    let (case_a, case_b) = if mu == 1.0 {
        (
            close(r4, r1.perp()) && close(r3, r2.perp().negated()),
            close(r2, r1.perp().negated()) && close(r3, r4.perp()),
        )
    } else {
        let a = reflection_branch_f(r1, r2, mu, Sign::Plus)
            .and_then(|f| Ok((f, reflection_branch_g(r1, r2, mu, Sign::Minus)?)))
            .map(|(f, g)| close(r4, f) && close(r3, g))
            .unwrap_or(false);
        let b = reflection_branch_f(r1, r4, mu, Sign::Minus)
            .and_then(|f| Ok((f, reflection_branch_g(r1, r4, mu, Sign::Plus)?)))
            .map(|(f, g)| close(r2, f) && close(r3, g))
            .unwrap_or(false);
        (a, b)
    };
    // for mu < 1 the two reflected patterns describe the same configurations
    match (case_a, case_b) {
        (true, true) if mu == 1.0 => Ok(BoundaryClass {
            case: BoundaryCase::LineShort,
            r: r1,
            s: r2,
            branch: None,
        }),
        (true, _) => Ok(BoundaryClass {
            case: BoundaryCase::HookOrReflected,
            r: r1,
            s: r2,
            branch: Some(Sign::Plus),
        }),
        (false, true) => Ok(BoundaryClass {
            case: BoundaryCase::HookOrReflected,
            r: r1,
            s: r4,
            branch: Some(Sign::Minus),
        }),
        (false, false) => Err(Error::UnclassifiedTrace),
    }
}

/// Determinants at or below this count as degenerate.
pub const ORIENTATION_TOL: f64 = 1e-12;

/// True iff every tile gradient has positive determinant.
pub fn check_orientation(map: &PiecewiseAffineMap) -> bool {
    map.gradients.iter().all(|g| g.det() > ORIENTATION_TOL)
}

/// An affine map `x -> gradient x + offset` restricted to a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub domain: Rect,
    pub gradient: Mat2,
    pub offset: Vec2,
}

impl AffinePiece {
    pub fn eval(&self, p: Vec2) -> Vec2 {
        self.gradient * p + self.offset
    }

    pub fn image(&self) -> Polygon {
        self.domain.corners().iter().map(|&c| self.eval(c)).collect()
    }

    pub fn det_integral(&self) -> f64 {
        self.gradient.det().abs() * self.domain.area()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    /// Decided by exact polygon geometry.
    pub pass: bool,
    /// `∫|det ∇u| - |u(Ω)|`, zero for injective maps.
    pub deficit: f64,
    pub det_integral: f64,
    pub image_area: f64,
    /// Sum of pairwise overlap areas of piece images.
    pub pairwise_overlap: f64,
    /// Grid estimate of `|u(Ω)|`.
    pub sampled_image_area: f64,
    pub sampled_tolerance: f64,
    pub sampled_pass: bool,
}

/// Ciarlet-Nečas test on a family of affine pieces with disjoint domains.
pub fn injectivity_of_pieces(pieces: &[AffinePiece], sample_density: f64) -> Result<InjectivityReport> {
    check_positive("sample_density", sample_density)?;
    let det_integral: f64 = pieces.iter().map(AffinePiece::det_integral).sum();
    let images: Vec<Polygon> = pieces
        .iter()
        .filter(|p| p.gradient.det() != 0.0 && !p.domain.is_empty())
        .map(|p| polygon::to_ccw(p.image()))
        .collect();
    let image_area = polygon::union_area(&images);
    let bbs: Vec<_> = images.iter().map(|p| polygon::bounds(p)).collect();
    let mut pairwise_overlap = 0.0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            if bbs[i].overlaps(&bbs[j]) {
                pairwise_overlap += polygon::overlap_area(&images[i], &images[j]);
            }
        }
    }
    let deficit = (det_integral - image_area).max(0.0);
    let tol = 1e-9 * det_integral.max(1.0);

    let (sampled_image_area, sampled_tolerance) = sample_image_area(&images, &bbs, sample_density);
    Ok(InjectivityReport {
        pass: deficit <= tol && pairwise_overlap <= tol,
        deficit,
        det_integral,
        image_area,
        pairwise_overlap,
        sampled_image_area,
        sampled_tolerance,
        sampled_pass: det_integral <= sampled_image_area + sampled_tolerance,
    })
}

fn sample_image_area(images: &[Polygon], bbs: &[polygon::Bounds], density: f64) -> (f64, f64) {
    if images.is_empty() {
        return (0.0, 0.0);
    }
    let lo = bbs.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |a, b| {
        Vec2::new(a.x.min(b.lo.x), a.y.min(b.lo.y))
    });
    let hi = bbs.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |a, b| {
        Vec2::new(a.x.max(b.hi.x), a.y.max(b.hi.y))
    });
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let box_area = w * h;
    let n = ((density * box_area).sqrt().ceil() as usize).clamp(8, 4000);
    let mut hits = 0usize;
    for i in 0..n {
        for j in 0..n {
            let q = Vec2::new(lo.x + w * (i as f64 + 0.5) / n as f64, lo.y + h * (j as f64 + 0.5) / n as f64);
            let inside = images.iter().zip(bbs).any(|(p, b)| {
                q.x >= b.lo.x && q.x <= b.hi.x && q.y >= b.lo.y && q.y <= b.hi.y && polygon::contains_convex(p, q)
            });
            hits += inside as usize;
        }
    }
    let cell = box_area / (n * n) as f64;
    let perimeter: f64 = bbs.iter().map(|b| 2.0 * ((b.hi.x - b.lo.x) + (b.hi.y - b.lo.y))).sum();
    // midpoint sampling misclassifies at most a band of one sample spacing along every edge
    let spacing = (w / n as f64).max(h / n as f64);
    (hits as f64 * cell, perimeter * spacing)
}

/// Affine pieces of `map` on all tiles meeting `domain`, clipped to it.
pub fn map_pieces(map: &PiecewiseAffineMap, domain: &Domain) -> Result<Vec<AffinePiece>> {
    let cells = lattice_cells(domain, map.epsilon)?;
    let mut out = Vec::new();
    for k in cells.indices() {
        for t in Tile::ALL {
            let tr = k.tile_rect(&map.partition, t);
            for d in &domain.rects {
                let r = tr.intersection(d);
                if r.is_empty() {
                    continue;
                }
                let g = map.gradient(t);
                let offset = map.eval_piece(&k, t, Vec2::ZERO);
                out.push(AffinePiece {
                    domain: r,
                    gradient: g,
                    offset,
                });
            }
        }
    }
    Ok(out)
}

/// Ciarlet-Nečas condition for a piecewise-affine map on `domain` (disjoint rectangles).
pub fn check_ciarlet_necas(map: &PiecewiseAffineMap, domain: &Domain, sample_density: f64) -> Result<InjectivityReport> {
    injectivity_of_pieces(&map_pieces(map, domain)?, sample_density)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrocrackMap {
    pub map: PiecewiseAffineMap,
    pub mean_gradient: Mat2,
}

/// Cracked construction: stiff squares are translated copies (`x - k + Fk`
/// on cell `k`), soft tiles get the affine fill whose gradient is the
/// boundary average of the stiff traces around them.
pub fn microcrack_map(f: Mat2, partition: CellPartition) -> MicrocrackMap {
    let mut map = PiecewiseAffineMap {
        partition,
        epsilon: 1.0,
        gradients: [Mat2::IDENTITY; 4],
        offsets: [Vec2::ZERO; 4],
        drift: f,
        translation: Vec2::ZERO,
        generators: None,
        continuous: f == Mat2::IDENTITY,
    };
    for t in [Tile::Y2, Tile::Y4] {
        let rect = partition.tile_rect(t);
        let c = rect.corners();
        let mut flux = Mat2::ZERO;
        let mut trace_mean = Vec2::ZERO;
        let mut perimeter = 0.0;
        let mut midpoint_mean = Vec2::ZERO;
        for i in 0..4 {
            let (a, b) = (c[i], c[(i + 1) % 4]);
            let len = (b - a).norm();
            let normal = (b - a).perp().normalized() * -1.0;
            let m = (a + b) * 0.5;
            let (k, nt) = tile_at(&partition, m + normal * 1e-9, 1.0);
            debug_assert!(nt.is_stiff());
            let v = map.eval_piece(&k, nt, m);
            flux += v.outer(normal) * len;
            trace_mean += v * len;
            midpoint_mean += m * len;
            perimeter += len;
        }
        let g = flux * (1.0 / rect.area());
        map.gradients[t.index()] = g;
        // home cell, unit period: the piece is x -> g x + offset
        map.offsets[t.index()] = (trace_mean - g * midpoint_mean) * (1.0 / perimeter);
    }
    let mean_gradient = map.mean_gradient();
    MicrocrackMap { map, mean_gradient }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn part(l: f64) -> CellPartition {
        CellPartition::new(l).unwrap()
    }

    #[test]
    fn identity_map() {
        let t = Vec2::new(0.3, -0.2);
        let m = rotating_squares_map(Rotation::IDENTITY, Rotation::IDENTITY, part(0.4), 0.25, t);
        for p in [Vec2::new(0.1, 0.9), Vec2::new(-3.3, 2.05), Vec2::new(0.25, 0.5)] {
            assert!((m.eval(p) - (p + t)).norm() < 1e-14);
        }
        assert!(check_orientation(&m));
    }

    #[test]
    fn mean_gradient_examples() {
        let s = Rotation::from_degrees(45.0);
        let r = Rotation::from_degrees(-45.0);
        let m = rotating_squares_map(s, r, part(0.5), 1.0, Vec2::ZERO);
        let g = periodic_limit_gradient(&m);
        assert!((g - Mat2::scalar(0.5f64.sqrt())).max_abs() < 1e-15);
        assert!(!check_orientation(&m));

        let m = rotating_squares_map(Rotation::from_degrees(90.0), Rotation::IDENTITY, part(0.3), 1.0, Vec2::ZERO);
        let g = periodic_limit_gradient(&m);
        assert!((g - Mat2::new(0.7, -0.3, 0.3, 0.7)).max_abs() < 1e-15);
    }

    #[test]
    fn degenerate_soft_tile() {
        let m = rotating_squares_map(Rotation::from_degrees(90.0), Rotation::IDENTITY, part(0.5), 1.0, Vec2::ZERO);
        let g2 = m.gradient(Tile::Y2);
        assert!((g2 - Mat2::new(0.0, 0.0, 1.0, 1.0)).max_abs() < 1e-15);
        assert!(g2.det().abs() < 1e-15);
    }

    #[test]
    fn orientation_examples() {
        let m = rotating_squares_map(Rotation::from_degrees(30.0), Rotation::from_degrees(-30.0), part(0.5), 1.0, Vec2::ZERO);
        assert!(check_orientation(&m));
        assert!((m.gradient(Tile::Y2).det() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn branch_examples() {
        let f = reflection_branch_f(Rotation::IDENTITY, Rotation::IDENTITY, 0.5, Sign::Plus).unwrap();
        assert!((f.matrix() - Mat2::new(0.6, -0.8, 0.8, 0.6)).max_abs() < 1e-15);
        assert!((f.angle().to_degrees() - 53.130_102_354_155_98).abs() < 1e-9);
        let r = Rotation::from_degrees(20.0);
        let s = Rotation::from_degrees(-70.0);
        // S e1 . R e2 = sin(-90) = -1 makes the plus denominator vanish at mu = 1
        assert!(matches!(
            reflection_branch_f(r, s, 1.0, Sign::Plus),
            Err(Error::BranchDegenerate { .. })
        ));
        assert!(reflection_branch_f(r, s, 1.0, Sign::Minus).is_ok());
        assert!(reflection_branch_f(r, s, 1.5, Sign::Minus).is_err());
    }

    #[test]
    fn classify_examples() {
        let id = [RigidMotion::new(Rotation::IDENTITY, Vec2::ZERO); 4];
        let c = classify_soft_boundary(&id, 1.0).unwrap();
        assert_eq!(c.case, BoundaryCase::Parallelogram);
        assert_eq!(c.r, Rotation::IDENTITY);

        let a = Rotation::from_degrees(10.0);
        let b = Rotation::from_degrees(70.0);
        let m = chain_boundary_motions([a, b, a, b], 0.6, Vec2::new(1.0, 2.0));
        let c = classify_soft_boundary(&m, 0.6).unwrap();
        assert_eq!(c.case, BoundaryCase::Parallelogram);
        assert!(c.s.distance(b) < 1e-12 && c.r.distance(a) < 1e-12);

        // hook at mu = 1: R4 e1 = R1 e2 and R3 e2 = R2 e1
        let r1 = Rotation::IDENTITY;
        let r2 = Rotation::from_degrees(30.0);
        let m = chain_boundary_motions([r1, r2, r2.perp().negated(), r1.perp()], 1.0, Vec2::ZERO);
        let c = classify_soft_boundary(&m, 1.0).unwrap();
        assert_eq!(c.case, BoundaryCase::HookOrReflected);
        assert_eq!(c.branch, Some(Sign::Plus));

        // straight line: S perpendicular to R in the parallelogram pattern
        let q = Rotation::from_degrees(90.0);
        let m = chain_boundary_motions([r1, q, r1, q], 1.0, Vec2::ZERO);
        assert_eq!(classify_soft_boundary(&m, 1.0).unwrap().case, BoundaryCase::LineFull);

        let mut bad = chain_boundary_motions([a, b, a, b], 1.0, Vec2::ZERO);
        bad[2].translation += Vec2::new(1e-6, 0.0);
        assert!(matches!(classify_soft_boundary(&bad, 1.0), Err(Error::InvalidTrace { .. })));
    }

    #[test]
    fn classify_reflected_branches() {
        let mu = 0.7;
        let r = Rotation::from_degrees(12.0);
        let s = Rotation::from_degrees(-41.0);
        let f = reflection_branch_f(r, s, mu, Sign::Plus).unwrap();
        let g = reflection_branch_g(r, s, mu, Sign::Minus).unwrap();
        let m = chain_boundary_motions([r, s, g, f], mu, Vec2::ZERO);
        let c = classify_soft_boundary(&m, mu).unwrap();
        assert_eq!((c.case, c.branch), (BoundaryCase::HookOrReflected, Some(Sign::Plus)));

        let f = reflection_branch_f(r, s, mu, Sign::Minus).unwrap();
        let g = reflection_branch_g(r, s, mu, Sign::Plus).unwrap();
        let rots = [r, f, g, s];
        let m = chain_boundary_motions(rots, mu, Vec2::ZERO);
        let c = classify_soft_boundary(&m, mu).unwrap();
        assert_eq!(c.case, BoundaryCase::HookOrReflected);
        // the reported generators and branch rebuild the boundary rotations
        let rebuilt = match c.branch.unwrap() {
            Sign::Plus => [
                c.r,
                c.s,
                reflection_branch_g(c.r, c.s, mu, Sign::Minus).unwrap(),
                reflection_branch_f(c.r, c.s, mu, Sign::Plus).unwrap(),
            ],
            Sign::Minus => [
                c.r,
                reflection_branch_f(c.r, c.s, mu, Sign::Minus).unwrap(),
                reflection_branch_g(c.r, c.s, mu, Sign::Plus).unwrap(),
                c.s,
            ],
        };
        for (a, b) in rebuilt.iter().zip(rots.iter()) {
            assert!(a.distance(*b) < 1e-12);
        }
    }

    #[test]
    fn short_line_at_unit_ratio() {
        // both hook patterns at once: R2 = -R1^perp, R4 = R1^perp, R3 = -R2^perp = R1 rotated by pi
        let r1 = Rotation::from_degrees(25.0);
        let r2 = r1.perp().negated();
        let r4 = r1.perp();
        let r3 = r2.perp().negated();
        let m = chain_boundary_motions([r1, r2, r3, r4], 1.0, Vec2::ZERO);
        let c = classify_soft_boundary(&m, 1.0).unwrap();
        assert_eq!(c.case, BoundaryCase::LineShort);
    }

    #[test]
    fn injectivity_examples() {
        let id = rotating_squares_map(Rotation::IDENTITY, Rotation::IDENTITY, part(0.5), 0.2, Vec2::ZERO);
        let rep = check_ciarlet_necas(&id, &Domain::unit_square(), 1e4).unwrap();
        assert!(rep.pass && rep.sampled_pass);
        assert!(rep.deficit < 1e-12);
        assert!((rep.det_integral - 1.0).abs() < 1e-12);

        let m = rotating_squares_map(Rotation::from_degrees(30.0), Rotation::from_degrees(-30.0), part(0.5), 0.2, Vec2::ZERO);
        let rep = check_ciarlet_necas(&m, &Domain::unit_square(), 1e4).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.pairwise_overlap < 1e-12);
    }

    #[test]
    fn microcrack_examples() {
        let p = part(0.5);
        let m = microcrack_map(Mat2::IDENTITY, p);
        assert!((m.mean_gradient - Mat2::IDENTITY).max_abs() < 1e-15);
        for q in [Vec2::new(0.3, 0.7), Vec2::new(1.9, -0.4)] {
            assert!((m.map.eval(q) - q).norm() < 1e-14);
        }
        let m = microcrack_map(Mat2::scalar(2.0), p);
        assert!((m.mean_gradient - Mat2::scalar(2.0)).max_abs() < 1e-14);
        assert_eq!(m.map.gradient(Tile::Y1), Mat2::IDENTITY);
        let m = microcrack_map(Mat2::ZERO, p);
        assert!(m.mean_gradient.max_abs() < 1e-15);
        assert_eq!(m.map.gradient(Tile::Y3), Mat2::IDENTITY);
    }

    #[test]
    fn microcrack_stiff_pieces_are_shifted_copies() {
        let f = Mat2::new(1.3, 0.2, -0.1, 0.7);
        let p = part(0.35);
        let m = microcrack_map(f, p);
        for (k1, k2) in [(0, 0), (2, -1), (-3, 4)] {
            let k = LatticeIndex::new(k1, k2, 1.0);
            let kv = Vec2::new(k1 as f64, k2 as f64);
            for t in [Tile::Y1, Tile::Y3] {
                let x = k.tile_rect(&p, t).center();
                assert!((m.map.eval(x) - (x - kv + f * kv)).norm() < 1e-13);
            }
        }
    }

    fn edge_points(map: &PiecewiseAffineMap, k: LatticeIndex) -> Vec<(Vec2, (LatticeIndex, Tile), (LatticeIndex, Tile))> {
        // pairs of pieces that share an edge, with a point on that edge
        let l = map.partition.lambda();
        let e = map.epsilon;
        let o = k.origin();
        let mut out = vec![];
        for s in [0.1, 0.5, 0.9] {
            out.push((o + Vec2::new(s * l, l) * e, (k, Tile::Y1), (k, Tile::Y2)));
            out.push((o + Vec2::new(l, s * l) * e, (k, Tile::Y1), (k, Tile::Y4)));
            out.push((o + Vec2::new(l, l + s * (1.0 - l)) * e, (k, Tile::Y2), (k, Tile::Y3)));
            out.push((o + Vec2::new(l + s * (1.0 - l), l) * e, (k, Tile::Y4), (k, Tile::Y3)));
            out.push((o + Vec2::new(l + s * (1.0 - l), 1.0) * e, (k, Tile::Y3), (k.shifted(0, 1), Tile::Y4)));
            out.push((o + Vec2::new(s * l, 1.0) * e, (k, Tile::Y2), (k.shifted(0, 1), Tile::Y1)));
            out.push((o + Vec2::new(1.0, s * l) * e, (k, Tile::Y4), (k.shifted(1, 0), Tile::Y1)));
            out.push((o + Vec2::new(1.0, l + s * (1.0 - l)) * e, (k, Tile::Y3), (k.shifted(1, 0), Tile::Y2)));
        }
        out
    }

    proptest! {
        #[test]
        fn continuity_across_edges(ts in -PI..PI, tr in -PI..PI, l in 0.1f64..0.9, eps in 0.05f64..2.0, k1 in -5i64..5, k2 in -5i64..5) {
            let m = rotating_squares_map(Rotation::from_angle(ts), Rotation::from_angle(tr), part(l), eps, Vec2::new(0.3, 0.1));
            for (p, (ka, ta), (kb, tb)) in edge_points(&m, LatticeIndex::new(k1, k2, eps)) {
                let d = (m.eval_piece(&ka, ta, p) - m.eval_piece(&kb, tb, p)).norm();
                prop_assert!(d < 1e-12, "jump {d} at {p:?}");
            }
        }

        #[test]
        fn gradients_by_finite_differences(ts in -PI..PI, tr in -PI..PI, l in 0.2f64..0.8, eps in 0.5f64..2.0) {
            let s = Rotation::from_angle(ts);
            let r = Rotation::from_angle(tr);
            let m = rotating_squares_map(s, r, part(l), eps, Vec2::ZERO);
            let h = 1e-6 * eps;
            let k = LatticeIndex::new(2, -1, eps);
            for t in Tile::ALL {
                let c = k.tile_rect(&m.partition, t).center();
                let gx = (m.eval(c + Vec2::new(h, 0.0)) - m.eval(c - Vec2::new(h, 0.0))) * (0.5 / h);
                let gy = (m.eval(c + Vec2::new(0.0, h)) - m.eval(c - Vec2::new(0.0, h))) * (0.5 / h);
                prop_assert!((Mat2::from_cols(gx, gy) - m.gradient(t)).max_abs() < 1e-8);
            }
            prop_assert!((m.gradient(Tile::Y2).det() - s.e1().dot(r.e1())).abs() < 1e-14);
            prop_assert!((m.gradient(Tile::Y4).det() - s.e1().dot(r.e1())).abs() < 1e-14);
            prop_assert_eq!(check_orientation(&m), s.e1().dot(r.e1()) > ORIENTATION_TOL);
        }

        #[test]
        fn drift_per_cell(ts in -PI..PI, tr in -PI..PI, l in 0.1f64..0.9, eps in 0.1f64..2.0) {
            let s = Rotation::from_angle(ts);
            let r = Rotation::from_angle(tr);
            let m = rotating_squares_map(s, r, part(l), eps, Vec2::ZERO);
            let x = Vec2::new(0.37 * eps, 0.81 * eps);
            let step = m.eval(x + Vec2::new(eps, 0.0)) - m.eval(x);
            let want = (s.matrix() * l + r.matrix() * (1.0 - l)) * Vec2::new(eps, 0.0);
            prop_assert!((step - want).norm() < 1e-12);
        }

        #[test]
        fn branches_are_rotations(tr in -PI..PI, ts in -PI..PI, mu in 0.01f64..0.999) {
            let r = Rotation::from_angle(tr);
            let s = Rotation::from_angle(ts);
            for sign in [Sign::Plus, Sign::Minus] {
                let f = reflection_branch_f(r, s, mu, sign).unwrap();
                let g = reflection_branch_g(r, s, mu, sign).unwrap();
                prop_assert!((f.e1().norm() - 1.0).abs() < 1e-12);
                prop_assert!((f.matrix().det() - 1.0).abs() < 1e-12);
                prop_assert!((g.matrix().det() - 1.0).abs() < 1e-12);
            }
            // edge loop closes for the reflected configuration
            let f = reflection_branch_f(r, s, mu, Sign::Plus).unwrap();
            let g = reflection_branch_g(r, s, mu, Sign::Minus).unwrap();
            let gap = r.e2() * mu + s.e1() - g.e2() * mu - f.e1();
            prop_assert!(gap.norm() < 1e-12);
        }

        #[test]
        fn branches_near_unit_ratio(tr in -PI..PI, ts in -PI..PI) {
            let r = Rotation::from_angle(tr);
            let s = Rotation::from_angle(ts);
            let sp = s.e1().dot(r.e2());
            prop_assume!((sp.abs() - 1.0).abs() > 1e-2);
            let mu = 1.0 - 1e-6;
            let fp = reflection_branch_f(r, s, mu, Sign::Plus).unwrap();
            let gm = reflection_branch_g(r, s, mu, Sign::Minus).unwrap();
            prop_assert!(fp.distance(r.perp()) < 1e-4);
            prop_assert!(gm.distance(s.perp().negated()) < 1e-4);
        }

        #[test]
        fn microcrack_mean_gradient(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0, l in 0.1f64..0.9) {
            let f = Mat2::new(a, b, c, d);
            let m = microcrack_map(f, part(l));
            prop_assert!((m.mean_gradient - f).max_abs() < 1e-12);
        }
    }
}
