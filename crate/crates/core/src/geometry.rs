//! Unit-cell partition, the ε-scaled checkerboard lattice and cross structures.

use crate::error::{check_open_unit, check_positive, Result};
use crate::linalg::Vec2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Axis-aligned rectangle `(x0, x1] x (y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0)
    }

    /// Half-open membership.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x > self.x0 && p.x <= self.x1 && p.y > self.y0 && p.y <= self.y1
    }

    /// Membership of the closed rectangle, with slack `tol`.
    pub fn contains_closed(&self, p: Vec2, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    /// Corners counter-clockwise from the lower-left.
    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.x0, self.y0),
            Vec2::new(self.x1, self.y0),
            Vec2::new(self.x1, self.y1),
            Vec2::new(self.x0, self.y1),
        ]
    }

    pub fn translate(&self, d: Vec2) -> Rect {
        Rect::new(self.x0 + d.x, self.y0 + d.y, self.x1 + d.x, self.y1 + d.y)
    }

    pub fn scale(&self, s: f64) -> Rect {
        Rect::new(self.x0 * s, self.y0 * s, self.x1 * s, self.y1 * s)
    }

    pub fn intersection(&self, o: &Rect) -> Rect {
        Rect::new(
            self.x0.max(o.x0),
            self.y0.max(o.y0),
            self.x1.min(o.x1),
            self.y1.min(o.y1),
        )
    }

    /// Interiors overlap.
    pub fn overlaps(&self, o: &Rect) -> bool {
        !self.intersection(o).is_empty()
    }

    pub fn approx_eq(&self, o: &Rect, tol: f64) -> bool {
        (self.x0 - o.x0).abs() <= tol
            && (self.x1 - o.x1).abs() <= tol
            && (self.y0 - o.y0).abs() <= tol
            && (self.y1 - o.y1).abs() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tile {
    Y1,
    Y2,
    Y3,
    Y4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stiffness {
    Stiff,
    Soft,
}

impl Tile {
    pub const ALL: [Tile; 4] = [Tile::Y1, Tile::Y2, Tile::Y3, Tile::Y4];

    pub fn stiffness(self) -> Stiffness {
        match self {
            Tile::Y1 | Tile::Y3 => Stiffness::Stiff,
            Tile::Y2 | Tile::Y4 => Stiffness::Soft,
        }
    }

    pub fn is_stiff(self) -> bool {
        self.stiffness() == Stiffness::Stiff
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The unit cell `(0,1]^2` cut at `lambda` in both directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPartition {
    lambda: f64,
}

impl CellPartition {
    pub fn new(lambda: f64) -> Result<Self> {
        check_open_unit("lambda", lambda)?;
        Ok(CellPartition { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tile_rect(&self, tile: Tile) -> Rect {
        let l = self.lambda;
        match tile {
            Tile::Y1 => Rect::new(0.0, 0.0, l, l),
            Tile::Y2 => Rect::new(0.0, l, l, 1.0),
            Tile::Y3 => Rect::new(l, l, 1.0, 1.0),
            Tile::Y4 => Rect::new(l, 0.0, 1.0, l),
        }
    }

    pub fn tiles(&self) -> [Rect; 4] {
        Tile::ALL.map(|t| self.tile_rect(t))
    }

    pub fn stiff_area(&self) -> f64 {
        let l = self.lambda;
        l * l + (1.0 - l) * (1.0 - l)
    }

    pub fn soft_area(&self) -> f64 {
        2.0 * self.lambda * (1.0 - self.lambda)
    }

    /// Tile of a point already reduced to `(0,1]^2`.
    pub fn local_tile(&self, y: Vec2) -> Tile {
        let left = y.x <= self.lambda;
        let low = y.y <= self.lambda;
        match (left, low) {
            (true, true) => Tile::Y1,
            (true, false) => Tile::Y2,
            (false, false) => Tile::Y3,
            (false, true) => Tile::Y4,
        }
    }

    /// Tile at a point of the unit cell, reducing periodically first.
    pub fn tile_of_cell_point(&self, y: Vec2) -> Tile {
        let r = Vec2::new(y.x - (y.x.ceil() - 1.0), y.y - (y.y.ceil() - 1.0));
        self.local_tile(r)
    }
}

pub fn build_partition(lambda: f64) -> Result<CellPartition> {
    CellPartition::new(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub k: (i64, i64),
    pub epsilon: f64,
}

impl LatticeIndex {
    pub fn new(k1: i64, k2: i64, epsilon: f64) -> Self {
        LatticeIndex { k: (k1, k2), epsilon }
    }

    /// Lower-left corner `ε k` of the cell.
    pub fn origin(&self) -> Vec2 {
        Vec2::new(self.k.0 as f64 * self.epsilon, self.k.1 as f64 * self.epsilon)
    }

    pub fn cell_rect(&self) -> Rect {
        let o = self.origin();
        Rect::new(o.x, o.y, o.x + self.epsilon, o.y + self.epsilon)
    }

    pub fn tile_rect(&self, partition: &CellPartition, tile: Tile) -> Rect {
        partition.tile_rect(tile).scale(self.epsilon).translate(self.origin())
    }

    pub fn shifted(&self, d1: i64, d2: i64) -> LatticeIndex {
        LatticeIndex::new(self.k.0 + d1, self.k.1 + d2, self.epsilon)
    }
}

/// Cell index along one axis: the unique `k` with `t/ε ∈ (k, k+1]`.
pub(crate) fn cell_coordinate(t: f64, epsilon: f64) -> (i64, f64) {
    let s = t / epsilon;
    let k = s.ceil() - 1.0;
    (k as i64, s - k)
}

pub fn tile_at(partition: &CellPartition, x: Vec2, epsilon: f64) -> (LatticeIndex, Tile) {
    let (k1, y1) = cell_coordinate(x.x, epsilon);
    let (k2, y2) = cell_coordinate(x.y, epsilon);
    let tile = partition.local_tile(Vec2::new(y1, y2));
    (LatticeIndex::new(k1, k2, epsilon), tile)
}

/// Union of open axis-aligned rectangles.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub rects: Vec<Rect>,
}

impl Domain {
    pub fn new(rects: Vec<Rect>) -> Self {
        Domain {
            rects: rects.into_iter().filter(|r| !r.is_empty()).collect(),
        }
    }

    pub fn rect(r: Rect) -> Self {
        Domain::new(vec![r])
    }

    pub fn unit_square() -> Self {
        Domain::rect(Rect::new(0.0, 0.0, 1.0, 1.0))
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.rects
            .iter()
            .any(|r| p.x > r.x0 && p.x < r.x1 && p.y > r.y0 && p.y < r.y1)
    }

    pub fn bounding_box(&self) -> Option<Rect> {
        let first = *self.rects.first()?;
        Some(self.rects.iter().fold(first, |b, r| {
            Rect::new(b.x0.min(r.x0), b.y0.min(r.y0), b.x1.max(r.x1), b.y1.max(r.y1))
        }))
    }

    pub fn intersects(&self, r: &Rect) -> bool {
        self.rects.iter().any(|d| d.overlaps(r))
    }

    /// Whether the interior of `r` lies inside the union.
    pub fn covers(&self, r: &Rect) -> bool {
        if r.is_empty() {
            return true;
        }
        let mut xs = vec![r.x0, r.x1];
        let mut ys = vec![r.y0, r.y1];
        for d in &self.rects {
            for x in [d.x0, d.x1] {
                if x > r.x0 && x < r.x1 {
                    xs.push(x);
                }
            }
            for y in [d.y0, d.y1] {
                if y > r.y0 && y < r.y1 {
                    ys.push(y);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        for wx in xs.windows(2) {
            if wx[1] <= wx[0] {
                continue;
            }
            for wy in ys.windows(2) {
                if wy[1] <= wy[0] {
                    continue;
                }
                let c = Vec2::new(0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1]));
                if !self.contains(c) {
                    return false;
                }
            }
        }
        true
    }

    pub fn area(&self) -> f64 {
        let mut xs: Vec<f64> = self.rects.iter().flat_map(|r| [r.x0, r.x1]).collect();
        let mut ys: Vec<f64> = self.rects.iter().flat_map(|r| [r.y0, r.y1]).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let mut a = 0.0;
        for wx in xs.windows(2) {
            for wy in ys.windows(2) {
                let w = wx[1] - wx[0];
                let h = wy[1] - wy[0];
                if w > 0.0 && h > 0.0 && self.contains(Vec2::new(0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1]))) {
                    a += w * h;
                }
            }
        }
        a
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LatticeCells {
    /// Cells meeting the domain.
    pub cells: BTreeSet<(i64, i64)>,
    /// Cells whose 3x3 neighbourhood lies inside the domain.
    pub interior: BTreeSet<(i64, i64)>,
    pub epsilon: f64,
}

impl LatticeCells {
    pub fn indices(&self) -> impl Iterator<Item = LatticeIndex> + '_ {
        self.cells
            .iter()
            .map(move |&(a, b)| LatticeIndex::new(a, b, self.epsilon))
    }
}

pub fn lattice_cells(domain: &Domain, epsilon: f64) -> Result<LatticeCells> {
    check_positive("epsilon", epsilon)?;
    let mut out = LatticeCells {
        epsilon,
        ..Default::default()
    };
    let Some(bb) = domain.bounding_box() else {
        return Ok(out);
    };
    let lo1 = (bb.x0 / epsilon).floor() as i64 - 1;
    let hi1 = (bb.x1 / epsilon).ceil() as i64 + 1;
    let lo2 = (bb.y0 / epsilon).floor() as i64 - 1;
    let hi2 = (bb.y1 / epsilon).ceil() as i64 + 1;
    for k1 in lo1..=hi1 {
        for k2 in lo2..=hi2 {
            let idx = LatticeIndex::new(k1, k2, epsilon);
            if domain.intersects(&idx.cell_rect()) {
                out.cells.insert((k1, k2));
                let o = idx.origin();
                let hood = Rect::new(o.x - epsilon, o.y - epsilon, o.x + 2.0 * epsilon, o.y + 2.0 * epsilon);
                if domain.covers(&hood) {
                    out.interior.insert((k1, k2));
                }
            }
        }
    }
    Ok(out)
}

/// Five-rectangle cross: a soft centre `E0` with four stiff neighbours.
///
/// In units of `rho` around `anchor`: `E0=(0,1]x(0,mu]`, `E1=(0,1]x(-1,0]`,
/// `E2=(-mu,0]x(0,mu]`, `E3=E1+(1+mu)e2`, `E4=E2+(1+mu)e1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossStructure {
    pub rho: f64,
    pub mu: f64,
    pub anchor: Vec2,
    /// `E0..E4` in length units.
    pub rects: [Rect; 5],
    /// Lattice tile type of `E1` and `E3`; `E2`, `E4` carry the other stiff type.
    pub big_tile: Tile,
}

impl CrossStructure {
    pub fn canonical(rho: f64, mu: f64, anchor: Vec2) -> Result<Self> {
        check_positive("rho", rho)?;
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(crate::error::Error::ParameterDomain {
                name: "mu",
                value: mu,
                expected: "(0, 1]",
            });
        }
        let unit = [
            Rect::new(0.0, 0.0, 1.0, mu),
            Rect::new(0.0, -1.0, 1.0, 0.0),
            Rect::new(-mu, 0.0, 0.0, mu),
            Rect::new(0.0, mu, 1.0, 1.0 + mu),
            Rect::new(1.0, 0.0, 1.0 + mu, mu),
        ];
        Ok(CrossStructure {
            rho,
            mu,
            anchor,
            rects: unit.map(|r| r.scale(rho).translate(anchor)),
            big_tile: Tile::Y1,
        })
    }

    pub fn center(&self) -> Rect {
        self.rects[0]
    }

    /// The stiff rectangles `E1..E4`.
    pub fn stiff(&self) -> &[Rect] {
        &self.rects[1..]
    }

    /// `E' = E1 ∪ ... ∪ E4`, as a domain.
    pub fn stiff_domain(&self) -> Domain {
        Domain::new(self.stiff().to_vec())
    }

    pub fn bounding_box(&self) -> Rect {
        let r = &self.rects;
        Rect::new(r[2].x0, r[1].y0, r[4].x1, r[3].y1)
    }

    pub fn small_tile(&self) -> Tile {
        match self.big_tile {
            Tile::Y1 => Tile::Y3,
            _ => Tile::Y1,
        }
    }
}

/// Cross centred on a soft tile of cell `k`.
///
/// For `lambda >= 1/2` the centre is `ε(k+Y2)` with `rho = λε`, `mu = (1-λ)/λ`;
/// otherwise it is `ε(k+Y4)` with `rho = (1-λ)ε`, `mu = λ/(1-λ)`, so that the
/// centre is always wider than tall.
pub fn cross_structure(k: &LatticeIndex, partition: &CellPartition) -> Result<CrossStructure> {
    check_positive("epsilon", k.epsilon)?;
    let l = partition.lambda();
    let eps = k.epsilon;
    let o = k.origin();
    if l >= 0.5 {
        let mut c = CrossStructure::canonical(l * eps, (1.0 - l) / l, o + Vec2::new(0.0, l * eps))?;
        c.rects = [
            k.tile_rect(partition, Tile::Y2),
            k.tile_rect(partition, Tile::Y1),
            k.shifted(-1, 0).tile_rect(partition, Tile::Y3),
            k.shifted(0, 1).tile_rect(partition, Tile::Y1),
            k.tile_rect(partition, Tile::Y3),
        ];
        c.big_tile = Tile::Y1;
        Ok(c)
    } else {
        let mut c = CrossStructure::canonical((1.0 - l) * eps, l / (1.0 - l), o + Vec2::new(l * eps, 0.0))?;
        c.rects = [
            k.tile_rect(partition, Tile::Y4),
            k.shifted(0, -1).tile_rect(partition, Tile::Y3),
            k.tile_rect(partition, Tile::Y1),
            k.tile_rect(partition, Tile::Y3),
            k.shifted(1, 0).tile_rect(partition, Tile::Y1),
        ];
        c.big_tile = Tile::Y3;
        Ok(c)
    }
}
