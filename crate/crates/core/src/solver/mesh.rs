use crate::error::{Error, Result};
use crate::geometry::{tile_at, CellPartition, Rect, Tile};
use crate::linalg::Vec2;

/// Structured grid of axis-aligned quadrilaterals whose edges follow the
/// tile boundaries of the ε-checkerboard.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub domain: Rect,
    pub epsilon: f64,
    pub resolution: usize,
    pub partition: CellPartition,
    /// Vertical grid lines.
    pub xs: Vec<f64>,
    /// Horizontal grid lines.
    pub ys: Vec<f64>,
    pub tags: Vec<Tile>,
}

/// Gauss points on `[-1, 1]`.
pub const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
/// Reference coordinates of the element nodes, counter-clockwise.
pub const NODE_SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

fn cells_along(len: f64, origin: f64, epsilon: f64, axis: &str) -> Result<usize> {
    let m = len / epsilon;
    let o = origin / epsilon;
    let mr = m.round();
    if mr < 1.0 || (m - mr).abs() > 1e-9 * m.max(1.0) || (o - o.round()).abs() > 1e-9 * o.abs().max(1.0) {
        let suggestion = len / mr.max(1.0);
        return Err(Error::Mesh(format!(
            "{axis} extent {len} at origin {origin} is not aligned with epsilon = {epsilon}; nearest valid epsilon is {suggestion}"
        )));
    }
    Ok(mr as usize)
}

fn grid_lines(origin: f64, cells: usize, epsilon: f64, lambda: f64, res: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * res * cells + 1);
    let k0 = (origin / epsilon).round();
    for c in 0..cells {
        let base = k0 + c as f64;
        for i in 0..res {
            v.push(epsilon * (base + lambda * i as f64 / res as f64));
        }
        for i in 0..res {
            v.push(epsilon * (base + lambda + (1.0 - lambda) * i as f64 / res as f64));
        }
    }
    v.push(epsilon * (k0 + cells as f64));
    v
}

pub fn build_mesh(domain: Rect, epsilon: f64, resolution: usize, lambda: f64) -> Result<Mesh> {
    let partition = CellPartition::new(lambda)?;
    crate::error::check_positive("epsilon", epsilon)?;
    if resolution < 2 {
        return Err(Error::ParameterDomain {
            name: "resolution",
            value: resolution as f64,
            expected: "an integer >= 2",
        });
    }
    let mx = cells_along(domain.width(), domain.x0, epsilon, "x")?;
    let my = cells_along(domain.height(), domain.y0, epsilon, "y")?;
    let xs = grid_lines(domain.x0, mx, epsilon, lambda, resolution);
    let ys = grid_lines(domain.y0, my, epsilon, lambda, resolution);
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let mut tags = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = Vec2::new(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            tags.push(tile_at(&partition, c, epsilon).1);
        }
    }
    Ok(Mesh {
        domain,
        epsilon,
        resolution,
        partition,
        xs,
        ys,
        tags,
    })
}

impl Mesh {
    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn element_count(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn node_count(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.xs.len() + i
    }

    pub fn node(&self, n: usize) -> Vec2 {
        let w = self.xs.len();
        Vec2::new(self.xs[n % w], self.ys[n / w])
    }

    pub fn nodes(&self) -> Vec<Vec2> {
        (0..self.node_count()).map(|n| self.node(n)).collect()
    }

    /// Grid position `(i, j)` of element `e`.
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.nx(), e / self.nx())
    }

    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(e);
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    pub fn element_rect(&self, e: usize) -> Rect {
        let (i, j) = self.element_ij(e);
        Rect::new(self.xs[i], self.ys[j], self.xs[i + 1], self.ys[j + 1])
    }

    pub fn is_boundary_node(&self, n: usize) -> bool {
        let w = self.xs.len();
        let (i, j) = (n % w, n / w);
        i == 0 || j == 0 || i == w - 1 || j == self.ys.len() - 1
    }

    pub fn min_spacing(&self) -> f64 {
        self.xs
            .windows(2)
            .chain(self.ys.windows(2))
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        self.domain.area()
    }

    /// Quadrature points of element `e`: weight and shape-function gradients.
    pub fn quadrature(&self, e: usize) -> [(f64, [Vec2; 4]); 4] {
        let r = self.element_rect(e);
        let (hx, hy) = (r.width(), r.height());
        let w = 0.25 * hx * hy;
        let mut out = [(0.0, [Vec2::ZERO; 4]); 4];
        let mut q = 0;
        for &eta in &GAUSS {
            for &xi in &GAUSS {
                let mut g = [Vec2::ZERO; 4];
                for (a, &(sa, ta)) in NODE_SIGNS.iter().enumerate() {
                    g[a] = Vec2::new(
                        0.25 * sa * (1.0 + ta * eta) * 2.0 / hx,
                        0.25 * ta * (1.0 + sa * xi) * 2.0 / hy,
                    );
                }
                out[q] = (w, g);
                q += 1;
            }
        }
        out
    }

    /// Physical coordinates of the quadrature points of element `e`.
    pub fn quadrature_points(&self, e: usize) -> [Vec2; 4] {
        let r = self.element_rect(e);
        let c = r.center();
        let mut out = [Vec2::ZERO; 4];
        let mut q = 0;
        for &eta in &GAUSS {
            for &xi in &GAUSS {
                out[q] = c + Vec2::new(0.5 * r.width() * xi, 0.5 * r.height() * eta);
                q += 1;
            }
        }
        out
    }
}
