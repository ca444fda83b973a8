//! Rotation fitting on stiff squares and on cross-shaped clusters of them.

pub mod ciarlet;
pub mod poincare;
pub mod scaling;

pub use ciarlet::{approximate_ciarlet_check, fig8_configuration, CiarletCheck, PiecewiseRigidMap};
pub use poincare::{poincare_quotient, zero_mean_part, PoincareReport, DEFAULT_CONTROL_RATIO};
pub use scaling::{measure_rigidity_scaling, Perturbation, ScalingConfig, ScalingReport, ScalingRow};

use crate::energy::density::project_to_rotations;
use crate::error::{check_positive, Error, Result};
use crate::geometry::{CrossStructure, Rect, Tile};
use crate::kinematics::PiecewiseAffineMap;
use crate::linalg::{Mat2, Rotation, Vec2};
use crate::solver::{element_gradients, Mesh};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default `δ0` in the admissibility threshold `δ0 ρ^{2/p}`.
pub const DEFAULT_DELTA0: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestRotation {
    pub rotation: Rotation,
    /// Frobenius distance `|F - Q|`.
    pub distance: f64,
    /// Set when the conformal part of `F` vanishes and every rotation is optimal.
    pub degenerate: bool,
}

pub fn nearest_rotation(f: Mat2) -> NearestRotation {
    match project_to_rotations(f) {
        (Some(q), d) => NearestRotation { rotation: q, distance: d, degenerate: false },
        (None, d) => NearestRotation { rotation: Rotation::IDENTITY, distance: d, degenerate: true },
    }
}

/// Deformation gradients sampled at the quadrature points of a tile-aligned mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub mesh: Mesh,
    /// Nodal values, when the field comes from a deformation.
    pub positions: Option<Vec<Vec2>>,
    /// Four quadrature gradients per element, in `Mesh::quadrature` order.
    pub gradients: Vec<[Mat2; 4]>,
    pub p: f64,
}

impl SampledField {
    pub fn from_positions(mesh: Mesh, positions: Vec<Vec2>, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if positions.len() != mesh.node_count() {
            return Err(Error::Precondition(format!(
                "{} nodal values for {} nodes",
                positions.len(),
                mesh.node_count()
            )));
        }
        let gradients = (0..mesh.element_count()).map(|e| element_gradients(&mesh, &positions, e)).collect();
        Ok(SampledField { mesh, positions: Some(positions), gradients, p })
    }

    /// Nodal interpolant of a continuous piecewise-affine map.
    pub fn from_map(mesh: Mesh, map: &PiecewiseAffineMap, p: f64) -> Result<Self> {
        let positions = mesh.nodes().into_iter().map(|x| map.eval(x)).collect();
        Self::from_positions(mesh, positions, p)
    }

    /// Gradient field given pointwise; need not be a gradient of anything.
    pub fn from_gradients(mesh: Mesh, grad: impl Fn(Vec2, Tile) -> Mat2, p: f64) -> Result<Self> {
        check_exponent(p)?;
        let gradients = (0..mesh.element_count())
            .map(|e| mesh.quadrature_points(e).map(|x| grad(x, mesh.tags[e])))
            .collect();
        Ok(SampledField { mesh, positions: None, gradients, p })
    }

    /// Elements whose interior lies in `rect`; errors unless they tile it.
    pub fn elements_in(&self, rect: &Rect) -> Result<Vec<usize>> {
        let els: Vec<usize> = (0..self.mesh.element_count())
            .filter(|&e| rect.contains(self.mesh.element_rect(e).center()))
            .collect();
        let covered: f64 = els.iter().map(|&e| self.mesh.element_rect(e).area()).sum();
        if els.is_empty() || (covered - rect.area()).abs() > 1e-9 * rect.area().max(1e-300) {
            return Err(Error::Domain(format!(
                "region {rect:?} is not resolved by the mesh on {:?}",
                self.mesh.domain
            )));
        }
        Ok(els)
    }

    /// `(weight, gradient)` for every quadrature point of the listed elements.
    fn samples(&self, els: &[usize]) -> Vec<(f64, Mat2)> {
        els.iter()
            .flat_map(|&e| {
                let w = 0.25 * self.mesh.element_rect(e).area();
                self.gradients[e].map(|g| (w, g))
            })
            .collect()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain { name: "p", value: p, expected: "a finite number >= 1" })
    }
}

fn lp_power(samples: &[(f64, Mat2)], q: Mat2, p: f64) -> f64 {
    samples.iter().map(|&(w, g)| w * (g - q).norm().powf(p)).sum()
}

/// `‖dist(∇u, SO(2))‖_{L^p}` over the samples.
fn dist_norm(samples: &[(f64, Mat2)], p: f64) -> f64 {
    samples
        .iter()
        .map(|&(w, g)| w * nearest_rotation(g).distance.powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `dφ/dθ` of `φ(θ) = Σ w |G − Q(θ)|^p`.
fn lp_slope(samples: &[(f64, Mat2)], p: f64, t: f64) -> f64 {
    let q = Rotation::from_angle(t).matrix();
    let dq = q * Mat2::new(0.0, -1.0, 1.0, 0.0);
    samples
        .iter()
        .map(|&(w, g)| {
            let d = (g - q).norm();
            if d == 0.0 {
                0.0
            } else {
                -w * p * d.powf(p - 2.0) * g.ddot(dq)
            }
        })
        .sum()
}

/// Value comparisons stall near `√ε` in the angle; bisecting the slope does not.
fn polish(samples: &[(f64, Mat2)], p: f64, t: f64, width: f64) -> f64 {
    let (mut a, mut b) = (t - width, t + width);
    let (sa, sb) = (lp_slope(samples, p, a), lp_slope(samples, p, b));
    if !(sa < 0.0 && sb > 0.0) {
        return t;
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if lp_slope(samples, p, m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Rotation minimizing the discrete `L^p` distance to the samples, and that distance.
fn fit_samples(samples: &[(f64, Mat2)], p: f64) -> (Rotation, f64) {
    let mean = samples.iter().fold(Mat2::ZERO, |acc, &(w, g)| acc + g * w);
    let polar = nearest_rotation(mean).rotation;
    if p == 2.0 {
        return (polar, lp_power(samples, polar.matrix(), 2.0).sqrt());
    }
    let phi = |t: f64| lp_power(samples, Rotation::from_angle(t).matrix(), p);
    let n = 64;
    let step = 2.0 * PI / n as f64;
    let mut best = (polar.angle(), phi(polar.angle()));
    for i in 0..n {
        let t = -PI + i as f64 * step;
        let v = phi(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let t = golden_section(phi, best.0 - step, best.0 + step, 1e-12);
    let t = polish(samples, p, t, 1e-6);
    let q = Rotation::from_angle(t);
    (q, lp_power(samples, q.matrix(), p).powf(1.0 / p))
}

/// Best single rotation on `square` in the field's `L^p` norm.
pub fn fit_square_rotation(field: &SampledField, square: &Rect) -> Result<(Rotation, f64)> {
    let els = field.elements_in(square)?;
    Ok(fit_samples(&field.samples(&els), field.p))
}

/// Two-rotation fit on a cross: one rotation shared by the `Y1`-type squares,
/// one by the `Y3`-type squares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossFit {
    /// Rotation of the `Y1`-type squares.
    pub s: Rotation,
    /// Rotation of the `Y3`-type squares.
    pub r: Rotation,
    /// `‖∇u - S‖_{L^p} + ‖∇u - R‖_{L^p}` over the respective pairs of squares.
    pub error_p: f64,
    /// `S e1 · R e1`.
    pub scalar_product: f64,
    /// `‖dist(∇u, SO(2))‖_{L^p}` over the four squares.
    pub delta: f64,
    /// `δ0 ρ^{2/p}`.
    pub threshold: f64,
    /// Whether `delta` is below `threshold`, where a two-rotation fit is expected.
    pub guaranteed: bool,
}

pub fn fit_cross_rotations(field: &SampledField, cross: &CrossStructure, p: f64) -> Result<CrossFit> {
    fit_cross_rotations_with(field, cross, p, DEFAULT_DELTA0)
}

pub fn fit_cross_rotations_with(field: &SampledField, cross: &CrossStructure, p: f64, delta0: f64) -> Result<CrossFit> {
    check_exponent(p)?;
    check_positive("delta0", delta0)?;
    let gather = |a: &Rect, b: &Rect| -> Result<Vec<(f64, Mat2)>> {
        let mut els = field.elements_in(a)?;
        els.extend(field.elements_in(b)?);
        Ok(field.samples(&els))
    };
    let r = &cross.rects;
    let big = gather(&r[1], &r[3])?;
    let small = gather(&r[2], &r[4])?;
    let (q_big, e_big) = fit_samples(&big, p);
    let (q_small, e_small) = fit_samples(&small, p);
    let (s, r) = if cross.big_tile == Tile::Y1 { (q_big, q_small) } else { (q_small, q_big) };
    let all: Vec<(f64, Mat2)> = big.into_iter().chain(small).collect();
    let delta = dist_norm(&all, p);
    let threshold = delta0 * cross.rho.powf(2.0 / p);
    Ok(CrossFit {
        s,
        r,
        error_p: e_big + e_small,
        scalar_product: s.e1().dot(r.e1()),
        delta,
        threshold,
        guaranteed: delta < threshold,
    })
}

/// Independent fits on disjoint crosses, computed concurrently.
pub fn fit_crosses(field: &SampledField, crosses: &[CrossStructure], p: f64) -> Vec<Result<CrossFit>> {
    crosses.par_iter().map(|c| fit_cross_rotations(field, c, p)).collect()
}
