use crate::error::{Error, Result};
use crate::geometry::{CrossStructure, Rect};
use crate::kinematics::{AffinePiece, RigidMotion};
use crate::linalg::{Rotation, Vec2};
use crate::polygon::{self, Polygon};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Default constant in the slack `C (1 + ‖∇v‖_{L²}) h`.
pub const DEFAULT_SLACK_CONSTANT: f64 = 1.0;

/// One rigid motion per rectangle; the rectangles are pairwise disjoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRigidMap {
    pub pieces: Vec<(Rect, RigidMotion)>,
}

impl PiecewiseRigidMap {
    pub fn affine_pieces(&self) -> Vec<AffinePiece> {
        self.pieces
            .iter()
            .map(|(r, m)| AffinePiece { domain: *r, gradient: m.rotation.matrix(), offset: m.translation })
            .collect()
    }

    pub fn images(&self) -> Vec<Polygon> {
        self.affine_pieces().iter().map(|p| polygon::to_ccw(p.image())).collect()
    }

    /// `‖∇v‖_{L²}`; every rotation has Frobenius norm `√2`.
    pub fn gradient_l2(&self) -> f64 {
        (2.0 * self.pieces.iter().map(|(r, _)| r.area()).sum::<f64>()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiarletCheck {
    /// `∫ |det ∇v|`, the total reference area.
    pub det_integral: f64,
    /// `|v(M)|`, exact union of the image squares.
    pub image_area: f64,
    /// `C (1 + ‖∇v‖_{L²}) h`.
    pub slack: f64,
    pub pass: bool,
}

/// Tests `∫|det ∇v| ≤ |v(M)| + C (1 + ‖∇v‖_{L²}) h` for a piecewise rigid `v`
/// that is `h`-close to an injective deformation.
pub fn approximate_ciarlet_check(v: &PiecewiseRigidMap, h: f64, c: f64) -> Result<CiarletCheck> {
    if !(0.0..1.0).contains(&h) {
        return Err(Error::Precondition(format!("closeness h = {h} must lie in [0, 1)")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::ParameterDomain { name: "c", value: c, expected: "a finite number >= 0" });
    }
    let det_integral: f64 = v.pieces.iter().map(|(r, _)| r.area()).sum();
    let image_area = polygon::union_area(&v.images());
    let slack = c * (1.0 + v.gradient_l2()) * h;
    let roundoff = 1e-9 * det_integral.max(1.0);
    Ok(CiarletCheck { det_integral, image_area, slack, pass: det_integral <= image_area + slack + roundoff })
}

/// Four unit squares of a cross with `E1`, `E2`, `E3` at rest and `E4`
/// folded back onto `E1` about their common vertex.
///
/// The images of `E1` and `E4` share that vertex and overlap in a wedge of
/// opening `theta`, a kite of area `tan(θ/2) ≥ ½ sin θ`, so
/// `|v(E')| = 4 − tan(θ/2)` while `∫|det ∇v| = 4`.
pub fn fig8_configuration(theta: f64) -> Result<PiecewiseRigidMap> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::ParameterDomain { name: "theta", value: theta, expected: "(0, π/2)" });
    }
    let cross = CrossStructure::canonical(1.0, 1.0, Vec2::ZERO)?;
    let pivot = Vec2::new(1.0, 0.0);
    let fold = Rotation::from_angle(-(FRAC_PI_2 + theta));
    let folded = RigidMotion::new(fold, pivot - fold.apply(pivot));
    let rest = RigidMotion::new(Rotation::IDENTITY, Vec2::ZERO);
    let s = cross.stiff();
    Ok(PiecewiseRigidMap { pieces: vec![(s[0], rest), (s[1], rest), (s[2], rest), (s[3], folded)] })
}

/// Exact overlap of `fig8_configuration(theta)`.
pub fn fig8_overlap(theta: f64) -> f64 {
    (0.5 * theta).tan()
}
