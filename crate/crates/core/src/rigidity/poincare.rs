use super::SampledField;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::linalg::Vec2;
use crate::solver::{GAUSS, NODE_SIGNS};
use serde::{Deserialize, Serialize};

/// Default bound `M` on `‖u‖_{outer} / ‖u‖_{inner}` over the stiff phase.
pub const DEFAULT_CONTROL_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    /// `‖u‖_{L^p(inner ∩ stiff)} / ‖∇u‖_{L^p(outer ∩ stiff)}`; `+∞` when only the gradient vanishes.
    pub quotient: f64,
    pub u_norm: f64,
    pub grad_norm: f64,
    /// `‖u‖_{L^p(outer ∩ stiff)} / ‖u‖_{L^p(inner ∩ stiff)}`.
    pub control_ratio: f64,
    /// Whether `control_ratio ≤ M`.
    pub preconditions_verified: bool,
}

/// Nodal values interpolated to the quadrature points of element `e`.
fn values_at_quadrature(field: &SampledField, pos: &[Vec2], e: usize) -> [Vec2; 4] {
    let nodes = field.mesh.element_nodes(e);
    let mut out = [Vec2::ZERO; 4];
    let mut q = 0;
    for &eta in &GAUSS {
        for &xi in &GAUSS {
            let mut v = Vec2::ZERO;
            for (a, &(s, t)) in NODE_SIGNS.iter().enumerate() {
                v += pos[nodes[a]] * (0.25 * (1.0 + s * xi) * (1.0 + t * eta));
            }
            out[q] = v;
            q += 1;
        }
    }
    out
}

fn stiff_elements(field: &SampledField, region: &Rect) -> Result<Vec<usize>> {
    Ok(field.elements_in(region)?.into_iter().filter(|&e| field.mesh.tags[e].is_stiff()).collect())
}

fn positions(field: &SampledField) -> Result<&[Vec2]> {
    field
        .positions
        .as_deref()
        .ok_or_else(|| Error::Precondition("the field carries no nodal values".into()))
}

/// Stiff-phase mean of `u` over `region` and the stiff area.
fn stiff_mean(field: &SampledField, region: &Rect) -> Result<(Vec2, f64)> {
    let pos = positions(field)?;
    let mut sum = Vec2::ZERO;
    let mut area = 0.0;
    for e in stiff_elements(field, region)? {
        let w = 0.25 * field.mesh.element_rect(e).area();
        for v in values_at_quadrature(field, pos, e) {
            sum += v * w;
            area += w;
        }
    }
    if area == 0.0 {
        return Err(Error::Domain(format!("{region:?} contains no stiff tile")));
    }
    Ok((sum * (1.0 / area), area))
}

/// The field minus its stiff-phase mean over `inner`.
pub fn zero_mean_part(field: &SampledField, inner: &Rect) -> Result<SampledField> {
    let (m, _) = stiff_mean(field, inner)?;
    let shifted = positions(field)?.iter().map(|&v| v - m).collect();
    Ok(SampledField { positions: Some(shifted), ..field.clone() })
}

/// Ratio of the `L^p` norm of `u` on the stiff part of `inner` to the `L^p`
/// norm of `∇u` on the stiff part of `outer`, for `u` with zero stiff mean on `inner`.
pub fn poincare_quotient(field: &SampledField, inner: &Rect, outer: &Rect, epsilon: f64) -> Result<PoincareReport> {
    if (epsilon - field.mesh.epsilon).abs() > 1e-12 * epsilon.abs() {
        return Err(Error::Precondition(format!(
            "epsilon {epsilon} differs from the mesh period {}",
            field.mesh.epsilon
        )));
    }
    if inner.intersection(outer) != *inner {
        return Err(Error::Precondition("inner region must lie inside the outer one".into()));
    }
    let p = field.p;
    let pos = positions(field)?;
    let lp_u = |region: &Rect| -> Result<f64> {
        let mut s = 0.0;
        for e in stiff_elements(field, region)? {
            let w = 0.25 * field.mesh.element_rect(e).area();
            s += values_at_quadrature(field, pos, e).iter().map(|v| w * v.norm().powf(p)).sum::<f64>();
        }
        Ok(s.powf(1.0 / p))
    };
    let (mean, _) = stiff_mean(field, inner)?;
    let u_norm = lp_u(inner)?;
    let scale = pos.iter().fold(0.0f64, |m, v| m.max(v.max_abs())).max(1e-300);
    if mean.max_abs() > 1e-9 * scale {
        return Err(Error::Precondition(format!(
            "stiff mean over the inner region is {mean:?}, not zero"
        )));
    }
    let mut g = 0.0;
    for e in stiff_elements(field, outer)? {
        let w = 0.25 * field.mesh.element_rect(e).area();
        g += field.gradients[e].iter().map(|m| w * m.norm().powf(p)).sum::<f64>();
    }
    let grad_norm = g.powf(1.0 / p);
    let outer_u = lp_u(outer)?;
    let control_ratio = if u_norm > 0.0 { outer_u / u_norm } else if outer_u > 0.0 { f64::INFINITY } else { 1.0 };
    let quotient = if grad_norm > 0.0 {
        u_norm / grad_norm
    } else if u_norm > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(PoincareReport {
        quotient,
        u_norm,
        grad_norm,
        control_ratio,
        preconditions_verified: control_ratio <= DEFAULT_CONTROL_RATIO,
    })
}
