use crate::geometry::CellPartition;
use crate::linalg::{Mat2, Rotation, Vec2};
use std::fmt;
use std::sync::Arc;

pub type MatrixFn = Arc<dyn Fn(Mat2) -> f64 + Send + Sync>;
pub type MatrixGradFn = Arc<dyn Fn(Mat2) -> Mat2 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nearest rotation in Frobenius norm and the distance to it.
///
/// Maximizes `tr(QᵀF)`, whose optimum is the normalized conformal part of `F`.
/// Returns `None` for the rotation when the conformal part vanishes.
pub fn project_to_rotations(f: Mat2) -> (Option<Rotation>, f64) {
    let u = f.a11 + f.a22;
    let w = f.a21 - f.a12;
    let n = u.hypot(w);
    if n == 0.0 {
        return (None, (f.norm_sq() + 2.0).sqrt());
    }
    let q = Rotation::from_first_column(Vec2::new(u, w));
    // the explicit difference avoids cancellation close to SO(2)
    (Some(q), (f - q.matrix()).norm())
}

#[derive(Clone)]
pub enum SoftModel {
    /// `|F|^2 + det F + 1/det F - 4`.
    Default,
    /// `|F|^2 - 2 + θ(det F)` with a convex `θ`; polyconvex, so its own envelope.
    Theta { theta: ScalarFn, dtheta: ScalarFn },
    /// Arbitrary density. `qc_supplied` says whether it already equals its
    /// quasiconvex envelope; otherwise envelope values are upper bounds.
    Custom {
        density: MatrixFn,
        gradient: Option<MatrixGradFn>,
        qc_supplied: bool,
    },
}

impl SoftModel {
    /// `θ(d) = (d-1)^2 - 2(d-1)`, i.e. `(σ1-σ2)^2 + (σ1σ2-1)^2` in singular
    /// values: non-negative and stress free on rotations, unlike the default.
    pub fn stress_free() -> SoftModel {
        SoftModel::Theta {
            theta: Arc::new(|d| (d - 1.0) * (d - 3.0)),
            dtheta: Arc::new(|d| 2.0 * d - 4.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StiffModel {
    /// `ε^{-β} dist^p(F, SO(2))` for `det F > 0`.
    Elastic { p: f64, beta: f64 },
    /// Zero on rotations, infinite elsewhere.
    Rigid,
}

#[derive(Clone)]
pub struct EnergyDensity {
    pub soft: SoftModel,
    pub stiff: StiffModel,
    /// Coercivity constant of the soft phase.
    pub c: f64,
}

impl fmt::Debug for EnergyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let soft = match &self.soft {
            SoftModel::Default => "default".to_string(),
            SoftModel::Theta { .. } => "theta".to_string(),
            SoftModel::Custom { qc_supplied, .. } => format!("custom(qc_supplied={qc_supplied})"),
        };
        f.debug_struct("EnergyDensity")
            .field("soft", &soft)
            .field("stiff", &self.stiff)
            .field("c", &self.c)
            .finish()
    }
}

impl Default for EnergyDensity {
    fn default() -> Self {
        EnergyDensity::elastic(2.0, 4.0)
    }
}

const RIGID_TOL: f64 = 1e-12;

impl EnergyDensity {
    pub fn elastic(p: f64, beta: f64) -> Self {
        EnergyDensity {
            soft: SoftModel::Default,
            stiff: StiffModel::Elastic { p, beta },
            c: 4.0,
        }
    }

    pub fn rigid() -> Self {
        EnergyDensity {
            soft: SoftModel::Default,
            stiff: StiffModel::Rigid,
            c: 4.0,
        }
    }

    pub fn with_soft(mut self, soft: SoftModel) -> Self {
        self.soft = soft;
        self
    }

    /// Whether the soft density is known to equal its quasiconvex envelope.
    pub fn soft_is_own_envelope(&self) -> bool {
        match &self.soft {
            SoftModel::Default | SoftModel::Theta { .. } => true,
            SoftModel::Custom { qc_supplied, .. } => *qc_supplied,
        }
    }

    pub fn soft_value(&self, f: Mat2) -> f64 {
        let d = f.det();
        match &self.soft {
            SoftModel::Default => {
                if d <= 0.0 {
                    f64::INFINITY
                } else {
                    f.norm_sq() + d + 1.0 / d - 4.0
                }
            }
            SoftModel::Theta { theta, .. } => {
                if d <= 0.0 {
                    f64::INFINITY
                } else {
                    f.norm_sq() - 2.0 + theta(d)
                }
            }
            SoftModel::Custom { density, .. } => {
                if d <= 0.0 {
                    f64::INFINITY
                } else {
                    density(f)
                }
            }
        }
    }

    pub fn soft_gradient(&self, f: Mat2) -> Mat2 {
        let d = f.det();
        match &self.soft {
            SoftModel::Default => f * 2.0 + f.cofactor() * (1.0 - 1.0 / (d * d)),
            SoftModel::Theta { dtheta, .. } => f * 2.0 + f.cofactor() * dtheta(d),
            SoftModel::Custom { gradient: Some(g), .. } => g(f),
            SoftModel::Custom { density, .. } => {
                let h = 1e-6 * (1.0 + f.max_abs());
                let mut g = Mat2::ZERO;
                let units = [
                    Mat2::new(1.0, 0.0, 0.0, 0.0),
                    Mat2::new(0.0, 1.0, 0.0, 0.0),
                    Mat2::new(0.0, 0.0, 1.0, 0.0),
                    Mat2::new(0.0, 0.0, 0.0, 1.0),
                ];
                let parts: Vec<f64> = units
                    .iter()
                    .map(|&e| (density(f + e * h) - density(f - e * h)) / (2.0 * h))
                    .collect();
                g.a11 = parts[0];
                g.a12 = parts[1];
                g.a21 = parts[2];
                g.a22 = parts[3];
                g
            }
        }
    }

    pub fn stiff_value(&self, f: Mat2, epsilon: f64) -> f64 {
        if f.det() <= 0.0 {
            return f64::INFINITY;
        }
        let (_, dist) = project_to_rotations(f);
        match self.stiff {
            StiffModel::Elastic { p, beta } => epsilon.powf(-beta) * dist.powf(p),
            StiffModel::Rigid => {
                if dist <= RIGID_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn stiff_gradient(&self, f: Mat2, epsilon: f64) -> Mat2 {
        match self.stiff {
            StiffModel::Elastic { p, beta } => {
                let (q, dist) = project_to_rotations(f);
                let q = q.map(Rotation::matrix).unwrap_or(Mat2::ZERO);
                if dist == 0.0 {
                    return if p <= 2.0 { (f - q) * (epsilon.powf(-beta) * p) } else { Mat2::ZERO };
                }
                (f - q) * (epsilon.powf(-beta) * p * dist.powf(p - 2.0))
            }
            StiffModel::Rigid => Mat2::ZERO,
        }
    }

    /// `dist^p(F, SO(2))` with the exponent of the stiff model (2 when rigid).
    pub fn stiff_distance_p(&self, f: Mat2) -> f64 {
        let (_, dist) = project_to_rotations(f);
        match self.stiff {
            StiffModel::Elastic { p, .. } => dist.powf(p),
            StiffModel::Rigid => dist * dist,
        }
    }

    /// Lower bound `|F|^2/c + θ(det F)/c - c` for the default soft density.
    pub fn coercivity_bound(&self, f: Mat2) -> f64 {
        let d = f.det();
        f.norm_sq() / self.c + (d + 1.0 / d - 2.0) / self.c - self.c
    }
}

/// Energy density at a point `y` of the unit cell (periodically reduced).
pub fn eval_density(d: &EnergyDensity, partition: &CellPartition, y: Vec2, f: Mat2, epsilon: f64) -> f64 {
    if partition.tile_of_cell_point(y).is_stiff() {
        d.stiff_value(f, epsilon)
    } else {
        d.soft_value(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn density_examples() {
        let d = EnergyDensity::elastic(2.0, 4.0);
        let p = CellPartition::new(0.5).unwrap();
        let q = Rotation::from_degrees(37.0).matrix();
        for y in [Vec2::new(0.25, 0.25), Vec2::new(0.25, 0.75), Vec2::new(0.75, 0.75), Vec2::new(0.75, 0.25)] {
            assert!(eval_density(&d, &p, y, q, 0.1).abs() < 1e-12);
        }
        let v = eval_density(&d, &p, Vec2::new(0.25, 0.25), Mat2::diag(1.1, 1.0), 0.5);
        assert!((v - 0.16).abs() < 1e-12);
        assert_eq!(eval_density(&d, &p, Vec2::new(0.25, 0.75), Mat2::diag(1.0, -1.0), 0.5), f64::INFINITY);
        assert_eq!(eval_density(&d, &p, Vec2::new(0.25, 0.25), Mat2::diag(1.0, -1.0), 0.5), f64::INFINITY);
        let r = EnergyDensity::rigid();
        assert_eq!(r.stiff_value(q, 1.0), 0.0);
        assert_eq!(r.stiff_value(Mat2::diag(1.0, 1.01), 1.0), f64::INFINITY);
    }

    #[test]
    fn projection_examples() {
        let (q, d) = project_to_rotations(Mat2::diag(2.0, 1.0));
        assert!(q.unwrap().distance(Rotation::IDENTITY) < 1e-15);
        assert!((d - 1.0).abs() < 1e-15);
        let r = Rotation::from_degrees(30.0);
        let (q, d) = project_to_rotations(r.matrix() * 1.5);
        assert!(q.unwrap().distance(r) < 1e-15);
        assert!((d - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let (q, d) = project_to_rotations(Mat2::ZERO);
        assert!(q.is_none());
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    fn fd_check(d: &EnergyDensity, f: Mat2, stiff: bool) -> f64 {
        let value = |m: Mat2| if stiff { d.stiff_value(m, 0.7) } else { d.soft_value(m) };
        let g = if stiff { d.stiff_gradient(f, 0.7) } else { d.soft_gradient(f) };
        let h = 1e-6;
        let units = [
            Mat2::new(1.0, 0.0, 0.0, 0.0),
            Mat2::new(0.0, 1.0, 0.0, 0.0),
            Mat2::new(0.0, 0.0, 1.0, 0.0),
            Mat2::new(0.0, 0.0, 0.0, 1.0),
        ];
        units
            .iter()
            .map(|&e| ((value(f + e * h) - value(f - e * h)) / (2.0 * h) - g.ddot(e)).abs())
            .fold(0.0, f64::max)
            / (1.0 + g.max_abs())
    }

    proptest! {
        #[test]
        fn coercivity(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, det in 1e-3f64..10.0) {
            // build F with prescribed determinant from random first column and shear
            let col1 = Vec2::new(a, b);
            prop_assume!(col1.norm() > 1e-2);
            let col2 = col1.perp() * (det / col1.norm_sq()) + col1 * c;
            let f = Mat2::from_cols(col1, col2);
            let d = EnergyDensity::default();
            prop_assert!(d.soft_value(f) >= d.coercivity_bound(f) - 1e-9);
        }

        #[test]
        fn frame_indifferent_distance(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, e in -3.0f64..3.0, th in -PI..PI) {
            let f = Mat2::new(a, b, c, e);
            let q = Rotation::from_angle(th).matrix();
            let d0 = project_to_rotations(f).1;
            prop_assert!((project_to_rotations(q * f).1 - d0).abs() < 1e-12);
            prop_assert!((project_to_rotations(f * q).1 - d0).abs() < 1e-12);
            if f.det() > 0.0 {
                let (s1, s2) = f.singular_values();
                prop_assert!((d0 - ((s1 - 1.0).powi(2) + (s2 - 1.0).powi(2)).sqrt()).abs() < 1e-9);
            }
        }

        #[test]
        fn analytic_gradients(a in 0.5f64..1.5, b in -0.4f64..0.4, c in -0.4f64..0.4, e in 0.5f64..1.5, p in 2.0f64..4.0) {
            let f = Mat2::new(a, b, c, e);
            prop_assume!(f.det() > 0.1);
            prop_assert!(fd_check(&EnergyDensity::default(), f, false) < 1e-6);
            prop_assert!(fd_check(&EnergyDensity::elastic(p, 3.0), f, true) < 1e-6);
        }
    }
}
