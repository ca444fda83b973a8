//! Attainable macroscopic gradients and their rotation-pair decompositions.

use crate::error::{check_open_unit, Error, Result};
use crate::linalg::{Mat2, Rotation};
use serde::{Deserialize, Serialize};

pub const K_TOL: f64 = 1e-10;
const RADICAND_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMembership {
    pub in_k: bool,
    /// Diagnostic seminorm combining the conformality defect with the
    /// excursion of `|F e1|` outside its admissible interval. Zero on K; it is
    /// not the Euclidean distance to K.
    pub distance: f64,
    pub alpha: f64,
    pub conformality_defect: f64,
}

/// Membership in `K = {αQ : sqrt(|Y_stiff|) <= α <= 1}`.
pub fn k_membership(f: Mat2, lambda: f64) -> Result<KMembership> {
    check_open_unit("lambda", lambda)?;
    let lo = (lambda * lambda + (1.0 - lambda) * (1.0 - lambda)).sqrt();
    let alpha = f.col1().norm();
    let conformality_defect = (f.col2() - f.col1().perp()).norm();
    let excess = alpha - alpha.clamp(lo, 1.0);
    let distance = conformality_defect.hypot(excess);
    Ok(KMembership {
        in_k: distance <= K_TOL,
        distance,
        alpha,
        conformality_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Rotation of the `Y1` squares.
    pub s: Rotation,
    /// Rotation of the `Y3` squares.
    pub r: Rotation,
}

impl Decomposition {
    pub fn recompose(&self, lambda: f64) -> Mat2 {
        self.s.matrix() * lambda + self.r.matrix() * (1.0 - lambda)
    }

    pub fn scalar_product(&self) -> f64 {
        self.s.e1().dot(self.r.e1())
    }

    pub fn swapped(&self) -> Decomposition {
        Decomposition { s: self.r, r: self.s }
    }
}

/// All pairs `(S, R)` with `λS + (1-λ)R = F` and `Se1·Re1 >= 0`.
pub fn decompose_in_k(f: Mat2, lambda: f64) -> Result<Vec<Decomposition>> {
    let m = k_membership(f, lambda)?;
    if !m.in_k {
        return Err(Error::NotInK { distance: m.distance });
    }
    let fe1 = f.col1();
    let fe2 = fe1.perp();
    let a2 = fe1.norm_sq();
    let q = a2 + 2.0 * lambda - 1.0;
    let mut rad = 4.0 * lambda * lambda * a2 - q * q;
    if rad < 0.0 {
        if rad >= -RADICAND_CLAMP {
            rad = 0.0;
        } else {
            return Err(Error::Inconsistent(format!("negative radicand {rad:e}")));
        }
    }
    let root = rad.sqrt();
    let tol = K_TOL + 10.0 * m.distance;
    let mut out: Vec<Decomposition> = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let se1 = (fe1 * q + fe2 * (sign * root)) * (1.0 / (2.0 * lambda * a2));
        let re1 = (fe1 - se1 * lambda) * (1.0 / (1.0 - lambda));
        let d = Decomposition {
            s: Rotation::from_first_column(se1),
            r: Rotation::from_first_column(re1),
        };
        let residual = (d.recompose(lambda) - f).max_abs();
        if residual > tol || d.scalar_product() < -1e-9 {
            continue;
        }
        let duplicate = out
            .iter()
            .any(|o| o.s.distance(d.s) < 1e-12 && o.r.distance(d.r) < 1e-12);
        if !duplicate {
            out.push(d);
        }
    }
    if out.is_empty() {
        return Err(Error::Inconsistent("no decomposition recomposes to F".into()));
    }
    Ok(out)
}

/// `det(λS + (1-λ)R)`, checked against `|Y_stiff| + |Y_soft| Se1·Re1`.
pub fn det_identity(s: Rotation, r: Rotation, lambda: f64) -> Result<f64> {
    let f = s.matrix() * lambda + r.matrix() * (1.0 - lambda);
    let det = f.det();
    let stiff = lambda * lambda + (1.0 - lambda) * (1.0 - lambda);
    let rhs = stiff + (1.0 - stiff) * s.e1().dot(r.e1());
    if (det - rhs).abs() > 1e-12 {
        return Err(Error::Inconsistent(format!("det {det} differs from {rhs}")));
    }
    Ok(det)
}

/// `-(transversal strain)/(axial strain)` from the principal stretches.
pub fn poisson_ratio(f: Mat2) -> Result<f64> {
    let defect = (f.col2() - f.col1().perp()).norm();
    if defect > K_TOL {
        return Err(Error::NotInK { distance: defect });
    }
    let (s1, s2) = f.singular_values();
    let axial = s1 - 1.0;
    if axial.abs() < 1e-14 {
        return Err(Error::UndefinedRatio("zero axial strain"));
    }
    Ok(-(s2 - 1.0) / axial)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectangleEffective {
    pub f: Mat2,
    pub det: f64,
    /// `Fe1·Fe2 = (μ-λ) Re1·Se2`.
    pub shear: f64,
    pub column_norms: (f64, f64),
}

/// Effective gradient of a checkerboard with `λ x μ` rigid rectangles.
pub fn rectangle_effective(s: Rotation, r: Rotation, lambda: f64, mu: f64) -> Result<RectangleEffective> {
    check_open_unit("lambda", lambda)?;
    check_open_unit("mu", mu)?;
    let sp = s.e1().dot(r.e1());
    if sp < 0.0 {
        return Err(Error::Admissibility { scalar: sp });
    }
    let c1 = s.e1() * lambda + r.e1() * (1.0 - lambda);
    let c2 = s.e2() * mu + r.e2() * (1.0 - mu);
    let f = Mat2::from_cols(c1, c2);
    let stiff = lambda * mu + (1.0 - lambda) * (1.0 - mu);
    let det = f.det();
    let rhs = stiff + (1.0 - stiff) * sp;
    if (det - rhs).abs() > 1e-12 {
        return Err(Error::Inconsistent(format!("det {det} differs from {rhs}")));
    }
    Ok(RectangleEffective {
        f,
        det,
        shear: (mu - lambda) * r.e1().dot(s.e2()),
        column_norms: (c1.norm(), c2.norm()),
    })
}

/// An effective gradient together with its structure in `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveGradient {
    pub f: Mat2,
    pub lambda: f64,
    pub membership: KMembership,
    pub decompositions: Vec<Decomposition>,
    /// `(α, Q)` with `F = αQ` when `F` is conformal.
    pub conformal: Option<(f64, Rotation)>,
}

impl EffectiveGradient {
    pub fn new(f: Mat2, lambda: f64) -> Result<Self> {
        let membership = k_membership(f, lambda)?;
        let decompositions = if membership.in_k {
            decompose_in_k(f, lambda)?
        } else {
            Vec::new()
        };
        let conformal = (membership.conformality_defect <= K_TOL && membership.alpha > 0.0)
            .then(|| (membership.alpha, Rotation::from_first_column(f.col1())));
        Ok(EffectiveGradient {
            f,
            lambda,
            membership,
            decompositions,
            conformal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn membership_examples() {
        assert!(k_membership(Mat2::IDENTITY, 0.5).unwrap().in_k);
        let m = k_membership(Mat2::scalar(0.6), 0.5).unwrap();
        assert!(!m.in_k);
        assert!((m.distance - (0.5f64.sqrt() - 0.6)).abs() < 1e-15);
        assert!(!k_membership(Mat2::diag(1.0, -1.0), 0.5).unwrap().in_k);
        assert!(!k_membership(Mat2::scalar(1.1), 0.5).unwrap().in_k);
        assert!(k_membership(Mat2::IDENTITY, 1.0).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let q = Rotation::from_degrees(33.0);
        let d = decompose_in_k(q.matrix(), 0.4).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].s.distance(q) < 1e-7 && d[0].r.distance(q) < 1e-7);

        let d = decompose_in_k(Mat2::scalar(0.8), 0.5).unwrap();
        assert_eq!(d.len(), 2);
        let firsts: Vec<_> = d.iter().map(|p| (p.s.e1(), p.r.e1())).collect();
        let want_a = (crate::linalg::Vec2::new(0.8, 0.6), crate::linalg::Vec2::new(0.8, -0.6));
        let close = |(a, b): (crate::linalg::Vec2, crate::linalg::Vec2), (c, e): (crate::linalg::Vec2, crate::linalg::Vec2)| {
            (a - c).norm() < 1e-14 && (b - e).norm() < 1e-14
        };
        assert!(firsts.iter().any(|&p| close(p, want_a)));
        assert!(firsts.iter().any(|&p| close(p, (want_a.1, want_a.0))));

        let d = decompose_in_k(Mat2::scalar(0.5f64.sqrt()), 0.5).unwrap();
        assert_eq!(d.len(), 2);
        for p in &d {
            assert!(p.scalar_product().abs() < 1e-12);
            let angles = (p.s.angle().to_degrees(), p.r.angle().to_degrees());
            assert!((angles.0.abs() - 45.0).abs() < 1e-9 && (angles.0 + angles.1).abs() < 1e-9);
        }
        assert!(matches!(decompose_in_k(Mat2::scalar(0.6), 0.5), Err(Error::NotInK { .. })));
    }

    #[test]
    fn decomposition_matches_brute_force_grid() {
        // oracle: scan (θS, θR) on a grid and keep near-minimizers of |λS+(1-λ)R-F|
        let lambda = 0.35;
        let f = Rotation::from_degrees(20.0).matrix() * 0.85;
        let d = decompose_in_k(f, lambda).unwrap();
        let n = 720;
        let mut best = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let s = Rotation::from_angle(2.0 * PI * i as f64 / n as f64);
                let r = Rotation::from_angle(2.0 * PI * j as f64 / n as f64);
                let res = (s.matrix() * lambda + r.matrix() * (1.0 - lambda) - f).norm();
                if res < 0.02 {
                    best.push((s, r));
                }
            }
        }
        assert!(!best.is_empty());
        for (s, r) in best {
            assert!(d.iter().any(|p| p.s.distance(s) < 0.1 && p.r.distance(r) < 0.1));
        }
    }

    #[test]
    fn det_identity_examples() {
        let q = Rotation::from_degrees(71.0);
        assert!((det_identity(q, q, 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(det_identity(Rotation::from_degrees(90.0), Rotation::IDENTITY, 0.5).unwrap(), 0.5);
        let v = det_identity(Rotation::from_degrees(60.0), Rotation::IDENTITY, 0.3).unwrap();
        assert!((v - 0.79).abs() < 1e-12);
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_ratio(Mat2::scalar(0.8)).unwrap(), -1.0);
        assert_eq!(poisson_ratio(Rotation::from_degrees(30.0).matrix() * 0.9).unwrap(), -1.0);
        assert!(matches!(poisson_ratio(Mat2::IDENTITY), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn rectangle_examples() {
        let s = Rotation::from_degrees(60.0);
        let r = Rotation::IDENTITY;
        let sq = rectangle_effective(s, r, 0.3, 0.3).unwrap();
        assert!((sq.f - (s.matrix() * 0.3 + r.matrix() * 0.7)).max_abs() < 1e-15);
        let id = rectangle_effective(r, r, 0.3, 0.7).unwrap();
        assert!((id.f - Mat2::IDENTITY).max_abs() < 1e-15);
        let e = rectangle_effective(s, r, 0.3, 0.7).unwrap();
        // independent evaluation of Fe1·Fe2
        let direct = e.f.col1().dot(e.f.col2());
        assert!((e.shear - direct).abs() < 1e-15);
        assert!((e.shear + 0.4 * 60f64.to_radians().sin()).abs() < 1e-15);
        assert!(e.column_norms.0 <= 1.0 && e.column_norms.1 <= 1.0);
        assert!(matches!(
            rectangle_effective(Rotation::from_degrees(120.0), r, 0.3, 0.7),
            Err(Error::Admissibility { .. })
        ));
    }

    fn admissible_pair(ts: f64, dt: f64) -> (Rotation, Rotation) {
        (Rotation::from_angle(ts), Rotation::from_angle(ts + dt))
    }

    proptest! {
        #[test]
        fn round_trip(l in 0.2f64..0.8, ts in -PI..PI, dt in -PI / 2.0..PI / 2.0) {
            let (s, r) = admissible_pair(ts, dt);
            let f = s.matrix() * l + r.matrix() * (1.0 - l);
            let d = decompose_in_k(f, l).unwrap();
            for p in &d {
                prop_assert!((p.recompose(l) - f).max_abs() < 1e-10);
            }
            prop_assert!(d.iter().any(|p| p.s.distance(s) < 1e-8 && p.r.distance(r) < 1e-8));
        }

        #[test]
        fn pairs_and_conformal_forms_agree(l in 0.05f64..0.95, ts in -PI..PI, dt in -PI / 2.0..PI / 2.0, u in 0.0f64..1.0, th in -PI..PI) {
            let (s, r) = admissible_pair(ts, dt);
            let f = s.matrix() * l + r.matrix() * (1.0 - l);
            prop_assert!(k_membership(f, l).unwrap().in_k);
            let lo = (l * l + (1.0 - l) * (1.0 - l)).sqrt();
            let alpha = lo + u * (1.0 - lo);
            let g = Rotation::from_angle(th).matrix() * alpha;
            prop_assert!(k_membership(g, l).unwrap().in_k);
            let d = decompose_in_k(g, l).unwrap();
            prop_assert!(d.iter().all(|p| p.scalar_product() >= -1e-9));
        }

        #[test]
        fn det_identity_holds(l in 0.0f64..1.0, ts in -PI..PI, tr in -PI..PI) {
            prop_assert!(det_identity(Rotation::from_angle(ts), Rotation::from_angle(tr), l).is_ok());
        }

        #[test]
        fn auxetic_everywhere_in_k(l in 0.05f64..0.95, u in 0.0f64..0.999, th in -PI..PI) {
            let lo = (l * l + (1.0 - l) * (1.0 - l)).sqrt();
            let f = Rotation::from_angle(th).matrix() * (lo + u * (1.0 - lo));
            prop_assert_eq!(poisson_ratio(f).unwrap(), -1.0);
        }
    }
}
