//! Small fixed-size linear algebra: planar vectors, 2x2 matrices and rotations.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };
    pub const E1: Vec2 = Vec2 { x: 1.0, y: 0.0 };
    pub const E2: Vec2 = Vec2 { x: 0.0, y: 1.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn outer(self, o: Vec2) -> Mat2 {
        Mat2::new(self.x * o.x, self.x * o.y, self.y * o.x, self.y * o.y)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Row-major 2x2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    pub fn scalar(s: f64) -> Self {
        Mat2::diag(s, s)
    }

    pub fn from_cols(c1: Vec2, c2: Vec2) -> Self {
        Mat2::new(c1.x, c2.x, c1.y, c2.y)
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn to_rows(self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn col1(self) -> Vec2 {
        Vec2::new(self.a11, self.a21)
    }

    pub fn col2(self) -> Vec2 {
        Vec2::new(self.a12, self.a22)
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// Cofactor matrix, the derivative of `det` with respect to the entries.
    pub fn cofactor(self) -> Mat2 {
        Mat2::new(self.a22, -self.a21, -self.a12, self.a11)
    }

    pub fn inverse(self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let c = self.cofactor();
        Some(Mat2::new(c.a11 / d, c.a21 / d, c.a12 / d, c.a22 / d))
    }

    pub fn norm_sq(self) -> f64 {
        self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22
    }

    /// Frobenius norm.
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Frobenius inner product.
    pub fn ddot(self, o: Mat2) -> f64 {
        self.a11 * o.a11 + self.a12 * o.a12 + self.a21 * o.a21 + self.a22 * o.a22
    }

    /// `(A e2 | -A e1)`.
    pub fn perp(self) -> Mat2 {
        Mat2::from_cols(self.col2(), -self.col1())
    }

    pub fn max_abs(self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    pub fn is_finite(self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    /// Singular values, largest first.
    pub fn singular_values(self) -> (f64, f64) {
        let p = (self.a11 + self.a22).hypot(self.a21 - self.a12);
        let q = (self.a11 - self.a22).hypot(self.a21 + self.a12);
        (0.5 * (p + q), 0.5 * (p - q).abs())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m * self
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a11 * v.x + self.a12 * v.y, self.a21 * v.x + self.a22 * v.y)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::from_cols(self * o.col1(), self * o.col2())
    }
}

/// Planar rotation stored by its first column `(cos, sin)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    c: f64,
    s: f64,
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { c: 1.0, s: 0.0 };

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Rotation { c, s }
    }

    pub fn from_degrees(deg: f64) -> Self {
        Rotation::from_angle(deg.to_radians())
    }

    /// Rotation taking `e1` to the direction of `v` (`v` need not be unit).
    pub fn from_first_column(v: Vec2) -> Self {
        let n = v.norm();
        Rotation { c: v.x / n, s: v.y / n }
    }

    pub fn angle(self) -> f64 {
        self.s.atan2(self.c)
    }

    pub fn cos(self) -> f64 {
        self.c
    }

    pub fn sin(self) -> f64 {
        self.s
    }

    pub fn e1(self) -> Vec2 {
        Vec2::new(self.c, self.s)
    }

    pub fn e2(self) -> Vec2 {
        Vec2::new(-self.s, self.c)
    }

    pub fn matrix(self) -> Mat2 {
        Mat2::new(self.c, -self.s, self.s, self.c)
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        self.matrix() * v
    }

    pub fn compose(self, o: Rotation) -> Rotation {
        Rotation {
            c: self.c * o.c - self.s * o.s,
            s: self.s * o.c + self.c * o.s,
        }
    }

    pub fn inverse(self) -> Rotation {
        Rotation { c: self.c, s: -self.s }
    }

    /// `R^perp = (R e2 | -R e1)`.
    pub fn perp(self) -> Rotation {
        Rotation { c: -self.s, s: self.c }
    }

    /// Half turn applied: `-R`.
    pub fn negated(self) -> Rotation {
        Rotation { c: -self.c, s: -self.s }
    }

    /// Frobenius distance between the two rotation matrices.
    pub fn distance(self, o: Rotation) -> f64 {
        (self.matrix() - o.matrix()).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat() -> impl Strategy<Value = Mat2> {
        prop::array::uniform4(-3.0..3.0f64).prop_map(|[a, b, c, d]| Mat2::new(a, b, c, d))
    }

    #[test]
    fn small_examples() {
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(a.det(), -2.0);
        assert_eq!(a.trace(), 5.0);
        assert_eq!(a * Vec2::new(1.0, -1.0), Vec2::new(-1.0, -1.0));
        assert_eq!(a.inverse().unwrap() * a, Mat2::IDENTITY);
        assert!(Mat2::diag(1.0, 0.0).inverse().is_none());
        let (s1, s2) = Mat2::diag(-3.0, 2.0).singular_values();
        assert_eq!((s1, s2), (3.0, 2.0));
        assert_eq!(Vec2::E1.perp(), Vec2::E2);
        assert_eq!(Vec2::E1.cross(Vec2::E2), 1.0);
    }

    #[test]
    fn rotation_helpers() {
        let r = Rotation::from_degrees(30.0);
        assert!((r.angle().to_degrees() - 30.0).abs() < 1e-12);
        assert!((r.perp().angle().to_degrees() - 120.0).abs() < 1e-12);
        assert!(r.compose(r.inverse()).distance(Rotation::IDENTITY) < 1e-15);
        assert!((r.negated().matrix() + r.matrix()).max_abs() == 0.0);
        assert!(Rotation::from_first_column(Vec2::new(0.0, 5.0)).distance(Rotation::from_degrees(90.0)) < 1e-15);
        assert!((r.matrix().perp() - r.perp().matrix()).max_abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn det_is_multiplicative(a in mat(), b in mat()) {
            prop_assert!(((a * b).det() - a.det() * b.det()).abs() < 1e-10);
        }

        #[test]
        fn cofactor_is_det_derivative(a in mat(), b in mat()) {
            let h = 1e-6;
            let fd = ((a + b * h).det() - (a - b * h).det()) / (2.0 * h);
            prop_assert!((fd - a.cofactor().ddot(b)).abs() < 1e-6);
        }

        #[test]
        fn singular_values_match_invariants(a in mat()) {
            let (s1, s2) = a.singular_values();
            prop_assert!(s1 >= s2 && s2 >= 0.0);
            prop_assert!((s1 * s2 - a.det().abs()).abs() < 1e-10);
            prop_assert!((s1 * s1 + s2 * s2 - a.norm_sq()).abs() < 1e-9);
        }
    }
}
