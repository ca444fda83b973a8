use crate::effective::{decompose_in_k, k_membership, Decomposition};
use crate::error::{check_open_unit, Error, Result};
use crate::linalg::{Mat2, Vec2};
use std::f64::consts::PI;

/// The two soft-tile gradients `(Se1|Re2)` and `(Re1|Se2)` of a decomposition.
pub fn soft_gradients(d: &Decomposition) -> (Mat2, Mat2) {
    (
        Mat2::from_cols(d.s.e1(), d.r.e2()),
        Mat2::from_cols(d.r.e1(), d.s.e2()),
    )
}

/// Homogenized density on `K`: half the soft area times the smaller of the
/// soft-tile energy sums over the admissible decompositions.
pub fn eval_w_hom(f: Mat2, lambda: f64, qc: &dyn Fn(Mat2) -> f64) -> Result<f64> {
    check_open_unit("lambda", lambda)?;
    let soft = 2.0 * lambda * (1.0 - lambda);
    let pairs = decompose_in_k(f, lambda)?;
    let best = pairs
        .iter()
        .map(|d| {
            let (a, b) = soft_gradients(d);
            qc(a) + qc(b)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(0.5 * soft * best)
}

/// Lower semicontinuous extension of [`eval_w_hom`] to the inner boundary
/// `|Fe1| = sqrt(|Y_stiff|)`, by extrapolation from inside `K`.
pub fn eval_w_hom_lsc(f: Mat2, lambda: f64, qc: &dyn Fn(Mat2) -> f64) -> Result<f64> {
    let direct = eval_w_hom(f, lambda, qc)?;
    if direct.is_finite() {
        return Ok(direct);
    }
    let m = k_membership(f, lambda)?;
    let step = |h: f64| eval_w_hom(f * ((m.alpha + h) / m.alpha), lambda, qc);
    let (a, b) = (step(1e-6)?, step(2e-6)?);
    if !(a.is_finite() && b.is_finite()) {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * a - b)
}

/// `min(f(F), min μ f(F - (1-μ) a⊗b) + (1-μ) f(F + μ a⊗b))` iterated `depth`
/// times on a `grid`-point discretization of `(μ, |a|, angle a, angle b)`.
/// An upper bound for the quasiconvex envelope, non-increasing in depth.
pub fn laminate_qc(density: &dyn Fn(Mat2) -> f64, f: Mat2, depth: usize, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::ParameterDomain {
            name: "grid",
            value: grid as f64,
            expected: "an integer >= 2",
        });
    }
    let scale = 1.0 + f.norm();
    let mut splits = Vec::with_capacity(grid.pow(4));
    for i in 1..=grid {
        let mu = i as f64 / (grid + 1) as f64;
        for j in 0..grid {
            let b = angle_vec(PI * j as f64 / grid as f64);
            for l in 0..grid {
                let dir = angle_vec(2.0 * PI * l as f64 / grid as f64);
                for m in 1..=grid {
                    let a = dir * (scale * m as f64 / grid as f64);
                    splits.push((mu, a.outer(b)));
                }
            }
        }
    }
    Ok(laminate(density, f, depth, &splits))
}

fn angle_vec(t: f64) -> Vec2 {
    let (s, c) = t.sin_cos();
    Vec2::new(c, s)
}

fn laminate(density: &dyn Fn(Mat2) -> f64, f: Mat2, depth: usize, splits: &[(f64, Mat2)]) -> f64 {
    if depth == 0 {
        return density(f);
    }
    let mut best = laminate(density, f, depth - 1, splits);
    for &(mu, ab) in splits {
        let left = laminate(density, f - ab * (1.0 - mu), depth - 1, splits);
        if !left.is_finite() {
            continue;
        }
        let right = laminate(density, f + ab * mu, depth - 1, splits);
        let v = mu * left + (1.0 - mu) * right;
        if v < best {
            best = v;
        }
    }
    best
}
