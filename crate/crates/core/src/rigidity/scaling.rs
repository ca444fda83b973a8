use super::{fit_cross_rotations_with, SampledField, DEFAULT_DELTA0};
use crate::error::{check_positive, Error, Result};
use crate::geometry::{cross_structure, CellPartition, LatticeIndex, Rect};
use crate::kinematics::rotating_squares_map;
use crate::linalg::{Rotation, Vec2};
use crate::solver::build_mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Perturbations of an exact rotating-squares deformation, scaled by the level `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Perturbation {
    Zero,
    /// Smooth displacement `t ε φ(x/ε)`.
    Smooth,
    /// Independent nodal displacements of size `t h`.
    NodalNoise { seed: u64 },
    /// The upper `Y1`-type square of the cross turned by `t` about its
    /// lower-left vertex, the rest unchanged.
    HingeOpening,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub lambda: f64,
    pub epsilon: f64,
    /// Elements per tile edge.
    pub resolution: usize,
    pub p: f64,
    pub delta0: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { lambda: 0.5, epsilon: 1.0, resolution: 4, p: 2.0, delta0: DEFAULT_DELTA0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub level: f64,
    pub delta: f64,
    pub error_p: f64,
    pub scalar_product: f64,
    /// `max(0, S0e1·R0e1 − Se1·Re1)`.
    pub shortfall: f64,
    /// `shortfall · ρ^{1/p} / δ^{1/2}`, the constant this level exhibits.
    pub constant: f64,
    pub guaranteed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub base_scalar_product: f64,
    pub rho: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log error_p` against `log δ`; `None` when exact.
    pub slope: Option<f64>,
    /// Every level reproduced the base pair with zero error.
    pub exact: bool,
    /// Largest scalar-product constant over the levels below threshold.
    pub constant: f64,
    /// The constant is finite and the finest level stays within twice the
    /// largest constant seen on coarser levels.
    pub constant_stable: bool,
}

pub const SCALING_CSV_HEADER: &str = "level,delta,error_p,scalar_product,slope";

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SCALING_CSV_HEADER);
        s.push('\n');
        let slope = self.slope.map(|v| v.to_string()).unwrap_or_else(|| "exact".into());
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.level, r.delta, r.error_p, r.scalar_product, slope);
        }
        s
    }
}

fn perturbed_positions(
    base: (Rotation, Rotation),
    family: Perturbation,
    t: f64,
    cfg: &ScalingConfig,
) -> Result<(crate::solver::Mesh, Vec<Vec2>, crate::geometry::CrossStructure)> {
    let eps = cfg.epsilon;
    let mesh = build_mesh(Rect::new(0.0, 0.0, 3.0 * eps, 3.0 * eps), eps, cfg.resolution, cfg.lambda)?;
    let cross = cross_structure(&LatticeIndex::new(1, 1, eps), &mesh.partition)?;
    let map = rotating_squares_map(base.0, base.1, mesh.partition, eps, Vec2::ZERO);
    let mut pos: Vec<Vec2> = mesh.nodes().into_iter().map(|x| map.eval(x)).collect();
    match family {
        Perturbation::Zero => {}
        Perturbation::Smooth => {
            let k = 2.0 * PI / 3.0;
            for (p, x) in pos.iter_mut().zip(mesh.nodes()) {
                let y = x * (1.0 / eps);
                let d = Vec2::new((k * y.x + 0.3).sin() * (k * y.y).cos(), 0.5 * (k * (y.x + 2.0 * y.y)).sin());
                *p += d * (t * eps);
            }
        }
        Perturbation::NodalNoise { seed } => {
            let h = mesh.min_spacing();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for p in pos.iter_mut() {
                *p += Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (t * h);
            }
        }
        Perturbation::HingeOpening => {
            let sq = cross.rects[3];
            let pivot = Vec2::new(sq.x0, sq.y0);
            let c = map.eval(pivot);
            let turn = Rotation::from_angle(t);
            for (p, x) in pos.iter_mut().zip(mesh.nodes()) {
                if sq.contains_closed(x, 1e-12 * eps) {
                    *p = c + turn.apply(*p - c);
                }
            }
        }
    }
    Ok((mesh, pos, cross))
}

/// Runs the cross fit on a perturbed rotating-squares field for each level
/// and regresses the fit error against the distance to rotations.
pub fn measure_rigidity_scaling(
    base: (Rotation, Rotation),
    family: Perturbation,
    levels: &[f64],
    cfg: &ScalingConfig,
) -> Result<ScalingReport> {
    check_positive("epsilon", cfg.epsilon)?;
    if levels.len() < 3 || levels.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Precondition("need at least 3 positive levels".into()));
    }
    let (lo, hi) = levels.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("levels span {:.3} decades, need 2", (hi / lo).log10())));
    }
    let base_sp = base.0.e1().dot(base.1.e1());
    if base_sp < 0.0 {
        return Err(Error::Admissibility { scalar: base_sp });
    }
    CellPartition::new(cfg.lambda)?;
    let mut rows = Vec::with_capacity(levels.len());
    let mut rho = 0.0;
    for &t in levels {
        let (mesh, pos, cross) = perturbed_positions(base, family, t, cfg)?;
        rho = cross.rho;
        let field = SampledField::from_positions(mesh, pos, cfg.p)?;
        let fit = fit_cross_rotations_with(&field, &cross, cfg.p, cfg.delta0)?;
        let shortfall = (base_sp - fit.scalar_product).max(0.0);
        let constant = if shortfall == 0.0 { 0.0 } else { shortfall * rho.powf(1.0 / cfg.p) / fit.delta.sqrt() };
        rows.push(ScalingRow {
            level: t,
            delta: fit.delta,
            error_p: fit.error_p,
            scalar_product: fit.scalar_product,
            shortfall,
            constant,
            guaranteed: fit.guaranteed,
        });
    }
    let tiny = |v: f64| v <= 1e-13 * rho.max(1.0);
    let exact = rows.iter().all(|r| tiny(r.error_p) && tiny(r.delta));
    let slope = if exact { None } else { Some(log_slope(&rows)?) };
    let below: Vec<&ScalingRow> = rows.iter().filter(|r| r.guaranteed).collect();
    let constant = below.iter().map(|r| r.constant).fold(0.0, f64::max);
    let constant_stable = constant.is_finite() && {
        // rows are ordered as given; the finest level has the smallest δ
        let mut sorted = below.clone();
        sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        match sorted.split_last() {
            Some((finest, coarser)) if !coarser.is_empty() => {
                let prev = coarser.iter().map(|r| r.constant).fold(0.0, f64::max);
                finest.constant <= 2.0 * prev || finest.constant == 0.0
            }
            _ => true,
        }
    };
    Ok(ScalingReport { base_scalar_product: base_sp, rho, rows, slope, exact, constant, constant_stable })
}

fn log_slope(rows: &[ScalingRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta > 0.0 && r.error_p > 0.0)
        .map(|r| (r.delta.ln(), r.error_p.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateRegression("fewer than two levels with positive delta and error"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return Err(Error::DegenerateRegression("all levels have the same delta"));
    }
    Ok(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
