use super::{
    best_affine_fit, build_mesh, initial_deformation, minimize, Constraint, DiscreteDeformation, Mesh, SolverOptions,
};
use crate::effective::k_membership;
use crate::energy::density::{EnergyDensity, StiffModel};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::linalg::Mat2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// How the macroscopic gradient is imposed on the square domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Boundary nodes pinned to `F x`.
    Dirichlet,
    /// `F x` plus a domain-periodic fluctuation.
    Periodic,
}

impl BoundaryKind {
    pub fn constraint(self, f: Mat2) -> Constraint {
        match self {
            BoundaryKind::Dirichlet => Constraint::AffineBoundary(f),
            BoundaryKind::Periodic => Constraint::PeriodicAffine(f),
        }
    }
}

/// Largest best-fit distance to `K` still counted as a limit inside `K`.
pub const FIT_K_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub energy: f64,
    pub energy_per_area: f64,
    pub fit: Mat2,
    pub dist_k: f64,
    pub min_det: f64,
    pub stiff_dist_p: f64,
    pub iterations: usize,
    /// `ok`, `not_converged`, `outside_k`, `infinite` or `failed`.
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub f: Mat2,
    pub lambda: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares `(C, exponent)` with `∫ dist^p ≈ C ε^exponent` over the finite rows.
    pub stiff_fit: Option<(f64, f64)>,
    /// Stiffness exponent of the density, against which the fit is compared.
    pub beta: Option<f64>,
    /// Mesh and minimizer of every row that produced one.
    #[serde(skip)]
    pub deformations: Vec<Option<(Mesh, DiscreteDeformation)>>,
}

pub const CSV_HEADER: &str = "epsilon,energy,energy_per_area,F11,F12,F21,F22,dist_K,min_det,stiff_dist_p,iters,flag";

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                r.energy,
                r.energy_per_area,
                r.fit.a11,
                r.fit.a12,
                r.fit.a21,
                r.fit.a22,
                r.dist_k,
                r.min_det,
                r.stiff_dist_p,
                r.iterations,
                r.flag
            );
        }
        s
    }

    /// Whether `∫ dist^p` over the stiff phase stays below `C ε^β` for the
    /// fitted `C`, i.e. the fitted exponent is at least `β`-consistent.
    pub fn stiff_bound_holds(&self, min_exponent: f64) -> bool {
        self.stiff_fit.map(|(_, e)| e >= min_exponent).unwrap_or(false)
    }
}

fn regression(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Minimizes the discrete energy on `(0,1)²` for each ε and tabulates the
/// energy, the best affine fit and the stiff-phase strain.
pub fn homogenization_experiment(
    f: Mat2,
    eps_list: &[f64],
    lambda: f64,
    density: &EnergyDensity,
    resolution: usize,
    boundary: BoundaryKind,
    opts: &SolverOptions,
) -> Result<ConvergenceReport> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("epsilons must be strictly decreasing".into()));
    }
    let domain = Rect::new(0.0, 0.0, 1.0, 1.0);
    let meshes = eps_list
        .iter()
        .map(|&e| build_mesh(domain, e, resolution, lambda))
        .collect::<Result<Vec<_>>>()?;
    let outside = !k_membership(f, lambda)?.in_k;
    let runs: Vec<(ConvergenceRow, Option<(Mesh, DiscreteDeformation)>)> = meshes
        .par_iter()
        .map(|mesh| {
            let constraint = boundary.constraint(f);
            let init = initial_deformation(mesh, f, density, constraint);
            let failed = |flag: &str| {
                let row = ConvergenceRow {
                    epsilon: mesh.epsilon,
                    energy: f64::INFINITY,
                    energy_per_area: f64::INFINITY,
                    fit: f,
                    dist_k: f64::NAN,
                    min_det: f64::NAN,
                    stiff_dist_p: f64::NAN,
                    iterations: 0,
                    flag: flag.into(),
                };
                (row, None)
            };
            let m = match minimize(mesh, density, &init, opts) {
                Ok(m) => m,
                Err(Error::InfeasibleStart) => return failed("infinite"),
                Err(_) => return failed("failed"),
            };
            let Ok(fit) = best_affine_fit(mesh, &m.deformation) else {
                return failed("failed");
            };
            let flag = if outside || fit.dist_to_k > FIT_K_TOL {
                "outside_k"
            } else if !m.converged {
                "not_converged"
            } else {
                "ok"
            };
            let row = ConvergenceRow {
                epsilon: mesh.epsilon,
                energy: m.energy,
                energy_per_area: m.energy / mesh.area(),
                fit: fit.f,
                dist_k: fit.dist_to_k,
                min_det: m.stats.min_det,
                stiff_dist_p: m.stats.stiff_dist_p,
                iterations: m.iterations,
                flag: flag.into(),
            };
            (row, Some((mesh.clone(), m.deformation)))
        })
        .collect();
    let (rows, deformations): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let finite: Vec<&ConvergenceRow> = rows
        .iter()
        .filter(|r| r.stiff_dist_p.is_finite() && r.stiff_dist_p > 0.0)
        .collect();
    let xs: Vec<f64> = finite.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = finite.iter().map(|r| r.stiff_dist_p.ln()).collect();
    let stiff_fit = regression(&xs, &ys).map(|(c, e)| (c.exp(), e));
    let beta = match density.stiff {
        StiffModel::Elastic { beta, .. } => Some(beta),
        StiffModel::Rigid => None,
    };
    Ok(ConvergenceReport { f, lambda, rows, stiff_fit, beta, deformations })
}
