//! Tile-aligned finite elements for the checkerboard energy.

pub mod assembly;
pub mod experiment;
pub mod lbfgs;
pub mod mesh;

pub use assembly::{assemble_energy, element_gradients, field_stats, Constraint, DiscreteDeformation, FieldStats, DET_BARRIER};
pub use experiment::{homogenization_experiment, BoundaryKind, ConvergenceReport, ConvergenceRow, CSV_HEADER, FIT_K_TOL};
pub use mesh::{build_mesh, Mesh, GAUSS, NODE_SIGNS};

use crate::effective::{decompose_in_k, k_membership};
use crate::energy::density::EnergyDensity;
use crate::energy::hom::soft_gradients;
use crate::error::{Error, Result};
use crate::geometry::CellPartition;
use crate::kinematics::rotating_squares_map;
use crate::linalg::{Mat2, Vec2};
use lbfgs::{lbfgs, LbfgsOptions, Objective};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative gradient tolerance, scaled by the mesh size and energy level.
    pub tol: f64,
    pub max_iterations: usize,
    pub memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iterations: 5000,
            memory: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimization {
    pub deformation: DiscreteDeformation,
    pub energy: f64,
    pub stats: FieldStats,
    pub iterations: usize,
    pub converged: bool,
    /// Gradient ∞-norm over the free variables at the returned state.
    pub residual: f64,
    pub gtol: f64,
    pub trace: Vec<f64>,
}

/// Nodal positions as `base + z[slot]`, with optional mean removal on `z`.
struct Reduction {
    base: Vec<Vec2>,
    slot: Vec<Option<usize>>,
    free: usize,
    center: bool,
}

impl Reduction {
    fn expand(&self, z: &[f64]) -> Vec<Vec2> {
        self.base
            .iter()
            .zip(&self.slot)
            .map(|(&b, s)| match s {
                Some(i) => b + Vec2::new(z[2 * i], z[2 * i + 1]),
                None => b,
            })
            .collect()
    }

    fn restrict(&self, g: &[Vec2]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.free];
        for (gn, s) in g.iter().zip(&self.slot) {
            if let Some(i) = s {
                out[2 * i] += gn.x;
                out[2 * i + 1] += gn.y;
            }
        }
        out
    }
}

struct Problem<'a> {
    mesh: &'a Mesh,
    density: &'a EnergyDensity,
    red: Reduction,
}

impl Objective for Problem<'_> {
    fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let pos = self.red.expand(z);
        let (v, g) = assemble_energy(self.mesh, &pos, self.density);
        (v, self.red.restrict(&g))
    }

    fn project(&self, z: &mut [f64]) {
        if !self.red.center || self.red.free == 0 {
            return;
        }
        let n = self.red.free as f64;
        let (mx, my) = z.chunks(2).fold((0.0, 0.0), |(a, b), c| (a + c[0], b + c[1]));
        for c in z.chunks_mut(2) {
            c[0] -= mx / n;
            c[1] -= my / n;
        }
    }
}

fn reduction(mesh: &Mesh, init: &DiscreteDeformation) -> Result<(Reduction, Vec<f64>)> {
    let nodes = mesh.nodes();
    let scale = 1.0 + init.positions.iter().fold(0.0, |m: f64, p| m.max(p.max_abs()));
    match init.constraint {
        Constraint::AffineBoundary(f) => {
            let mut slot = vec![None; nodes.len()];
            let mut base = init.positions.clone();
            let mut z = Vec::new();
            let mut free = 0;
            for (n, &x) in nodes.iter().enumerate() {
                if mesh.is_boundary_node(n) {
                    let gap = (init.positions[n] - f * x).norm();
                    if gap > 1e-10 * scale {
                        return Err(Error::Precondition(format!(
                            "boundary node {n} is {gap} away from the affine data"
                        )));
                    }
                    base[n] = f * x;
                } else {
                    slot[n] = Some(free);
                    base[n] = Vec2::ZERO;
                    z.extend([init.positions[n].x, init.positions[n].y]);
                    free += 1;
                }
            }
            Ok((Reduction { base, slot, free, center: false }, z))
        }
        Constraint::PeriodicAffine(f) => {
            let (w, h) = (mesh.xs.len(), mesh.ys.len());
            let (nx, ny) = (w - 1, h - 1);
            let mut z = vec![0.0; 2 * nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    let n = mesh.node_index(i, j);
                    let d = init.positions[n] - f * nodes[n];
                    z[2 * (j * nx + i)] = d.x;
                    z[2 * (j * nx + i) + 1] = d.y;
                }
            }
            let mut slot = vec![None; nodes.len()];
            let mut base = vec![Vec2::ZERO; nodes.len()];
            for j in 0..h {
                for i in 0..w {
                    let n = mesh.node_index(i, j);
                    let m = (j % ny) * nx + (i % nx);
                    slot[n] = Some(m);
                    base[n] = f * nodes[n];
                    let d = init.positions[n] - f * nodes[n];
                    let gap = (d - Vec2::new(z[2 * m], z[2 * m + 1])).norm();
                    if gap > 1e-9 * scale {
                        return Err(Error::Precondition(format!(
                            "node {n} breaks periodicity of the displacement by {gap}"
                        )));
                    }
                }
            }
            Ok((Reduction { base, slot, free: nx * ny, center: true }, z))
        }
        Constraint::MeanZero => {
            let z = init.positions.iter().flat_map(|p| [p.x, p.y]).collect();
            let slot = (0..nodes.len()).map(Some).collect();
            Ok((
                Reduction { base: vec![Vec2::ZERO; nodes.len()], slot, free: nodes.len(), center: true },
                z,
            ))
        }
    }
}

fn run(mesh: &Mesh, density: &EnergyDensity, red: Reduction, z0: Vec<f64>, constraint: Constraint, opts: &SolverOptions) -> Result<Minimization> {
    let problem = Problem { mesh, density, red };
    let (e0, _) = problem.eval(&z0);
    if !e0.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let gtol = opts.tol * mesh.min_spacing() * (e0.abs() / mesh.area()).max(1.0);
    let lopts = LbfgsOptions {
        memory: opts.memory,
        max_iterations: opts.max_iterations,
        gtol,
        first_step: 0.1 * mesh.min_spacing(),
    };
    let out = lbfgs(&problem, z0, &lopts)?;
    let positions = problem.red.expand(&out.x);
    let stats = field_stats(mesh, &positions, density);
    Ok(Minimization {
        deformation: DiscreteDeformation { positions, constraint },
        energy: out.value,
        stats,
        iterations: out.iterations,
        converged: out.converged,
        residual: out.grad_inf,
        gtol,
        trace: out.trace,
    })
}

/// Quasi-Newton descent from `init`, which must satisfy its constraint and
/// have finite energy.
pub fn minimize(mesh: &Mesh, density: &EnergyDensity, init: &DiscreteDeformation, opts: &SolverOptions) -> Result<Minimization> {
    let (red, z0) = reduction(mesh, init)?;
    run(mesh, density, red, z0, init.constraint, opts)
}

/// Minimizes over the nodes with `fixed[n] == false`, all others held at `init`.
pub fn minimize_with_fixed(
    mesh: &Mesh,
    density: &EnergyDensity,
    init: &[Vec2],
    fixed: &[bool],
    opts: &SolverOptions,
) -> Result<Minimization> {
    let mut slot = vec![None; init.len()];
    let mut base = init.to_vec();
    let mut z = Vec::new();
    let mut free = 0;
    for n in 0..init.len() {
        if !fixed[n] {
            slot[n] = Some(free);
            base[n] = Vec2::ZERO;
            z.extend([init[n].x, init[n].y]);
            free += 1;
        }
    }
    run(mesh, density, Reduction { base, slot, free, center: false }, z, Constraint::MeanZero, opts)
}

/// Feasible starting point for `constraint` with macroscopic gradient `f`.
///
/// Inside `K` this is the rotating-squares interpolant for the decomposition
/// of least soft energy; otherwise, or if that start is infeasible, `F x`.
pub fn initial_deformation(mesh: &Mesh, f: Mat2, density: &EnergyDensity, constraint: Constraint) -> DiscreteDeformation {
    let affine = DiscreteDeformation::affine(mesh, f, constraint);
    let lambda = mesh.partition.lambda();
    let Ok(pairs) = decompose_in_k(f, lambda) else {
        return affine;
    };
    let best = pairs.iter().min_by(|a, b| {
        let ea = soft_gradients(a);
        let eb = soft_gradients(b);
        let va = density.soft_value(ea.0) + density.soft_value(ea.1);
        let vb = density.soft_value(eb.0) + density.soft_value(eb.1);
        va.total_cmp(&vb)
    });
    let Some(d) = best else {
        return affine;
    };
    let map = rotating_squares_map(d.s, d.r, mesh.partition, mesh.epsilon, Vec2::ZERO);
    let mut def = DiscreteDeformation::interpolate(mesh, &map, constraint);
    let nodes = mesh.nodes();
    let n = nodes.len() as f64;
    let shift = nodes
        .iter()
        .zip(&def.positions)
        .fold(Vec2::ZERO, |a, (&x, &p)| a + (p - f * x))
        * (1.0 / n);
    for p in def.positions.iter_mut() {
        *p -= shift;
    }
    if let Constraint::AffineBoundary(_) = constraint {
        for (i, p) in def.positions.iter_mut().enumerate() {
            if mesh.is_boundary_node(i) {
                *p = f * nodes[i];
            }
        }
    }
    if assemble_energy(mesh, &def.positions, density).0.is_finite() {
        def
    } else {
        affine
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub f: Mat2,
    pub translation: Vec2,
    /// Root-mean-square nodal deviation from the fitted map.
    pub residual: f64,
    pub dist_to_k: f64,
}

/// Least-squares affine map through the nodal positions.
pub fn best_affine_fit(mesh: &Mesh, def: &DiscreteDeformation) -> Result<AffineFit> {
    fit_affine(&mesh.nodes(), &def.positions, mesh.partition)
}

pub fn fit_affine(points: &[Vec2], values: &[Vec2], partition: CellPartition) -> Result<AffineFit> {
    let n = points.len() as f64;
    let xm = points.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / n);
    let pm = values.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / n);
    let mut xx = Mat2::ZERO;
    let mut px = Mat2::ZERO;
    for (&x, &p) in points.iter().zip(values) {
        xx += (x - xm).outer(x - xm);
        px += (p - pm).outer(x - xm);
    }
    let inv = xx
        .inverse()
        .ok_or_else(|| Error::Domain("sample points are collinear".into()))?;
    let f = px * inv;
    let translation = pm - f * xm;
    let residual = (points
        .iter()
        .zip(values)
        .map(|(&x, &p)| (p - f * x - translation).norm_sq())
        .sum::<f64>()
        / n)
        .sqrt();
    let dist_to_k = k_membership(f, partition.lambda())?.distance;
    Ok(AffineFit { f, translation, residual, dist_to_k })
}
