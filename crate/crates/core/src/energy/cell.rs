use super::density::{EnergyDensity, StiffModel};
use super::hom::soft_gradients;
use crate::effective::{decompose_in_k, Decomposition};
use crate::error::{check_positive, Error, Result};
use crate::geometry::Rect;
use crate::kinematics::rotating_squares_map;
use crate::linalg::{Mat2, Vec2};
use crate::solver::{
    assemble_energy, build_mesh, initial_deformation, minimize, minimize_with_fixed, Constraint, Mesh, SolverOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSolution {
    /// Discrete minimum of the cell energy, `+∞` if no finite competitor exists.
    pub value: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    /// Rotation pair of the optimal two-rotation ansatz (rigid stiff phase).
    pub decomposition: Option<Decomposition>,
}

impl CellSolution {
    fn infinite() -> Self {
        CellSolution {
            value: f64::INFINITY,
            converged: true,
            residual: 0.0,
            iterations: 0,
            decomposition: None,
        }
    }

    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::ConvergenceFailure {
                residual: self.residual,
                iterations: self.iterations,
            })
        }
    }
}

const PERTURBATION_SEED: u64 = 0x5eed;

/// Single-cell minimum of `∫_Y W(y, F + ∇ψ)` over periodic `ψ` on an
/// `mesh_n × mesh_n` tile-aligned grid.
///
/// With a rigid stiff phase the stiff tiles follow a rotation pair
/// decomposing `F`, and only the nodes inside soft tiles move. With an
/// elastic stiff phase `epsilon` sets the stiffness `ε^{-β}`.
pub fn solve_cell_formula(
    f: Mat2,
    lambda: f64,
    density: &EnergyDensity,
    mesh_n: usize,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<CellSolution> {
    if mesh_n < 4 || !mesh_n.is_multiple_of(2) {
        return Err(Error::ParameterDomain {
            name: "mesh_n",
            value: mesh_n as f64,
            expected: "an even integer >= 4",
        });
    }
    match density.stiff {
        StiffModel::Rigid => rigid_cell(f, lambda, density, mesh_n, opts),
        StiffModel::Elastic { .. } => {
            check_positive("epsilon", epsilon)?;
            let mesh = build_mesh(Rect::new(0.0, 0.0, epsilon, epsilon), epsilon, mesh_n / 2, lambda)?;
            let c = Constraint::PeriodicAffine(f);
            let init = initial_deformation(&mesh, f, density, c);
            match minimize(&mesh, density, &init, opts) {
                Ok(m) => Ok(CellSolution {
                    value: m.energy / mesh.area(),
                    converged: m.converged,
                    residual: m.residual,
                    iterations: m.iterations,
                    decomposition: None,
                }),
                Err(Error::InfeasibleStart) => Ok(CellSolution::infinite()),
                Err(e) => Err(e),
            }
        }
    }
}

/// Nodes touching a stiff tile, counting the periodic neighbours across the
/// cell boundary.
fn stiff_closure(mesh: &Mesh) -> Vec<bool> {
    let mut fixed: Vec<bool> = (0..mesh.node_count()).map(|n| mesh.is_boundary_node(n)).collect();
    for e in 0..mesh.element_count() {
        if mesh.tags[e].is_stiff() {
            for n in mesh.element_nodes(e) {
                fixed[n] = true;
            }
        }
    }
    fixed
}

fn rigid_cell(f: Mat2, lambda: f64, density: &EnergyDensity, n: usize, opts: &SolverOptions) -> Result<CellSolution> {
    let pairs = match decompose_in_k(f, lambda) {
        Ok(p) => p,
        Err(Error::NotInK { .. }) => return Ok(CellSolution::infinite()),
        Err(e) => return Err(e),
    };
    let mesh = build_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 1.0, n / 2, lambda)?;
    let fixed = stiff_closure(&mesh);
    let h = mesh.min_spacing();
    let mut best = CellSolution::infinite();
    for d in pairs {
        let (a, b) = soft_gradients(&d);
        if !(a.det() > 0.0 && b.det() > 0.0) {
            continue;
        }
        let map = rotating_squares_map(d.s, d.r, mesh.partition, 1.0, Vec2::ZERO);
        let mut pos: Vec<Vec2> = mesh.nodes().into_iter().map(|x| map.eval(x)).collect();
        let plain = pos.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
        for (p, &fx) in pos.iter_mut().zip(&fixed) {
            if !fx {
                *p += Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (1e-3 * h);
            }
        }
        if !assemble_energy(&mesh, &pos, density).0.is_finite() {
            pos = plain;
        }
        let m = match minimize_with_fixed(&mesh, density, &pos, &fixed, opts) {
            Ok(m) => m,
            Err(Error::InfeasibleStart) => continue,
            Err(e) => return Err(e),
        };
        if m.energy < best.value {
            best = CellSolution {
                value: m.energy,
                converged: m.converged,
                residual: m.residual,
                iterations: m.iterations,
                decomposition: Some(d),
            };
        }
    }
    Ok(best)
}
