use super::mesh::Mesh;
use crate::energy::density::EnergyDensity;
use crate::kinematics::PiecewiseAffineMap;
use crate::linalg::{Mat2, Vec2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest admissible quadrature determinant during descent.
pub const DET_BARRIER: f64 = 1e-8;

const PAR_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// Boundary nodes pinned to `F x`.
    AffineBoundary(Mat2),
    /// `u(x) = F x + w(x)` with `w` periodic on the mesh domain and of zero mean.
    PeriodicAffine(Mat2),
    /// Unconstrained up to the nodal mean, which is projected to zero.
    MeanZero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDeformation {
    pub positions: Vec<Vec2>,
    pub constraint: Constraint,
}

impl DiscreteDeformation {
    pub fn affine(mesh: &Mesh, f: Mat2, constraint: Constraint) -> Self {
        DiscreteDeformation {
            positions: mesh.nodes().into_iter().map(|x| f * x).collect(),
            constraint,
        }
    }

    /// Nodal interpolant of a piecewise-affine map.
    pub fn interpolate(mesh: &Mesh, map: &PiecewiseAffineMap, constraint: Constraint) -> Self {
        DiscreteDeformation {
            positions: mesh.nodes().into_iter().map(|x| map.eval(x)).collect(),
            constraint,
        }
    }

    pub fn mean(&self) -> Vec2 {
        let s = self.positions.iter().fold(Vec2::ZERO, |a, &p| a + p);
        s * (1.0 / self.positions.len() as f64)
    }
}

/// Deformation gradient of element `e` at each quadrature point.
pub fn element_gradients(mesh: &Mesh, positions: &[Vec2], e: usize) -> [Mat2; 4] {
    let nodes = mesh.element_nodes(e);
    let mut out = [Mat2::ZERO; 4];
    for (q, (_, g)) in mesh.quadrature(e).iter().enumerate() {
        let mut m = Mat2::ZERO;
        for a in 0..4 {
            m += positions[nodes[a]].outer(g[a]);
        }
        out[q] = m;
    }
    out
}

fn element_energy(mesh: &Mesh, positions: &[Vec2], density: &EnergyDensity, e: usize) -> (f64, [Vec2; 4]) {
    let nodes = mesh.element_nodes(e);
    let stiff = mesh.tags[e].is_stiff();
    let mut value = 0.0;
    let mut grad = [Vec2::ZERO; 4];
    for (w, g) in mesh.quadrature(e) {
        let mut f = Mat2::ZERO;
        for a in 0..4 {
            f += positions[nodes[a]].outer(g[a]);
        }
        if !(f.det() > DET_BARRIER) {
            return (f64::INFINITY, grad);
        }
        let (v, p) = if stiff {
            (density.stiff_value(f, mesh.epsilon), density.stiff_gradient(f, mesh.epsilon))
        } else {
            (density.soft_value(f), density.soft_gradient(f))
        };
        if !v.is_finite() {
            return (f64::INFINITY, grad);
        }
        value += w * v;
        for a in 0..4 {
            grad[a] += (p * g[a]) * w;
        }
    }
    (value, grad)
}

/// Discrete energy and its exact derivative with respect to nodal positions.
///
/// Element contributions are computed in parallel and summed in element
/// order, so the result does not depend on the thread count.
pub fn assemble_energy(mesh: &Mesh, positions: &[Vec2], density: &EnergyDensity) -> (f64, Vec<Vec2>) {
    let parts: Vec<(f64, [Vec2; 4])> = (0..mesh.element_count())
        .into_par_iter()
        .with_min_len(PAR_CHUNK)
        .map(|e| element_energy(mesh, positions, density, e))
        .collect();
    let mut value = 0.0;
    let mut grad = vec![Vec2::ZERO; mesh.node_count()];
    for (e, (v, g)) in parts.iter().enumerate() {
        if !v.is_finite() {
            return (f64::INFINITY, grad);
        }
        value += v;
        for (a, &n) in mesh.element_nodes(e).iter().enumerate() {
            grad[n] += g[a];
        }
    }
    (value, grad)
}

/// Phase-resolved summary of a deformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub energy: f64,
    pub soft_energy: f64,
    pub stiff_energy: f64,
    /// `∫ dist^p(∇u, SO(2))` over the stiff phase.
    pub stiff_dist_p: f64,
    pub min_det: f64,
}

pub fn field_stats(mesh: &Mesh, positions: &[Vec2], density: &EnergyDensity) -> FieldStats {
    let mut s = FieldStats {
        energy: 0.0,
        soft_energy: 0.0,
        stiff_energy: 0.0,
        stiff_dist_p: 0.0,
        min_det: f64::INFINITY,
    };
    for e in 0..mesh.element_count() {
        let stiff = mesh.tags[e].is_stiff();
        let grads = element_gradients(mesh, positions, e);
        for ((w, _), f) in mesh.quadrature(e).iter().zip(grads) {
            s.min_det = s.min_det.min(f.det());
            if stiff {
                s.stiff_energy += w * density.stiff_value(f, mesh.epsilon);
                s.stiff_dist_p += w * density.stiff_distance_p(f);
            } else {
                s.soft_energy += w * density.soft_value(f);
            }
        }
    }
    s.energy = s.soft_energy + s.stiff_energy;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::density::SoftModel;
    use crate::geometry::{CellPartition, Rect, Tile};
    use crate::kinematics::rotating_squares_map;
    use crate::linalg::Rotation;
    use crate::solver::mesh::build_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(eps: f64, res: usize, lambda: f64) -> Mesh {
        build_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), eps, res, lambda).unwrap()
    }

    #[test]
    fn rigid_motion_costs_nothing() {
        let mesh = unit(0.25, 2, 0.5);
        let q = Rotation::from_degrees(33.0);
        let pos: Vec<Vec2> = mesh.nodes().into_iter().map(|x| q.apply(x) + Vec2::new(2.0, -1.0)).collect();
        let (v, g) = assemble_energy(&mesh, &pos, &EnergyDensity::default());
        assert!(v.abs() < 1e-12);
        // the default soft density carries the stress 2Q at rotations, so only
        // the net force vanishes
        let net = g.iter().fold(Vec2::ZERO, |a, &b| a + b);
        assert!(net.norm() < 1e-10);
        let stress_free = EnergyDensity::default().with_soft(SoftModel::stress_free());
        let (v, g) = assemble_energy(&mesh, &pos, &stress_free);
        assert!(v.abs() < 1e-12 && g.iter().all(|g| g.norm() < 1e-10));
    }

    #[test]
    fn rotating_squares_energy_is_closed_form() {
        for res in [2, 3, 5] {
            let lambda = 0.4;
            let mesh = unit(0.5, res, lambda);
            let (s, r) = (Rotation::from_degrees(25.0), Rotation::from_degrees(-10.0));
            let map = rotating_squares_map(s, r, CellPartition::new(lambda).unwrap(), 0.5, Vec2::ZERO);
            let def = DiscreteDeformation::interpolate(&mesh, &map, Constraint::MeanZero);
            let d = EnergyDensity::default();
            let (v, _) = assemble_energy(&mesh, &def.positions, &d);
            let soft = lambda * (1.0 - lambda);
            let want = soft * d.soft_value(map.gradient(Tile::Y2)) + soft * d.soft_value(map.gradient(Tile::Y4));
            assert!((v - want).abs() < 1e-11, "{v} {want}");
            let st = field_stats(&mesh, &def.positions, &d);
            assert!(st.stiff_energy.abs() < 1e-20 && (st.energy - v).abs() < 1e-11);
        }
    }

    #[test]
    fn inverted_element_is_infinite() {
        let mesh = unit(0.5, 2, 0.5);
        let pos: Vec<Vec2> = mesh.nodes().into_iter().map(|x| Vec2::new(x.x, -x.y)).collect();
        assert_eq!(assemble_energy(&mesh, &pos, &EnergyDensity::default()).0, f64::INFINITY);
    }

    fn fd_check(d: &EnergyDensity, seed: u64) {
        let mesh = unit(0.5, 2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Mat2::new(0.9, 0.1, -0.05, 1.05);
        let pos: Vec<Vec2> = mesh
            .nodes()
            .into_iter()
            .map(|x| f * x + Vec2::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)))
            .collect();
        let (_, g) = assemble_energy(&mesh, &pos, d);
        let h = 1e-6;
        for _ in 0..20 {
            let n = rng.gen_range(0..mesh.node_count());
            for c in 0..2 {
                let mut p = pos.clone();
                let mut m = pos.clone();
                if c == 0 {
                    p[n].x += h;
                    m[n].x -= h;
                } else {
                    p[n].y += h;
                    m[n].y -= h;
                }
                let fd = (assemble_energy(&mesh, &p, d).0 - assemble_energy(&mesh, &m, d).0) / (2.0 * h);
                let an = if c == 0 { g[n].x } else { g[n].y };
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} {an}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        fd_check(&EnergyDensity::default(), 1);
        fd_check(&EnergyDensity::elastic(3.0, 2.0), 2);
    }

    #[test]
    fn assembly_is_deterministic() {
        let mesh = unit(0.125, 2, 0.5);
        let pos: Vec<Vec2> = mesh.nodes().into_iter().map(|x| x * 0.95 + Vec2::new(x.y * x.y, 0.0) * 0.01).collect();
        let d = EnergyDensity::default();
        let a = assemble_energy(&mesh, &pos, &d);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| assemble_energy(&mesh, &pos, &d));
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
    }
}
