//! Energy densities, the homogenized density and the numerical cell formula.

pub mod cell;
pub mod density;
pub mod hom;

pub use cell::{solve_cell_formula, CellSolution};
pub use density::{eval_density, project_to_rotations, EnergyDensity, SoftModel, StiffModel};
pub use hom::{eval_w_hom, eval_w_hom_lsc, laminate_qc, soft_gradients};
