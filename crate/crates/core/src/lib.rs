//! Numerical laboratory for stiff/soft checkerboard composites.
//!
//! Rigid-ish squares (`Y1`, `Y3`) alternate with soft rectangles (`Y2`, `Y4`)
//! on an ε-periodic lattice. The crate builds the rotating-squares mechanism
//! exactly, characterizes the attainable macroscopic gradients, evaluates
//! homogenized energies, fits rotations on cross-shaped stiff clusters and
//! minimizes discretized energies on tile-aligned meshes.

pub mod effective;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod linalg;
pub mod polygon;
pub mod rigidity;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{Mat2, Rotation, Vec2};
