//! Full-order models: polynomial affine-parametric systems, the two benchmark
//! discretizations, and fixed-step time integration with instability detection.

mod burgers;
mod heat;
mod integrate;
mod system;

pub use burgers::{build_burgers_fom, build_burgers_initial, BurgersGrid};
pub use heat::{build_heat_fom, build_heat_initial, heat_nodes};
pub use integrate::{integrate, InstabilityGuard, TimeGrid, Trajectory, VectorField};
pub use system::{
    AffineTerm, Coefficient, InputFn, PolynomialAffineSystem, QuadraticOperator, SparseMatrix,
    SystemAt,
};
