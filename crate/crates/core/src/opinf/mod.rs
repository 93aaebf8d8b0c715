//! Affine-parametric operator inference and its Bayesian extension.

mod data;
mod derivatives;
mod posterior;
mod realization;
mod structure;

pub use data::{assemble_data_matrix, RegressionData};
pub use derivatives::estimate_time_derivatives;
pub use posterior::{sample_operators, sample_realizations, solve_posterior, OperatorPosterior};
pub use realization::{ReducedDynamics, RomRealization};
pub use structure::{Block, BlockKind, StructureFunction};
