use nalgebra::DMatrix;

use super::config::ProblemConfig;
use super::metrics::NormKind;
use crate::error::{Error, Result};
use crate::models::{
    build_burgers_fom, build_burgers_initial, build_heat_fom, build_heat_initial, integrate, BurgersGrid,
    InstabilityGuard, PolynomialAffineSystem, TimeGrid,
};
use crate::numeric::norm2;

/// Largest `h·λ` along the negative real axis treated as RK4-stable.
const RK4_STABLE_STEP: f64 = 2.5;

/// A benchmark full-order model with its initial condition and error norm.
#[derive(Debug, Clone)]
pub struct Problem {
    config: ProblemConfig,
    system: PolynomialAffineSystem,
    initial: Vec<f64>,
    norm: NormKind,
}

impl Problem {
    pub fn new(config: ProblemConfig) -> Result<Self> {
        let (system, initial, norm) = match config {
            ProblemConfig::Heat { n, length } => (build_heat_fom(n, length)?, build_heat_initial(n, length)?, NormKind::L2),
            ProblemConfig::Burgers { n_side } => {
                let grid = BurgersGrid::new(n_side)?;
                (
                    build_burgers_fom(n_side)?,
                    build_burgers_initial(n_side)?,
                    NormKind::L1L2 {
                        field_len: grid.field_len(),
                        cell_area: grid.cell_area(),
                    },
                )
            }
        };
        Ok(Self {
            config,
            system,
            initial,
            norm,
        })
    }

    pub fn config(&self) -> ProblemConfig {
        self.config
    }

    pub fn system(&self) -> &PolynomialAffineSystem {
        &self.system
    }

    /// Initial state; both benchmarks start from the same state for every `ξ`.
    pub fn initial_state(&self) -> &[f64] {
        &self.initial
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    /// Short descriptor of the discretization, used in cache keys.
    pub fn id(&self) -> String {
        match self.config {
            ProblemConfig::Heat { n, length } => format!("heat-n{n}-L{length}"),
            ProblemConfig::Burgers { n_side } => format!("burgers-n{n_side}"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.config {
            ProblemConfig::Heat { .. } => "heat",
            ProblemConfig::Burgers { .. } => "burgers",
        }
    }

    /// Substeps per sample interval that keep explicit RK4 inside its
    /// stability interval, never fewer than `minimum`.
    pub fn stable_substeps(&self, xi: &[f64], grid: &TimeGrid, minimum: usize) -> usize {
        let scale = self.initial.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let lambda = self.system.stiffness_bound(xi, scale);
        let needed = (grid.spacing() * lambda / RK4_STABLE_STEP).ceil() as usize;
        needed.max(minimum).max(1)
    }

    /// FOM snapshots `N × n_t` at `ξ`. With `substeps` absent the step is
    /// chosen by [`Problem::stable_substeps`].
    pub fn solve_fom(&self, xi: &[f64], grid: &TimeGrid, substeps: Option<usize>) -> Result<DMatrix<f64>> {
        let substeps = substeps.unwrap_or_else(|| self.stable_substeps(xi, grid, grid.substeps));
        let grid = grid.refined(substeps)?;
        let field = self.system.at(xi, None)?;
        let guard = InstabilityGuard::new(1e6 * norm2(&self.initial).max(1.0))?;
        let traj = integrate(&field, &self.initial, &grid, &guard)?;
        if !traj.stable {
            return Err(Error::NumericalDegeneracy(format!(
                "full-order integration at ξ = {xi:?} became unstable at t = {:?}",
                traj.blowup_time
            )));
        }
        let n = self.system.state_dim();
        Ok(DMatrix::from_fn(n, grid.n_t, |i, j| traj.states[j][i]))
    }
}
