//! Grid search over the regularization pair `(λ1, λ2)`, preferring pairs whose
//! posterior draws are all stable at the training parameters.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::models::{integrate, InstabilityGuard, TimeGrid, Trajectory};
use crate::numeric::{mix_seed, CompensatedSum};
use crate::opinf::{
    sample_operators, solve_posterior, BlockKind, OperatorPosterior, ReducedDynamics, RegressionData, StructureFunction,
};

use crate::rom::sample_statistics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub n_d_check: usize,
}

impl Default for RegGrid {
    fn default() -> Self {
        let decades: Vec<f64> = (0..8).map(|i| 10f64.powi(-10 + 2 * i)).collect();
        Self {
            lambda1: decades.clone(),
            lambda2: decades,
            n_d_check: 20,
        }
    }
}

impl RegGrid {
    pub fn new(lambda1: Vec<f64>, lambda2: Vec<f64>, n_d_check: usize) -> Result<Self> {
        let grid = Self {
            lambda1,
            lambda2,
            n_d_check,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda1.is_empty() || self.lambda2.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for list in [&self.lambda1, &self.lambda2] {
            if list.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::InvalidArgument("regularization candidates must be positive".into()));
            }
            if list.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument("regularization candidates must be strictly ascending".into()));
            }
        }
        if self.n_d_check == 0 {
            return Err(Error::InvalidArgument("n_d_check must be positive".into()));
        }
        Ok(())
    }
}

/// Diagonal of `Γ`: `√λ1` on constant, linear and input columns, `√λ2` on
/// quadratic columns.
pub fn build_regularizer(lambda1: f64, lambda2: f64, structure: &StructureFunction) -> Result<Vec<f64>> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "regularization must be nonnegative, got ({lambda1}, {lambda2})"
        )));
    }
    let mut gamma = vec![0.0; structure.width()];
    for (idx, block) in structure.blocks().iter().enumerate() {
        let value = if block.kind == BlockKind::Quadratic { lambda2 } else { lambda1 }.sqrt();
        gamma[structure.block_columns(idx)].fill(value);
    }
    Ok(gamma)
}

/// Reduced training data the search evaluates candidate ROMs against.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub regression: &'a RegressionData,
    /// `r × n_t` reduced snapshots per training parameter; column 0 is the
    /// initial condition.
    pub reduced: &'a [DMatrix<f64>],
    pub params: &'a [Vec<f64>],
    pub grid: TimeGrid,
    pub guard: InstabilityGuard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_unstable_events: usize,
    /// The count stopped at the first unstable event.
    pub lower_bound: bool,
    /// Training error of the sample mean over stable draws.
    pub training_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegChoice {
    pub lambda1: f64,
    pub lambda2: f64,
    pub regularizer: Vec<f64>,
    pub training_error: Option<f64>,
    pub all_draws_stable: bool,
    pub posterior: OperatorPosterior,
    pub diagnostics: Vec<PairDiagnostics>,
}

struct PairOutcome {
    diagnostics: PairDiagnostics,
    posterior: Option<(Vec<f64>, OperatorPosterior)>,
}

/// Evaluates every pair of the grid and returns the stable pair with the
/// smallest training error.
///
/// When no pair is fully stable, the pair with the fewest unstable
/// (draw, parameter) events wins, then the smaller training error over stable
/// draws, then the larger `λ2`, then the larger `λ1`.
pub fn select_regularization(
    training: &TrainingSet<'_>,
    structure: &StructureFunction,
    grid: &RegGrid,
    seed: u64,
) -> Result<RegChoice> {
    grid.validate()?;
    check_dim("training parameter count", training.params.len(), training.reduced.len())?;
    if training.params.is_empty() {
        return Err(Error::InsufficientData("no training parameters".into()));
    }
    check_dim("regression width", structure.width(), training.regression.width())?;

    let pairs: Vec<(usize, usize)> = (0..grid.lambda1.len())
        .flat_map(|i| (0..grid.lambda2.len()).map(move |j| (i, j)))
        .collect();
    let evaluate = |stop_early: bool| -> Result<Vec<PairOutcome>> {
        pairs
            .par_iter()
            .map(|&(i, j)| evaluate_pair(training, structure, grid, (i, j), seed, stop_early))
            .collect()
    };

    let mut outcomes = evaluate(true)?;
    let stable_best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.diagnostics.n_unstable_events == 0 && o.posterior.is_some())
        .min_by(|(_, a), (_, b)| {
            let ea = a.diagnostics.training_error.unwrap_or(f64::INFINITY);
            let eb = b.diagnostics.training_error.unwrap_or(f64::INFINITY);
            ea.total_cmp(&eb)
        })
        .map(|(idx, _)| idx);

    let (best, all_stable) = match stable_best {
        Some(idx) => (idx, true),
        None => {
            outcomes = evaluate(false)?;
            let idx = (0..outcomes.len())
                .filter(|&i| outcomes[i].posterior.is_some())
                .min_by(|&a, &b| {
                    let (da, db) = (&outcomes[a].diagnostics, &outcomes[b].diagnostics);
                    da.n_unstable_events
                        .cmp(&db.n_unstable_events)
                        .then_with(|| {
                            let ea = da.training_error.unwrap_or(f64::INFINITY);
                            let eb = db.training_error.unwrap_or(f64::INFINITY);
                            ea.total_cmp(&eb)
                        })
                        .then_with(|| db.lambda2.total_cmp(&da.lambda2))
                        .then_with(|| db.lambda1.total_cmp(&da.lambda1))
                })
                .ok_or_else(|| Error::NumericalDegeneracy("no regularization pair yields a posterior".into()))?;
            (idx, false)
        }
    };

    let diagnostics = outcomes.iter().map(|o| o.diagnostics.clone()).collect();
    let chosen = outcomes.swap_remove(best);
    let (regularizer, posterior) = chosen.posterior.expect("filtered above");
    Ok(RegChoice {
        lambda1: chosen.diagnostics.lambda1,
        lambda2: chosen.diagnostics.lambda2,
        regularizer,
        training_error: chosen.diagnostics.training_error,
        all_draws_stable: all_stable,
        posterior,
        diagnostics,
    })
}

fn evaluate_pair(
    training: &TrainingSet<'_>,
    structure: &StructureFunction,
    grid: &RegGrid,
    (i1, i2): (usize, usize),
    seed: u64,
    stop_early: bool,
) -> Result<PairOutcome> {
    let (lambda1, lambda2) = (grid.lambda1[i1], grid.lambda2[i2]);
    let gamma = build_regularizer(lambda1, lambda2, structure)?;
    let failed = |n_events| PairOutcome {
        diagnostics: PairDiagnostics {
            lambda1,
            lambda2,
            n_unstable_events: n_events,
            lower_bound: false,
            training_error: None,
        },
        posterior: None,
    };
    let total_events = grid.n_d_check * training.params.len();
    let posterior = match solve_posterior(training.regression, &gamma) {
        Ok(p) => p,
        Err(Error::RankDeficient { .. } | Error::NumericalDegeneracy(_)) => return Ok(failed(total_events)),
        Err(e) => return Err(e),
    };
    let draws = match sample_operators(&posterior, grid.n_d_check, mix_seed(seed, &[i1 as u64, i2 as u64])) {
        Ok(d) => d,
        Err(Error::NumericalDegeneracy(_)) => return Ok(failed(total_events)),
        Err(e) => return Err(e),
    };

    let mut n_unstable = 0;
    let mut lower_bound = false;
    let mut stable_per_param: Vec<Vec<Trajectory>> = Vec::with_capacity(training.params.len());
    'params: for (xi, reduced) in training.params.iter().zip(training.reduced) {
        let q0: Vec<f64> = reduced.column(0).iter().copied().collect();
        let mut stable = Vec::with_capacity(draws.len());
        for op in &draws {
            let dynamics = ReducedDynamics::new(op, structure, xi, None);
            let traj = integrate(&dynamics, &q0, &training.grid, &training.guard)?;
            if traj.stable {
                stable.push(traj);
            } else {
                n_unstable += 1;
                if stop_early {
                    lower_bound = true;
                    break 'params;
                }
            }
        }
        stable_per_param.push(stable);
    }

    let training_error = if lower_bound {
        None
    } else {
        training_error(training.reduced, &stable_per_param)
    };
    Ok(PairOutcome {
        diagnostics: PairDiagnostics {
            lambda1,
            lambda2,
            n_unstable_events: n_unstable,
            lower_bound,
            training_error,
        },
        posterior: Some((gamma, posterior)),
    })
}

/// Mean over `(i, j)` of `‖q̂_ij − mean_ij‖² / ‖q̂_ij‖²`, where `mean_ij` is the
/// sample mean of the given trajectories at parameter `i`. Parameters with no
/// trajectories and snapshots with norm below `1e-14` are skipped.
pub fn training_error(reduced: &[DMatrix<f64>], trajectories: &[Vec<Trajectory>]) -> Option<f64> {
    let mut sum = CompensatedSum::new();
    let mut count = 0usize;
    for (snap, trajs) in reduced.iter().zip(trajectories) {
        let members: Vec<&Trajectory> = trajs.iter().collect();
        let Some((mean, _)) = sample_statistics(&members) else {
            continue;
        };
        for j in 0..snap.ncols() {
            let denom = snap.column(j).norm_squared();
            if denom.sqrt() < 1e-14 {
                continue;
            }
            sum.add((snap.column(j) - mean.column(j)).norm_squared() / denom);
            count += 1;
        }
    }
    (count > 0).then(|| sum.value() / count as f64)
}

/// Writes `lambda1,lambda2,n_unstable_events,e_train,lower_bound`.
pub fn write_diagnostics_csv<W: Write>(diagnostics: &[PairDiagnostics], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["lambda1", "lambda2", "n_unstable_events", "e_train", "lower_bound"])?;
    for d in diagnostics {
        csv.write_record([
            format!("{:e}", d.lambda1),
            format!("{:e}", d.lambda2),
            d.n_unstable_events.to_string(),
            d.training_error.map_or_else(String::new, |e| format!("{e:e}")),
            d.lower_bound.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Coefficient;
    use crate::opinf::Block;

    fn heat_like(r: usize) -> StructureFunction {
        StructureFunction::new(
            vec![
                Block::new(BlockKind::Constant, Coefficient::Param(0)),
                Block::new(BlockKind::Constant, Coefficient::Param(1)),
                Block::new(BlockKind::Linear, Coefficient::Param(0)),
                Block::new(BlockKind::Linear, Coefficient::Param(1)),
                Block::new(BlockKind::Quadratic, Coefficient::Param(1)),
            ],
            r,
            0,
        )
        .unwrap()
    }

    #[test]
    fn default_grid_is_eight_decades() {
        let g = RegGrid::default();
        assert_eq!(g.lambda1.len(), 8);
        assert_eq!(g.lambda1[0], 1e-10);
        assert_eq!(g.lambda2[7], 1e4);
        assert_eq!(g.n_d_check, 20);
        g.validate().unwrap();
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(RegGrid::new(vec![], vec![1.0], 2), Err(Error::EmptyGrid)));
        assert!(RegGrid::new(vec![2.0, 1.0], vec![1.0], 2).is_err());
        assert!(RegGrid::new(vec![1.0], vec![1.0], 0).is_err());
    }

    #[test]
    fn regularizer_layout() {
        let g = build_regularizer(4.0, 9.0, &heat_like(2)).unwrap();
        assert_eq!(g, vec![2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0]);
        let uniform = build_regularizer(0.25, 0.25, &heat_like(3)).unwrap();
        assert!(uniform.iter().all(|&v| v == 0.5));
        assert!(build_regularizer(-1.0, 0.0, &heat_like(2)).is_err());
    }

    #[test]
    fn penalty_touches_only_quadratic_columns() {
        let s = heat_like(2);
        let g = build_regularizer(0.0, 2.0, &s).unwrap();
        let o = DMatrix::from_fn(2, s.width(), |i, j| (i + j) as f64 - 1.5);
        let penalty: f64 = (0..2).map(|k| (0..s.width()).map(|i| (g[i] * o[(k, i)]).powi(2)).sum::<f64>()).sum();
        let h: f64 = (0..2).map(|k| (6..9).map(|i| o[(k, i)].powi(2)).sum::<f64>()).sum();
        assert!((penalty - 2.0 * h).abs() < 1e-12);
    }

    #[test]
    fn training_error_skips_zero_snapshots() {
        let snap = DMatrix::from_row_slice(1, 3, &[0.0, 2.0, 4.0]);
        let traj = Trajectory {
            grid: TimeGrid::new(0.0, 1.0, 3).unwrap(),
            states: vec![vec![0.0], vec![1.0], vec![4.0]],
            stable: true,
            blowup_time: None,
        };
        let e = training_error(&[snap], &[vec![traj]]).unwrap();
        assert!((e - 0.125).abs() < 1e-15);
        assert_eq!(training_error(&[DMatrix::zeros(1, 3)], &[vec![]]), None);
    }
}
