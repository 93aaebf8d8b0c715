//! Evaluation of posterior ROM ensembles.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::models::{InputFn, InstabilityGuard, TimeGrid, Trajectory, VectorField};
use crate::numeric::CompensatedSum;
use crate::opinf::RomRealization;

/// `Ô d(q̂, u; ξ)`.
pub fn rom_rhs(realization: &RomRealization, xi: &[f64], q_hat: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let structure = realization.structure();
    check_dim("reduced state", structure.reduced_dim(), q_hat.len())?;
    let mut d = vec![0.0; structure.width()];
    structure.evaluate(q_hat, u, xi, &mut d)?;
    let op = realization.operator();
    Ok((0..op.nrows())
        .map(|k| op.row(k).iter().zip(&d).map(|(o, v)| o * v).sum())
        .collect())
}

/// Per-draw reduced trajectories and sample statistics over the stable draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomEnsembleSolution {
    pub trajectories: Vec<Trajectory>,
    stable: Vec<usize>,
    /// `r × n_t`, column `j` at time `t_j`.
    mean: Option<DMatrix<f64>>,
    variance: Option<DMatrix<f64>>,
}

impl RomEnsembleSolution {
    pub fn from_trajectories(trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::InvalidArgument("ensemble needs at least one draw".into()));
        }
        let stable: Vec<usize> = (0..trajectories.len()).filter(|&l| trajectories[l].stable).collect();
        let members: Vec<&Trajectory> = stable.iter().map(|&l| &trajectories[l]).collect();
        let (mean, variance) = match sample_statistics(&members) {
            Some((m, v)) => (Some(m), Some(v)),
            None => (None, None),
        };
        Ok(Self {
            trajectories,
            stable,
            mean,
            variance,
        })
    }

    pub fn n_draws(&self) -> usize {
        self.trajectories.len()
    }

    pub fn stable_indices(&self) -> &[usize] {
        &self.stable
    }

    pub fn n_unstable(&self) -> usize {
        self.n_draws() - self.stable.len()
    }

    /// `α = n_α / n_d`.
    pub fn instability_probability(&self) -> f64 {
        self.n_unstable() as f64 / self.n_draws() as f64
    }

    pub fn mean(&self) -> Option<&DMatrix<f64>> {
        self.mean.as_ref()
    }

    pub fn variance(&self) -> Option<&DMatrix<f64>> {
        self.variance.as_ref()
    }

    /// `ω = Σ_j Σ_k Var[q̂_k(t_j)]`, absent when no draw is stable.
    pub fn total_variance(&self) -> Option<f64> {
        self.variance
            .as_ref()
            .map(|v| v.iter().copied().collect::<CompensatedSum>().value())
    }
}

/// Sample mean and unbiased variance per coordinate and time over complete
/// trajectories. A single member has zero variance.
pub fn sample_statistics(members: &[&Trajectory]) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let first = members.first()?;
    let r = first.dim();
    let n_t = first.states.len();
    let n = members.len() as f64;
    let mut mean = DMatrix::zeros(r, n_t);
    let mut variance = DMatrix::zeros(r, n_t);
    for j in 0..n_t {
        for k in 0..r {
            let m = members.iter().map(|tr| tr.states[j][k]).collect::<CompensatedSum>().value() / n;
            mean[(k, j)] = m;
            if members.len() > 1 {
                let ss = members
                    .iter()
                    .map(|tr| (tr.states[j][k] - m).powi(2))
                    .collect::<CompensatedSum>()
                    .value();
                variance[(k, j)] = ss / (n - 1.0);
            }
        }
    }
    Some((mean, variance))
}

/// Integrates every realization at `ξ` from `q̂0`.
pub fn solve_ensemble(
    realizations: &[RomRealization],
    xi: &[f64],
    q0_hat: &[f64],
    grid: &TimeGrid,
    guard: &InstabilityGuard,
    input: Option<InputFn<'_>>,
) -> Result<RomEnsembleSolution> {
    if realizations.is_empty() {
        return Err(Error::InvalidArgument("ensemble needs at least one draw".into()));
    }
    let trajectories = realizations
        .par_iter()
        .map(|rom| rom.solve(xi, q0_hat, grid, guard, input))
        .collect::<Result<Vec<_>>>()?;
    RomEnsembleSolution::from_trajectories(trajectories)
}

/// Counts unstable draws without keeping trajectories, stopping at the first
/// instability when `stop_early` is set.
pub fn count_unstable(
    realizations: &[RomRealization],
    xi: &[f64],
    q0_hat: &[f64],
    grid: &TimeGrid,
    guard: &InstabilityGuard,
    stop_early: bool,
) -> Result<usize> {
    let mut count = 0;
    for rom in realizations {
        let dynamics = rom.dynamics(xi, None);
        check_dim("initial state", dynamics.dim(), q0_hat.len())?;
        let traj = crate::models::integrate(&dynamics, q0_hat, grid, guard)?;
        if !traj.stable {
            count += 1;
            if stop_early {
                break;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::PodBasis;
    use crate::models::Coefficient;
    use crate::opinf::{Block, BlockKind, StructureFunction};
    use nalgebra::DVector;
    use std::sync::Arc;

    fn constant_trajectory(values: &[f64], n_t: usize) -> Trajectory {
        Trajectory {
            grid: TimeGrid::new(0.0, 1.0, n_t).unwrap(),
            states: vec![values.to_vec(); n_t],
            stable: true,
            blowup_time: None,
        }
    }

    fn unstable(n_t: usize) -> Trajectory {
        Trajectory {
            grid: TimeGrid::new(0.0, 1.0, n_t).unwrap(),
            states: vec![],
            stable: false,
            blowup_time: Some(0.5),
        }
    }

    fn linear_rom(op: DMatrix<f64>) -> RomRealization {
        let r = op.nrows();
        let s = StructureFunction::new(
            vec![
                Block::new(BlockKind::Linear, Coefficient::Param(0)),
                Block::new(BlockKind::Quadratic, Coefficient::One),
            ],
            r,
            0,
        )
        .unwrap();
        let basis = PodBasis::from_parts(DMatrix::identity(r, r), DVector::zeros(r), vec![1.0; r]).unwrap();
        RomRealization::new(op, Arc::new(s), Arc::new(basis)).unwrap()
    }

    #[test]
    fn zero_operator_gives_zero_rhs() {
        let rom = linear_rom(DMatrix::zeros(2, 5));
        assert_eq!(rom_rhs(&rom, &[3.0], &[1.0, -2.0], &[]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rhs_scales_with_linear_coefficient() {
        let mut op = DMatrix::zeros(2, 5);
        op[(0, 0)] = 1.5;
        op[(1, 1)] = -0.5;
        op[(0, 1)] = 0.25;
        let rom = linear_rom(op);
        let q = [0.3, 0.7];
        let one = rom_rhs(&rom, &[1.0], &q, &[]).unwrap();
        let two = rom_rhs(&rom, &[2.0], &q, &[]).unwrap();
        for k in 0..2 {
            assert_eq!(two[k], 2.0 * one[k]);
        }
    }

    #[test]
    fn rhs_is_linear_in_operator() {
        let a = DMatrix::from_fn(2, 5, |i, j| (i + 2 * j) as f64 * 0.1 - 0.3);
        let b = DMatrix::from_fn(2, 5, |i, j| (3 * i + j) as f64 * -0.07 + 0.2);
        let q = [0.4, -1.2];
        let ra = rom_rhs(&linear_rom(a.clone()), &[0.9], &q, &[]).unwrap();
        let rb = rom_rhs(&linear_rom(b.clone()), &[0.9], &q, &[]).unwrap();
        let rs = rom_rhs(&linear_rom(a + b), &[0.9], &q, &[]).unwrap();
        for k in 0..2 {
            assert!((rs[k] - ra[k] - rb[k]).abs() <= 1e-13 * rs[k].abs().max(1.0));
        }
    }

    #[test]
    fn single_stable_draw_has_zero_variance() {
        let sol = RomEnsembleSolution::from_trajectories(vec![constant_trajectory(&[1.0, 2.0], 3)]).unwrap();
        assert_eq!(sol.mean().unwrap()[(1, 2)], 2.0);
        assert_eq!(sol.total_variance(), Some(0.0));
    }

    #[test]
    fn all_unstable_has_no_statistics() {
        let sol = RomEnsembleSolution::from_trajectories(vec![unstable(3), unstable(3)]).unwrap();
        assert!(sol.mean().is_none());
        assert!(sol.total_variance().is_none());
        assert_eq!(sol.instability_probability(), 1.0);
    }

    #[test]
    fn two_sample_variance() {
        let (a, b) = (1.0, 4.0);
        let sol = RomEnsembleSolution::from_trajectories(vec![
            constant_trajectory(&[a], 4),
            unstable(4),
            constant_trajectory(&[b], 4),
        ])
        .unwrap();
        assert_eq!(sol.stable_indices(), &[0, 2]);
        assert_eq!(sol.variance().unwrap()[(0, 3)], (a - b) * (a - b) / 2.0);
        assert_eq!(sol.total_variance().unwrap(), 4.0 * 4.5);
        assert!((sol.instability_probability() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn solve_ensemble_flags_unstable_draws() {
        let decay = linear_rom(DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]));
        let blow = linear_rom(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        let grid = TimeGrid::new(0.0, 2.0, 21).unwrap();
        let guard = InstabilityGuard::new(1e3).unwrap();
        let sol = solve_ensemble(&[decay.clone(), blow.clone(), decay.clone()], &[1.0], &[1.0], &grid, &guard, None).unwrap();
        assert_eq!(sol.n_unstable(), 1);
        assert_eq!(sol.total_variance(), Some(0.0));
        assert_eq!(count_unstable(&[blow.clone(), blow, decay], &[1.0], &[1.0], &grid, &guard, true).unwrap(), 1);
        assert!(solve_ensemble(&[], &[1.0], &[1.0], &grid, &guard, None).is_err());
    }
}
