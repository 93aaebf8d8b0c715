use bayesrom::models::{Coefficient, InstabilityGuard, TimeGrid};
use bayesrom::opinf::{solve_posterior, Block, BlockKind, RegressionData, StructureFunction};
use bayesrom::regsearch::{build_regularizer, select_regularization, write_diagnostics_csv, RegGrid, TrainingSet};
use nalgebra::DMatrix;

/// Exact samples of `dq/dt = ξ [[-1, 0.5], [-0.5, -1]] q` from `q(0) = (1, 0)`.
fn linear_data(params: &[Vec<f64>], grid: &TimeGrid) -> Vec<DMatrix<f64>> {
    params
        .iter()
        .map(|xi| {
            let (w, s) = (xi[0] * 0.5, xi[0]);
            DMatrix::from_fn(2, grid.n_t, |k, j| {
                let t = grid.time(j);
                let (c, sn) = ((w * t).cos(), (w * t).sin());
                let decay = (-s * t).exp();
                let q = [decay * c, -decay * sn];
                q[k]
            })
        })
        .collect()
}

fn setup() -> (StructureFunction, Vec<Vec<f64>>, TimeGrid, Vec<DMatrix<f64>>) {
    let structure = StructureFunction::new(vec![Block::new(BlockKind::Linear, Coefficient::Param(0))], 2, 0).unwrap();
    let params = vec![vec![0.5], vec![1.5]];
    let grid = TimeGrid::with_substeps(0.0, 2.0, 41, 4).unwrap();
    let reduced = linear_data(&params, &grid);
    (structure, params, grid, reduced)
}

#[test]
fn selection_is_exhaustive_argmin_over_stable_pairs() {
    let (structure, params, grid, reduced) = setup();
    let regression = RegressionData::from_snapshots(&reduced, None, &params, &structure, grid.spacing()).unwrap();
    let training = TrainingSet {
        regression: &regression,
        reduced: &reduced,
        params: &params,
        grid,
        guard: InstabilityGuard::new(100.0).unwrap(),
    };
    let reg_grid = RegGrid::new(vec![1e-8, 1e-4, 1.0, 1e2], vec![1e-6, 1.0], 10).unwrap();
    let choice = select_regularization(&training, &structure, &reg_grid, 3).unwrap();

    assert_eq!(choice.diagnostics.len(), 8);
    assert!(choice.all_draws_stable);
    let best = choice
        .diagnostics
        .iter()
        .filter(|d| d.n_unstable_events == 0)
        .min_by(|a, b| a.training_error.unwrap().total_cmp(&b.training_error.unwrap()))
        .unwrap();
    assert_eq!((choice.lambda1, choice.lambda2), (best.lambda1, best.lambda2));
    assert_eq!(choice.training_error, best.training_error);

    let gamma = build_regularizer(choice.lambda1, choice.lambda2, &structure).unwrap();
    assert_eq!(gamma, choice.regularizer);
    let direct = solve_posterior(&regression, &gamma).unwrap();
    assert_eq!(direct.means(), choice.posterior.means());

    let mut csv = Vec::new();
    write_diagnostics_csv(&choice.diagnostics, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("lambda1,lambda2,n_unstable_events,e_train,lower_bound"));
}

#[test]
fn single_pair_grid_returns_that_pair() {
    let (structure, params, grid, reduced) = setup();
    let regression = RegressionData::from_snapshots(&reduced, None, &params, &structure, grid.spacing()).unwrap();
    let training = TrainingSet {
        regression: &regression,
        reduced: &reduced,
        params: &params,
        grid,
        guard: InstabilityGuard::new(100.0).unwrap(),
    };
    let reg_grid = RegGrid::new(vec![0.3], vec![7.0], 5).unwrap();
    let choice = select_regularization(&training, &structure, &reg_grid, 0).unwrap();
    assert_eq!((choice.lambda1, choice.lambda2), (0.3, 7.0));
}

#[test]
fn small_regularization_recovers_generator() {
    let (structure, params, grid, reduced) = setup();
    let regression = RegressionData::from_snapshots(&reduced, None, &params, &structure, grid.spacing()).unwrap();
    let post = solve_posterior(&regression, &build_regularizer(1e-10, 1e-10, &structure).unwrap()).unwrap();
    // dq/dt = ξ [[-1, 0.5], [-0.5, -1]] q; derivative estimates are accurate to O(Δt²).
    let expected = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.5, -1.0]);
    let err = (post.means() - &expected).norm() / expected.norm();
    assert!(err < 1e-2, "{err}");
}
