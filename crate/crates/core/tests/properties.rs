use bayesrom::active::{lhs_baseline, multi_index, next_sample, occupies_distinct_strata, AcquisitionScore};
use bayesrom::basis::{compute_pod_from_matrix, ShiftMode, TruncationRule};
use bayesrom::experiment::{projection_error, total_error, ErrorIntegrals, NormKind};
use bayesrom::models::{TimeGrid, Trajectory};
use bayesrom::opinf::{solve_posterior, RegressionData};
use bayesrom::rom::RomEnsembleSolution;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ensemble(values: &[Vec<f64>], r: usize, stable: &[bool]) -> RomEnsembleSolution {
    let n_t = values[0].len() / r;
    let grid = TimeGrid::new(0.0, 1.0, n_t.max(2)).unwrap();
    let trajs = values
        .iter()
        .zip(stable)
        .map(|(v, &s)| Trajectory {
            grid,
            states: v.chunks(r).map(<[f64]>::to_vec).collect(),
            stable: s,
            blowup_time: None,
        })
        .collect();
    RomEnsembleSolution::from_trajectories(trajs).unwrap()
}

fn draws() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (1usize..4, 2usize..5, 2usize..8).prop_flat_map(|(r, n_t, m)| {
        (Just(r), prop::collection::vec(prop::collection::vec(-10.0f64..10.0, r * n_t), m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lhs_designs_are_valid(a in 2usize..12, b in 2usize..12, n_p_seed in 0usize..100, init_seed in 0usize..1000, seed in 0u64..1000) {
        let shape = [a, b];
        let n_p = 1 + n_p_seed % a.min(b);
        let initial = init_seed % (a * b);
        let design = lhs_baseline(&shape, n_p, initial, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(design.len(), n_p);
        prop_assert_eq!(design[0], initial);
        let mut sorted = design.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), n_p);
        prop_assert!(design.iter().all(|&i| i < a * b));
        prop_assert!(design.iter().all(|&i| multi_index(&shape, i).len() == 2));
        if n_p > 1 {
            prop_assert!(occupies_distinct_strata(&shape, &design));
        }
    }

    #[test]
    fn next_sample_picks_a_listed_candidate_of_top_alpha(
        table in prop::collection::vec((0usize..200, 0u8..5, 0.0f64..10.0), 1..12),
        seed in 0u64..100,
    ) {
        let scores: Vec<(usize, AcquisitionScore)> = table
            .iter()
            .map(|&(i, a, w)| {
                let alpha = f64::from(a) / 4.0;
                (i, AcquisitionScore { alpha, omega: (alpha < 1.0).then_some(w) })
            })
            .collect();
        let pick = next_sample(&scores, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let max_alpha = scores.iter().map(|s| s.1.alpha).fold(0.0, f64::max);
        prop_assert!(scores.iter().any(|(i, s)| *i == pick && s.alpha == max_alpha));
    }

    #[test]
    fn total_variance_scales_quadratically((r, values) in draws(), c in 0.1f64..10.0) {
        let stable = vec![true; values.len()];
        let base = ensemble(&values, r, &stable).total_variance().unwrap();
        let scaled: Vec<Vec<f64>> = values.iter().map(|v| v.iter().map(|x| x * c).collect()).collect();
        let omega = ensemble(&scaled, r, &stable).total_variance().unwrap();
        prop_assert!((omega - c * c * base).abs() <= 1e-10 * omega.max(1e-300));
    }

    #[test]
    fn total_variance_ignores_common_offset((r, values) in draws(), offset in -100.0f64..100.0) {
        let stable = vec![true; values.len()];
        let base = ensemble(&values, r, &stable).total_variance().unwrap();
        let shifted: Vec<Vec<f64>> = values.iter().map(|v| v.iter().map(|x| x + offset).collect()).collect();
        let omega = ensemble(&shifted, r, &stable).total_variance().unwrap();
        prop_assert!((omega - base).abs() <= 1e-8 * base.max(1.0));
    }

    #[test]
    fn total_variance_invariant_under_orthonormal_rotation((r, values) in draws(), seed in 0u64..1000) {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = DMatrix::<f64>::from_fn(r, r, |_, _| rng.sample(StandardNormal)).qr().q();
        let stable = vec![true; values.len()];
        let base = ensemble(&values, r, &stable).total_variance().unwrap();
        let rotated: Vec<Vec<f64>> = values
            .iter()
            .map(|v| v.chunks(r).flat_map(|s| (&q * nalgebra::DVector::from_column_slice(s)).as_slice().to_vec()).collect())
            .collect();
        let omega = ensemble(&rotated, r, &stable).total_variance().unwrap();
        prop_assert!((omega - base).abs() <= 1e-10 * base.max(1e-300));
    }

    #[test]
    fn selection_invariant_to_common_omega_scale(
        table in prop::collection::vec((0u8..4, 0.0f64..10.0), 1..10),
        c in 1e-3f64..1e3,
        seed in 0u64..100,
    ) {
        let make = |k: f64| -> Vec<(usize, AcquisitionScore)> {
            table
                .iter()
                .enumerate()
                .map(|(i, &(a, w))| {
                    let alpha = f64::from(a) / 4.0;
                    (i, AcquisitionScore { alpha, omega: Some(w * k) })
                })
                .collect()
        };
        let a = next_sample(&make(1.0), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = next_sample(&make(c), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn instability_probability_grows_with_unstable_draws((r, values) in draws(), k in 0usize..8) {
        let m = values.len();
        let mut stable = vec![true; m];
        let mut last = 0.0;
        for i in 0..=k.min(m - 1) {
            stable[i] = false;
            let alpha = ensemble(&values, r, &stable).instability_probability();
            prop_assert!(alpha > last);
            prop_assert!((alpha - (i + 1) as f64 / m as f64).abs() < 1e-15);
            last = alpha;
        }
    }

    #[test]
    fn ridge_mean_shrinks_with_regularization(seed in 0u64..500, n in 5usize..40, d in 2usize..10) {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal));
        let targets = DMatrix::from_fn(n, 1, |_, _| rng.sample(StandardNormal));
        let reg = RegressionData::new(data, targets, (0..n).map(|j| (0, j)).collect()).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [1e-6, 1e-3, 1.0, 1e3] {
            let post = solve_posterior(&reg, &vec![f64::sqrt(lambda); d]).unwrap();
            let norm = post.means().norm();
            prop_assert!(norm <= last * (1.0 + 1e-12));
            last = norm;
        }
    }

    #[test]
    fn single_candidate_total_error_is_its_relative_error(
        fom in prop::collection::vec(-5.0f64..5.0, 12),
        rom in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        let f = DMatrix::from_vec(3, 4, fom);
        prop_assume!(f.norm() > 1e-3);
        let a = DMatrix::from_vec(3, 4, rom);
        let e = ErrorIntegrals::between(&f, &a, NormKind::L2, 0.1).unwrap();
        let total = total_error(&[e]).unwrap();
        prop_assert!((total - e.relative().unwrap()).abs() <= 1e-14 * total.max(1.0));
    }
}

#[test]
fn projection_error_vanishes_for_spanning_basis() {
    let snaps = DMatrix::from_fn(30, 6, |i, j| ((i + 1) as f64 * 0.1 * (j + 1) as f64).sin());
    let basis = compute_pod_from_matrix(&snaps, ShiftMode::MeanSnapshot, TruncationRule::ResidualEnergyBelow(1e-15)).unwrap();
    let err = projection_error(&basis, &[&snaps], NormKind::L2, 0.1).unwrap();
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn projection_error_matches_explicit_projector() {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let low = DMatrix::from_fn(40, 3, |_, _| rng.sample::<f64, _>(StandardNormal))
        * DMatrix::from_fn(3, 12, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noisy = &low + DMatrix::from_fn(40, 12, |_, _| 1e-2 * rng.sample::<f64, _>(StandardNormal));
    let basis = compute_pod_from_matrix(&noisy, ShiftMode::MeanSnapshot, TruncationRule::CumulativeEnergyAbove(0.99)).unwrap();
    let test = DMatrix::from_fn(40, 5, |_, _| rng.sample::<f64, _>(StandardNormal));

    let v = basis.basis();
    let qbar = basis.shift();
    let mut projected = test.clone();
    for mut col in projected.column_iter_mut() {
        let centered = &col - qbar;
        let p = qbar + v * (v.transpose() * centered);
        col.copy_from(&p);
    }
    let dt = 0.25;
    let trap = |m: &DMatrix<f64>| {
        let sq: Vec<f64> = m.column_iter().map(|c| c.norm_squared()).collect();
        sq.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum::<f64>()
    };
    let num = trap(&(&test - &projected));
    let den = trap(&test);
    let expected = ((num * num) / (den * den)).sqrt();
    let got = projection_error(&basis, &[&test], NormKind::L2, dt).unwrap();
    assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
}
