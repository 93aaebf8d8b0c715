use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{InstabilityGuard, TimeGrid};
use crate::opinf::RomRealization;
use crate::rom::{solve_ensemble, RomEnsembleSolution};

/// Instability probability `α` and total variance `ω` at one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionScore {
    pub alpha: f64,
    /// Absent exactly when every draw is unstable.
    pub omega: Option<f64>,
}

impl AcquisitionScore {
    pub fn from_ensemble(ensemble: &RomEnsembleSolution) -> Self {
        Self {
            alpha: ensemble.instability_probability(),
            omega: ensemble.total_variance(),
        }
    }
}

/// Integrates every draw at `ξ̃` and scores the ensemble.
pub fn score_candidate(
    realizations: &[RomRealization],
    xi: &[f64],
    q0_hat: &[f64],
    grid: &TimeGrid,
    guard: &InstabilityGuard,
) -> Result<AcquisitionScore> {
    let ensemble = solve_ensemble(realizations, xi, q0_hat, grid, guard, None)?;
    Ok(AcquisitionScore::from_ensemble(&ensemble))
}

/// Picks the next training candidate from `(candidate index, score)` pairs.
///
/// Among the candidates of largest `α`, the largest `ω` wins (lowest index on
/// ties); if that largest `α` is 1, one of them is drawn uniformly instead.
pub fn next_sample<R: Rng + ?Sized>(scores: &[(usize, AcquisitionScore)], rng: &mut R) -> Result<usize> {
    let max_alpha = scores
        .iter()
        .map(|(_, s)| s.alpha)
        .max_by(f64::total_cmp)
        .ok_or(Error::EmptyScores)?;
    let mut top: Vec<&(usize, AcquisitionScore)> = scores.iter().filter(|(_, s)| s.alpha == max_alpha).collect();
    top.sort_by_key(|(i, _)| *i);
    if max_alpha >= 1.0 {
        return Ok(top[rng.random_range(0..top.len())].0);
    }
    let mut best = top[0];
    for cand in &top[1..] {
        let (w_best, w) = (best.1.omega.unwrap_or(f64::NEG_INFINITY), cand.1.omega.unwrap_or(f64::NEG_INFINITY));
        if w > w_best {
            best = cand;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(alpha: f64, omega: f64) -> AcquisitionScore {
        AcquisitionScore {
            alpha,
            omega: (alpha < 1.0).then_some(omega),
        }
    }

    fn pick(table: &[(f64, f64)]) -> usize {
        let scores: Vec<_> = table.iter().enumerate().map(|(i, &(a, w))| (i, s(a, w))).collect();
        next_sample(&scores, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn all_stable_selects_by_variance() {
        assert_eq!(pick(&[(0.0, 1.0), (0.0, 5.0), (0.0, 2.0)]), 1);
    }

    #[test]
    fn unique_max_alpha_is_forced() {
        assert_eq!(pick(&[(0.0, 100.0), (0.1, 0.0), (0.0, 50.0)]), 1);
    }

    #[test]
    fn tied_alpha_broken_by_omega() {
        assert_eq!(pick(&[(0.0, 9.0), (0.5, 1.0), (0.5, 3.0)]), 2);
    }

    #[test]
    fn omega_ties_take_lowest_index() {
        let scores = vec![(7, s(0.0, 2.0)), (3, s(0.0, 2.0)), (5, s(0.0, 1.0))];
        assert_eq!(next_sample(&scores, &mut ChaCha8Rng::seed_from_u64(0)).unwrap(), 3);
    }

    #[test]
    fn all_unstable_samples_uniformly() {
        let scores = vec![(0, s(1.0, 0.0)), (4, s(0.2, 9.0)), (6, s(1.0, 0.0))];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [0usize; 7];
        for _ in 0..400 {
            seen[next_sample(&scores, &mut rng).unwrap()] += 1;
        }
        assert_eq!(seen[4], 0);
        assert!(seen[0] > 150 && seen[6] > 150);
    }

    #[test]
    fn empty_scores_error() {
        assert!(matches!(
            next_sample(&[], &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::EmptyScores)
        ));
    }
}
