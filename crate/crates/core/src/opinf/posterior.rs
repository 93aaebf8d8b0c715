use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::data::RegressionData;
use super::realization::RomRealization;
use super::structure::StructureFunction;
use crate::basis::PodBasis;
use crate::error::{check_dim, Error, Result};

/// Independent Gaussian posteriors `N(μ_k, Σ_k)` over the rows of the
/// operator matrix, with `Σ_k = σ_k² (DᵀD + Γ²)⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorPosterior {
    /// Row `k` is `μ_k`.
    means: DMatrix<f64>,
    noise_variances: Vec<f64>,
    /// `(DᵀD + Γ²)⁻¹`, shared by every row.
    unscaled_covariance: DMatrix<f64>,
    regularizer: Vec<f64>,
    n_rows: usize,
}

impl OperatorPosterior {
    pub fn reduced_dim(&self) -> usize {
        self.means.nrows()
    }

    pub fn width(&self) -> usize {
        self.means.ncols()
    }

    pub fn means(&self) -> &DMatrix<f64> {
        &self.means
    }

    pub fn mean(&self, k: usize) -> DVector<f64> {
        self.means.row(k).transpose()
    }

    pub fn noise_variance(&self, k: usize) -> f64 {
        self.noise_variances[k]
    }

    pub fn noise_variances(&self) -> &[f64] {
        &self.noise_variances
    }

    pub fn covariance(&self, k: usize) -> DMatrix<f64> {
        &self.unscaled_covariance * self.noise_variances[k]
    }

    pub fn unscaled_covariance(&self) -> &DMatrix<f64> {
        &self.unscaled_covariance
    }

    /// Diagonal of `Γ`.
    pub fn regularizer(&self) -> &[f64] {
        &self.regularizer
    }

    /// Lower Cholesky factor of `(DᵀD + Γ²)⁻¹ + jitter·I`, with the jitter
    /// starting at `1e-14 · trace / d` and growing tenfold for up to six attempts.
    pub fn sampling_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.width();
        let base = 1e-14 * self.unscaled_covariance.trace() / d as f64;
        let mut jitter = base;
        for _ in 0..6 {
            let mut m = self.unscaled_covariance.clone();
            for i in 0..d {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = m.cholesky() {
                return Ok(chol.l());
            }
            jitter *= 10.0;
        }
        Err(Error::NumericalDegeneracy(format!(
            "posterior covariance is not positive definite after jitter up to {:e}",
            jitter / 10.0
        )))
    }
}

/// Solves the regularized regressions for every row `k` through one QR
/// factorization of the stacked matrix `[D; Γ]`.
pub fn solve_posterior(data: &RegressionData, regularizer: &[f64]) -> Result<OperatorPosterior> {
    let n = data.n_rows();
    let d = data.width();
    let r = data.reduced_dim();
    check_dim("regularizer length", d, regularizer.len())?;
    if let Some(bad) = regularizer.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidArgument(format!("regularizer entries must be finite and nonnegative, got {bad}")));
    }

    let mut stacked = DMatrix::zeros(n + d, d);
    stacked.rows_mut(0, n).copy_from(&data.data);
    for (i, g) in regularizer.iter().enumerate() {
        stacked[(n + i, i)] = *g;
    }
    let qr = stacked.qr();
    let upper = qr.r();

    let max_diag = (0..d).map(|i| upper[(i, i)].abs()).fold(0.0, f64::max);
    let tol = max_diag * (n + d) as f64 * f64::EPSILON;
    let deficient: Vec<usize> = (0..d).filter(|&i| !(upper[(i, i)].abs() > tol)).collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient { columns: deficient });
    }

    let mut rhs = DMatrix::zeros(n + d, r);
    rhs.rows_mut(0, n).copy_from(&data.targets);
    qr.q_tr_mul(&mut rhs);
    let coeffs = rhs.rows(0, d).into_owned();
    let solution = upper
        .solve_upper_triangular(&coeffs)
        .ok_or_else(|| Error::NumericalDegeneracy("triangular solve failed".into()))?;

    let fitted = &data.data * &solution;
    let noise_variances = (0..r)
        .map(|k| {
            let misfit = (fitted.column(k) - data.targets.column(k)).norm_squared();
            let penalty: f64 = (0..d).map(|i| (regularizer[i] * solution[(i, k)]).powi(2)).sum();
            (misfit + penalty) / n as f64
        })
        .collect();

    let inv_upper = upper
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::NumericalDegeneracy("triangular inverse failed".into()))?;
    let mut unscaled = &inv_upper * inv_upper.transpose();
    for i in 0..d {
        for j in 0..i {
            let avg = 0.5 * (unscaled[(i, j)] + unscaled[(j, i)]);
            unscaled[(i, j)] = avg;
            unscaled[(j, i)] = avg;
        }
    }

    Ok(OperatorPosterior {
        means: solution.transpose(),
        noise_variances,
        unscaled_covariance: unscaled,
        regularizer: regularizer.to_vec(),
        n_rows: n,
    })
}

/// Draws `n_draws` operator matrices. Draw `ℓ` uses its own ChaCha stream
/// derived from `seed`, so the result does not depend on evaluation order.
pub fn sample_operators(posterior: &OperatorPosterior, n_draws: usize, seed: u64) -> Result<Vec<DMatrix<f64>>> {
    if n_draws == 0 {
        return Err(Error::InvalidArgument("need at least one posterior draw".into()));
    }
    let factor = posterior.sampling_factor()?;
    let (r, d) = (posterior.reduced_dim(), posterior.width());
    let sigmas: Vec<f64> = posterior.noise_variances.iter().map(|s| s.sqrt()).collect();
    let draws = (0..n_draws)
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            let mut op = posterior.means.clone();
            for k in 0..r {
                let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                let step = &factor * z;
                for i in 0..d {
                    op[(k, i)] += sigmas[k] * step[i];
                }
            }
            op
        })
        .collect();
    Ok(draws)
}

/// Posterior draws bound to a structure and basis.
pub fn sample_realizations(
    posterior: &OperatorPosterior,
    structure: &Arc<StructureFunction>,
    basis: &Arc<PodBasis>,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<RomRealization>> {
    sample_operators(posterior, n_draws, seed)?
        .into_iter()
        .map(|op| RomRealization::new(op, Arc::clone(structure), Arc::clone(basis)))
        .collect()
}
