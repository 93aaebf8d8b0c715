//! POD bases from snapshot data and the shifted approximation `q ≈ q̄ + V q̂`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::CompensatedSum;
use crate::snapshots::SnapshotSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    Zero,
    MeanSnapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum TruncationRule {
    /// Smallest `r` whose discarded fraction of squared singular values is below τ.
    ResidualEnergyBelow(f64),
    /// Smallest `r` whose retained fraction of squared singular values exceeds τ.
    CumulativeEnergyAbove(f64),
}

impl TruncationRule {
    pub fn validate(&self) -> Result<()> {
        let tau = match *self {
            TruncationRule::ResidualEnergyBelow(t) | TruncationRule::CumulativeEnergyAbove(t) => t,
        };
        if tau > 0.0 && tau < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("truncation threshold must lie in (0, 1), got {tau}")))
        }
    }

    /// Whether keeping `r` modes satisfies the rule.
    pub fn holds(&self, singular_values: &[f64], r: usize) -> bool {
        let total: f64 = singular_values.iter().map(|s| s * s).collect::<CompensatedSum>().value();
        let kept: f64 = singular_values[..r].iter().map(|s| s * s).collect::<CompensatedSum>().value();
        let residual: f64 = singular_values[r..].iter().map(|s| s * s).collect::<CompensatedSum>().value();
        match *self {
            TruncationRule::ResidualEnergyBelow(tau) => residual / total < tau,
            TruncationRule::CumulativeEnergyAbove(tau) => kept / total > tau,
        }
    }

    /// Smallest `r >= 1` satisfying the rule.
    pub fn select(&self, singular_values: &[f64]) -> usize {
        (1..=singular_values.len())
            .find(|&r| self.holds(singular_values, r))
            .unwrap_or(singular_values.len())
    }
}

/// Orthonormal basis `V` (N x r), shift `q̄`, and the full singular spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodBasis {
    basis: DMatrix<f64>,
    shift: DVector<f64>,
    singular_values: Vec<f64>,
}

impl PodBasis {
    /// Wraps an explicit basis. Columns must be orthonormal to 1e-10.
    pub fn from_parts(basis: DMatrix<f64>, shift: DVector<f64>, singular_values: Vec<f64>) -> Result<Self> {
        check_dim("basis shift", basis.nrows(), shift.len())?;
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).norm();
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (‖VᵀV − I‖ = {err:e})"
            )));
        }
        Ok(Self {
            basis,
            shift,
            singular_values,
        })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn full_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// `Vᵀ(q − q̄)` column by column.
    pub fn compress(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("states to compress", self.full_dim(), states.nrows())?;
        let mut shifted = states.clone();
        for mut col in shifted.column_iter_mut() {
            col -= &self.shift;
        }
        Ok(self.basis.tr_mul(&shifted))
    }

    pub fn compress_vec(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim("state to compress", self.full_dim(), q.len())?;
        let shifted = DVector::from_column_slice(q) - &self.shift;
        Ok(self.basis.tr_mul(&shifted).as_slice().to_vec())
    }

    /// `q̄ + V q̂` column by column.
    pub fn lift(&self, reduced: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("reduced states to lift", self.rank(), reduced.nrows())?;
        let mut out = &self.basis * reduced;
        for mut col in out.column_iter_mut() {
            col += &self.shift;
        }
        Ok(out)
    }

    pub fn lift_vec(&self, q_hat: &[f64]) -> Result<Vec<f64>> {
        check_dim("reduced state to lift", self.rank(), q_hat.len())?;
        let out = &self.basis * DVector::from_column_slice(q_hat) + &self.shift;
        Ok(out.as_slice().to_vec())
    }
}

/// POD of the (optionally mean-shifted) snapshot matrix.
pub fn compute_pod(snapshots: &SnapshotSet, shift_mode: ShiftMode, rule: TruncationRule) -> Result<PodBasis> {
    compute_pod_from_matrix(&snapshots.stacked(), shift_mode, rule)
}

/// POD of an `N x K` matrix whose columns are snapshots.
pub fn compute_pod_from_matrix(
    snapshots: &DMatrix<f64>,
    shift_mode: ShiftMode,
    rule: TruncationRule,
) -> Result<PodBasis> {
    rule.validate()?;
    if snapshots.ncols() == 0 || snapshots.nrows() == 0 {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    let shift = match shift_mode {
        ShiftMode::Zero => DVector::zeros(snapshots.nrows()),
        ShiftMode::MeanSnapshot => snapshots.column_mean(),
    };
    let mut shifted = snapshots.clone();
    for mut col in shifted.column_iter_mut() {
        col -= &shift;
    }
    if shifted.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData("shifted snapshot matrix is identically zero".into()));
    }

    let (mut left, singular_values) = thin_left_svd(&shifted)?;
    let r = rule.select(&singular_values);
    let mut basis = left.columns(0, r).into_owned();
    for mut col in basis.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    left = basis;
    Ok(PodBasis {
        basis: left,
        shift,
        singular_values,
    })
}

/// Left singular vectors and singular values (descending) of `a`, with
/// `min(rows, cols)` columns. Tall matrices are reduced by QR first.
pub(crate) fn thin_left_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (u, s) = if a.nrows() > 2 * a.ncols() {
        let qr = a.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let svd = r.svd(true, false);
        let u = q * svd.u.ok_or_else(|| Error::NumericalDegeneracy("SVD did not converge".into()))?;
        (u, svd.singular_values)
    } else {
        let svd = a.clone().svd(true, false);
        (
            svd.u.ok_or_else(|| Error::NumericalDegeneracy("SVD did not converge".into()))?,
            svd.singular_values,
        )
    };
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut sorted_u = DMatrix::zeros(u.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        sorted_u.set_column(k, &u.column(i));
    }
    Ok((sorted_u, order.iter().map(|&i| s[i]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identical_snapshots_give_rank_one() {
        let col = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let m = DMatrix::from_columns(&[col.clone(), col.clone(), col]);
        let pod = compute_pod_from_matrix(&m, ShiftMode::Zero, TruncationRule::ResidualEnergyBelow(1e-6)).unwrap();
        assert_eq!(pod.rank(), 1);
        assert!(pod.singular_values()[1..].iter().all(|&s| s < 1e-12));
        let pod = compute_pod_from_matrix(&m, ShiftMode::Zero, TruncationRule::CumulativeEnergyAbove(0.995)).unwrap();
        assert_eq!(pod.rank(), 1);
    }

    #[test]
    fn mean_shift_of_identical_snapshots_is_degenerate() {
        let col = DVector::from_vec(vec![1.0, 2.0]);
        let m = DMatrix::from_columns(&[col.clone(), col]);
        let err = compute_pod_from_matrix(&m, ShiftMode::MeanSnapshot, TruncationRule::ResidualEnergyBelow(1e-6));
        assert!(matches!(err, Err(Error::DegenerateData(_))));
    }

    #[test]
    fn matches_gram_eigen_oracle() {
        let a = random_matrix(20, 12, 5);
        let pod = compute_pod_from_matrix(&a, ShiftMode::Zero, TruncationRule::CumulativeEnergyAbove(1.0 - 1e-15)).unwrap();
        assert_eq!(pod.rank(), 12);

        let eig = nalgebra::SymmetricEigen::new(&a * a.transpose());
        let mut pairs: Vec<(f64, DVector<f64>)> = eig
            .eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .map(|(&l, v)| (l, v.into_owned()))
            .collect();
        pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        for k in 0..12 {
            let s = pod.singular_values()[k];
            assert!((s * s - pairs[k].0).abs() <= 1e-10 * pairs[0].0);
            let u = pod.basis().column(k);
            let w = &pairs[k].1;
            let sign = u.dot(w).signum();
            let angle = (u - w * sign).norm();
            assert!(angle <= 1e-10, "mode {k}: angle {angle:e}");
        }
    }

    #[test]
    fn basis_is_orthonormal_and_sign_fixed() {
        let a = random_matrix(30, 9, 8);
        let pod = compute_pod_from_matrix(&a, ShiftMode::MeanSnapshot, TruncationRule::ResidualEnergyBelow(0.05)).unwrap();
        let v = pod.basis();
        let err = (v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols())).norm();
        assert!(err <= 1e-10);
        for col in v.column_iter() {
            assert!(col[col.iamax()] > 0.0);
        }
        assert!(pod.singular_values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_is_minimal_for_rule() {
        let a = random_matrix(25, 10, 21);
        for rule in [
            TruncationRule::ResidualEnergyBelow(0.1),
            TruncationRule::ResidualEnergyBelow(1e-3),
            TruncationRule::CumulativeEnergyAbove(0.5),
            TruncationRule::CumulativeEnergyAbove(0.95),
        ] {
            let pod = compute_pod_from_matrix(&a, ShiftMode::Zero, rule).unwrap();
            let r = pod.rank();
            assert!(rule.holds(pod.singular_values(), r));
            if r > 1 {
                assert!(!rule.holds(pod.singular_values(), r - 1));
            }
        }
    }

    #[test]
    fn tall_matrices_use_qr_route_consistently() {
        let a = random_matrix(200, 15, 2);
        let (u, s) = thin_left_svd(&a).unwrap();
        let direct = a.clone().svd(true, false);
        let mut ds: Vec<f64> = direct.singular_values.iter().copied().collect();
        ds.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in s.iter().zip(&ds) {
            assert!((x - y).abs() < 1e-12 * ds[0]);
        }
        let err = (u.transpose() * &u - DMatrix::identity(15, 15)).norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn compress_and_lift_are_projection() {
        let a = random_matrix(16, 6, 3);
        let pod = compute_pod_from_matrix(&a, ShiftMode::MeanSnapshot, TruncationRule::ResidualEnergyBelow(0.2)).unwrap();
        let v = pod.basis().clone();
        let shift = pod.shift().clone();

        // Points in the affine span reconstruct exactly.
        let coeffs = DVector::from_fn(pod.rank(), |i, _| i as f64 - 1.5);
        let q = &v * &coeffs + &shift;
        let back = pod.lift_vec(&pod.compress_vec(q.as_slice()).unwrap()).unwrap();
        for (x, y) in back.iter().zip(q.iter()) {
            assert!((x - y).abs() <= 1e-12);
        }
        // The shift compresses to zero.
        assert!(pod.compress_vec(shift.as_slice()).unwrap().iter().all(|x| x.abs() < 1e-12));

        // Random state: lift∘compress equals the explicit projector, and the residual is orthogonal.
        let q = DVector::from_fn(16, |i, _| (i as f64 * 0.7).cos());
        let lifted = DVector::from_vec(pod.lift_vec(&pod.compress_vec(q.as_slice()).unwrap()).unwrap());
        let projector = &v * v.transpose();
        let oracle = &shift + &projector * (&q - &shift);
        assert!((&lifted - &oracle).norm() <= 1e-10);
        let residual = &q - &lifted;
        let total = (&q - &shift).norm_squared();
        let pyth = residual.norm_squared() + (&lifted - &shift).norm_squared();
        assert!((total - pyth).abs() <= 1e-10 * total.max(1.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = random_matrix(8, 4, 1);
        let pod = compute_pod_from_matrix(&a, ShiftMode::Zero, TruncationRule::ResidualEnergyBelow(0.1)).unwrap();
        assert!(pod.compress_vec(&[1.0; 7]).is_err());
        assert!(pod.lift_vec(&vec![0.0; pod.rank() + 1]).is_err());
    }
}
