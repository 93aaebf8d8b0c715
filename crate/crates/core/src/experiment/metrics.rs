use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::PodBasis;
use crate::error::{check_dim, Error, Result};
use crate::numeric::CompensatedSum;

/// Spatial norm used inside the time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NormKind {
    /// Euclidean norm of the state vector.
    L2,
    /// `∫ √(u² + v²) dx` for a state `[u; v]` of two fields of `field_len`
    /// points, by the midpoint sum with cell area `cell_area`.
    L1L2 { field_len: usize, cell_area: f64 },
}

impl NormKind {
    pub fn squared_norm(&self, q: &[f64]) -> f64 {
        match *self {
            NormKind::L2 => q.iter().map(|v| v * v).collect::<CompensatedSum>().value(),
            NormKind::L1L2 { field_len, cell_area } => {
                let (u, v) = q.split_at(field_len);
                let integral = u
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a.hypot(*b))
                    .collect::<CompensatedSum>()
                    .value()
                    * cell_area;
                integral * integral
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::L1L2 { .. } => "l1l2",
        }
    }
}

/// Trapezoidal rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: CompensatedSum = values[1..n - 1].iter().copied().collect();
            dt * (0.5 * (values[0] + values[n - 1]) + interior.value())
        }
    }
}

/// Time integrals `∫‖q − q_approx‖² dt` and `∫‖q‖² dt` at one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorIntegrals {
    pub numerator: f64,
    pub denominator: f64,
}

impl ErrorIntegrals {
    /// Integrals of a reference trajectory against an approximation, both
    /// `N × n_t`.
    pub fn between(reference: &DMatrix<f64>, approx: &DMatrix<f64>, norm: NormKind, dt: f64) -> Result<Self> {
        check_dim("approximation rows", reference.nrows(), approx.nrows())?;
        check_dim("approximation samples", reference.ncols(), approx.ncols())?;
        let mut diff = vec![0.0; reference.nrows()];
        let mut num = Vec::with_capacity(reference.ncols());
        let mut den = Vec::with_capacity(reference.ncols());
        for j in 0..reference.ncols() {
            let (q, a) = (reference.column(j), approx.column(j));
            for (d, (x, y)) in diff.iter_mut().zip(q.iter().zip(a.iter())) {
                *d = x - y;
            }
            num.push(norm.squared_norm(&diff));
            den.push(norm.squared_norm(q.as_slice()));
        }
        Ok(Self {
            numerator: trapezoid(&num, dt),
            denominator: trapezoid(&den, dt),
        })
    }

    /// The approximation is missing entirely; the relative error is 1.
    pub fn missing(reference: &DMatrix<f64>, norm: NormKind, dt: f64) -> Self {
        let den: Vec<f64> = reference
            .column_iter()
            .map(|c| norm.squared_norm(c.as_slice()))
            .collect();
        let d = trapezoid(&den, dt);
        Self {
            numerator: d,
            denominator: d,
        }
    }

    pub fn relative(&self) -> Result<f64> {
        if self.denominator == 0.0 {
            return Err(Error::ZeroDenominator("relative error"));
        }
        Ok(self.numerator / self.denominator)
    }
}

/// Relative ROM error `∫‖q − q_rom‖² / ∫‖q‖²` with trapezoidal time quadrature.
pub fn relative_rom_error(fom: &DMatrix<f64>, rom_mean: &DMatrix<f64>, norm: NormKind, dt: f64) -> Result<f64> {
    ErrorIntegrals::between(fom, rom_mean, norm, dt)?.relative()
}

/// `(Σ numᵢ² / Σ denᵢ²)^{1/2}` over the candidate grid.
pub fn total_error(integrals: &[ErrorIntegrals]) -> Result<f64> {
    if integrals.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let num: CompensatedSum = integrals.iter().map(|e| e.numerator * e.numerator).collect();
    let den: CompensatedSum = integrals.iter().map(|e| e.denominator * e.denominator).collect();
    if den.value() == 0.0 {
        return Err(Error::ZeroDenominator("total error"));
    }
    Ok((num.value() / den.value()).sqrt())
}

/// Integrals of each trajectory against its projection `q̄ + VVᵀ(q − q̄)`.
pub fn projection_integrals(basis: &PodBasis, foms: &[&DMatrix<f64>], norm: NormKind, dt: f64) -> Result<Vec<ErrorIntegrals>> {
    foms.iter()
        .map(|q| {
            let projected = basis.lift(&basis.compress(q)?)?;
            ErrorIntegrals::between(q, &projected, norm, dt)
        })
        .collect()
}

/// Total projection error over the candidate grid.
pub fn projection_error(basis: &PodBasis, foms: &[&DMatrix<f64>], norm: NormKind, dt: f64) -> Result<f64> {
    total_error(&projection_integrals(basis, foms, norm, dt)?)
}

/// Geometric mean with values floored at `1e-16`.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let logs: CompensatedSum = values.iter().map(|v| v.max(1e-16).ln()).collect();
    Some((logs.value() / values.len() as f64).exp())
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Fraction of candidates with at least one unstable draw.
pub fn instability_fraction(alphas: &[f64]) -> f64 {
    if alphas.is_empty() {
        return 0.0;
    }
    alphas.iter().filter(|&&a| a > 0.0).count() as f64 / alphas.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn identical_trajectories_have_zero_error() {
        let q = DMatrix::from_fn(4, 5, |i, j| (i + j) as f64 + 0.5);
        assert_eq!(relative_rom_error(&q, &q, NormKind::L2, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn zero_approximation_has_unit_error() {
        let q = DMatrix::from_fn(4, 5, |i, j| (i * j) as f64 + 1.0);
        let zero = DMatrix::zeros(4, 5);
        assert!((relative_rom_error(&q, &zero, NormKind::L2, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ErrorIntegrals::missing(&q, NormKind::L2, 0.1).relative().unwrap(), 1.0);
    }

    #[test]
    fn hand_built_trapezoid() {
        let q = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.0, 1.0, 1.0]);
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        // squared errors per sample: 0, 2, 4; squared norms: 1, 5, 10
        let e = ErrorIntegrals::between(&q, &a, NormKind::L2, 0.5).unwrap();
        assert!((e.numerator - 0.5 * (0.0 + 4.0) / 2.0 - 0.5 * 2.0).abs() < 1e-15);
        assert!((e.denominator - (0.5 * 5.5 + 0.5 * 5.0)).abs() < 1e-15);
    }

    #[test]
    fn l1l2_norm_of_two_fields() {
        let norm = NormKind::L1L2 {
            field_len: 2,
            cell_area: 0.25,
        };
        let q = [3.0, 0.0, 4.0, 1.0];
        assert!((norm.squared_norm(&q) - ((5.0 + 1.0) * 0.25f64).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn single_candidate_total_error() {
        let e = ErrorIntegrals {
            numerator: 0.3,
            denominator: 1.5,
        };
        assert!((total_error(&[e]).unwrap() - e.relative().unwrap()).abs() < 1e-15);
        assert!(total_error(&[]).is_err());
    }

    #[test]
    fn exact_basis_has_no_projection_error() {
        let v = DMatrix::from_fn(6, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let basis = PodBasis::from_parts(v, DVector::zeros(6), vec![1.0, 1.0]).unwrap();
        let q = DMatrix::from_fn(6, 4, |i, j| if i < 2 { (i + j) as f64 + 1.0 } else { 0.0 });
        assert!(projection_error(&basis, &[&q], NormKind::L2, 0.1).unwrap() <= 1e-12);
    }

    #[test]
    fn summary_statistics() {
        assert!((geometric_mean(&[1.0, 100.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!(geometric_mean(&[0.0]).unwrap() > 0.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(quantile(&[0.0, 10.0], 0.05), Some(0.5));
        assert_eq!(instability_fraction(&[0.0, 0.1, 1.0, 0.0]), 0.5);
    }
}
