use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Second-order finite-difference time derivatives of uniformly sampled
/// states (columns are samples): central in the interior, one-sided at the ends.
pub fn estimate_time_derivatives(states: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    let n_t = states.ncols();
    if n_t < 3 {
        return Err(Error::InsufficientData(format!(
            "derivative estimation needs at least 3 samples, got {n_t}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let mut out = DMatrix::zeros(states.nrows(), n_t);
    let h2 = 2.0 * dt;
    for k in 0..states.nrows() {
        out[(k, 0)] = (-3.0 * states[(k, 0)] + 4.0 * states[(k, 1)] - states[(k, 2)]) / h2;
        for j in 1..n_t - 1 {
            out[(k, j)] = (states[(k, j + 1)] - states[(k, j - 1)]) / h2;
        }
        let l = n_t - 1;
        out[(k, l)] = (3.0 * states[(k, l)] - 4.0 * states[(k, l - 1)] + states[(k, l - 2)]) / h2;
    }
    Ok(out)
}
