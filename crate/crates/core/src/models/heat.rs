use nalgebra::DVector;

use super::system::{AffineTerm, Coefficient, PolynomialAffineSystem, QuadraticOperator, SparseMatrix};
use crate::error::{Error, Result};

/// Interior node coordinates of a uniform grid with `n` nodes on `[0, length]`.
pub fn heat_nodes(n: usize, length: f64) -> Vec<f64> {
    let dx = length / (n - 1) as f64;
    (1..n - 1).map(|i| i as f64 * dx).collect()
}

/// Diffusion-reaction model `q_t = κ q_xx − ρ q²` on `(0, L)` with `q(0) = 0`,
/// `q(L) = 1`, discretized with second-order central differences on `n`
/// uniform nodes. Boundary nodes are eliminated, so the state has `n − 2`
/// entries. Parameter vector is `ξ = (κ, ρ)`.
pub fn build_heat_fom(n: usize, length: f64) -> Result<PolynomialAffineSystem> {
    if n < 3 {
        return Err(Error::InvalidDiscretization(format!(
            "heat grid needs at least 3 nodes, got {n}"
        )));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidDiscretization(format!(
            "domain length must be positive, got {length}"
        )));
    }
    let m = n - 2;
    let dx = length / (n - 1) as f64;
    let inv_dx2 = 1.0 / (dx * dx);

    let mut triplets = Vec::with_capacity(3 * m);
    for i in 0..m {
        if i > 0 {
            triplets.push((i, i - 1, inv_dx2));
        }
        triplets.push((i, i, -2.0 * inv_dx2));
        if i + 1 < m {
            triplets.push((i, i + 1, inv_dx2));
        }
    }
    let laplacian = SparseMatrix::from_triplets(m, m, &triplets);

    // Dirichlet data q(0) = 0, q(L) = 1.
    let mut boundary = DVector::zeros(m);
    boundary[m - 1] += inv_dx2;

    let reaction: Vec<_> = (0..m).map(|i| (i, i, i, -1.0)).collect();
    let reaction = QuadraticOperator::from_entries(m, &reaction);

    let kappa = Coefficient::Param(0);
    let rho = Coefficient::Param(1);
    PolynomialAffineSystem::new(
        m,
        0,
        2,
        vec![AffineTerm::new(kappa, boundary)],
        vec![AffineTerm::new(kappa, laplacian)],
        vec![AffineTerm::new(rho, reaction)],
        vec![],
    )
}

/// Initial profile `q0(x) = x(1−x)(6e^{−x}(1−x)² − 10eˣ sin(x/6)) + x`
/// sampled on the interior nodes.
pub fn build_heat_initial(n: usize, length: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidDiscretization(format!(
            "heat grid needs at least 3 nodes, got {n}"
        )));
    }
    Ok(heat_nodes(n, length).into_iter().map(heat_profile).collect())
}

fn heat_profile(x: f64) -> f64 {
    x * (1.0 - x) * (6.0 * (-x).exp() * (1.0 - x).powi(2) - 10.0 * x.exp() * (x / 6.0).sin()) + x
}
