use super::system::{AffineTerm, Coefficient, PolynomialAffineSystem, QuadraticOperator, SparseMatrix};
use crate::error::{Error, Result};

/// Interior grid of the Burgers problem on `[0, 2]²`: `n_side` interior points
/// per direction with spacing `2 / (n_side + 1)`; the boundary is eliminated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersGrid {
    pub n_side: usize,
}

impl BurgersGrid {
    pub const DOMAIN: f64 = 2.0;

    pub fn new(n_side: usize) -> Result<Self> {
        if n_side < 3 {
            return Err(Error::InvalidDiscretization(format!(
                "Burgers grid needs at least 3 points per direction, got {n_side}"
            )));
        }
        Ok(Self { n_side })
    }

    pub fn spacing(&self) -> f64 {
        Self::DOMAIN / (self.n_side + 1) as f64
    }

    /// Points per velocity field.
    pub fn field_len(&self) -> usize {
        self.n_side * self.n_side
    }

    pub fn state_dim(&self) -> usize {
        2 * self.field_len()
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Index of interior point `(ix, iy)` within one field (x varies fastest).
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_side + ix
    }

    pub fn coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        let h = self.spacing();
        ((ix + 1) as f64 * h, (iy + 1) as f64 * h)
    }
}

/// Two-dimensional viscous Burgers system `q = [u; v]`,
/// `dq/dt = ν A q + H[q ⊗ q]`, with homogeneous Dirichlet boundaries.
///
/// Diffusion uses the five-point Laplacian. Convection uses backward
/// differences, which is the first-order upwind stencil whenever `u, v ≥ 0`.
/// Nonnegative initial velocities stay nonnegative under this flow, so the
/// stencil is fixed and the system stays exactly quadratic.
pub fn build_burgers_fom(n_side: usize) -> Result<PolynomialAffineSystem> {
    let grid = BurgersGrid::new(n_side)?;
    let n = n_side;
    let nf = grid.field_len();
    let dim = grid.state_dim();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let inv_h = 1.0 / h;

    let mut lap = Vec::with_capacity(10 * nf);
    for field in 0..2 {
        let off = field * nf;
        for iy in 0..n {
            for ix in 0..n {
                let p = off + grid.index(ix, iy);
                lap.push((p, p, -4.0 * inv_h2));
                if ix > 0 {
                    lap.push((p, off + grid.index(ix - 1, iy), inv_h2));
                }
                if ix + 1 < n {
                    lap.push((p, off + grid.index(ix + 1, iy), inv_h2));
                }
                if iy > 0 {
                    lap.push((p, off + grid.index(ix, iy - 1), inv_h2));
                }
                if iy + 1 < n {
                    lap.push((p, off + grid.index(ix, iy + 1), inv_h2));
                }
            }
        }
    }
    let laplacian = SparseMatrix::from_triplets(dim, dim, &lap);

    // Row of field w at point p: −u_p (w_p − w_W)/h − v_p (w_p − w_S)/h.
    let mut quad = Vec::with_capacity(8 * nf);
    for field in 0..2 {
        let off = field * nf;
        for iy in 0..n {
            for ix in 0..n {
                let p = grid.index(ix, iy);
                let row = off + p;
                let u_p = p;
                let v_p = nf + p;
                let w_p = off + p;
                quad.push((row, u_p, w_p, -inv_h));
                quad.push((row, v_p, w_p, -inv_h));
                if ix > 0 {
                    quad.push((row, u_p, off + grid.index(ix - 1, iy), inv_h));
                }
                if iy > 0 {
                    quad.push((row, v_p, off + grid.index(ix, iy - 1), inv_h));
                }
            }
        }
    }
    let convection = QuadraticOperator::from_entries(dim, &quad);

    PolynomialAffineSystem::new(
        dim,
        0,
        1,
        vec![],
        vec![AffineTerm::new(Coefficient::Param(0), laplacian)],
        vec![AffineTerm::new(Coefficient::One, convection)],
        vec![],
    )
}

/// Overlapping square pulses: `u = 2` on `[0.5, 1]²`, `v = 4` on `[0.25, 0.75]²`.
pub fn build_burgers_initial(n_side: usize) -> Result<Vec<f64>> {
    let grid = BurgersGrid::new(n_side)?;
    let nf = grid.field_len();
    let mut q = vec![0.0; grid.state_dim()];
    let inside = |x: f64, lo: f64, hi: f64| x >= lo - 1e-12 && x <= hi + 1e-12;
    for iy in 0..n_side {
        for ix in 0..n_side {
            let (x, y) = grid.coords(ix, iy);
            let p = grid.index(ix, iy);
            if inside(x, 0.5, 1.0) && inside(y, 0.5, 1.0) {
                q[p] = 2.0;
            }
            if inside(x, 0.25, 0.75) && inside(y, 0.25, 0.75) {
                q[nf + p] = 4.0;
            }
        }
    }
    Ok(q)
}
