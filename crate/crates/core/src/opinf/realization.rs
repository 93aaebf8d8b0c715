use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::structure::{BlockKind, StructureFunction};
use crate::basis::PodBasis;
use crate::error::{check_dim, Result};
use crate::models::{integrate, InputFn, InstabilityGuard, TimeGrid, Trajectory, VectorField};
use crate::numeric::{compressed_kron, compressed_len};

/// One operator matrix `O` (rows `o_k`) with the structure and basis it was
/// inferred for.
#[derive(Debug, Clone)]
pub struct RomRealization {
    operator: DMatrix<f64>,
    structure: Arc<StructureFunction>,
    basis: Arc<PodBasis>,
}

impl RomRealization {
    pub fn new(operator: DMatrix<f64>, structure: Arc<StructureFunction>, basis: Arc<PodBasis>) -> Result<Self> {
        check_dim("operator rows", structure.reduced_dim(), operator.nrows())?;
        check_dim("operator columns", structure.width(), operator.ncols())?;
        check_dim("basis rank", structure.reduced_dim(), basis.rank())?;
        Ok(Self {
            operator,
            structure,
            basis,
        })
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn structure(&self) -> &StructureFunction {
        &self.structure
    }

    pub fn basis(&self) -> &PodBasis {
        &self.basis
    }

    pub fn reduced_dim(&self) -> usize {
        self.structure.reduced_dim()
    }

    /// Operators combined at a fixed parameter.
    pub fn dynamics<'a>(&self, xi: &[f64], input: Option<InputFn<'a>>) -> ReducedDynamics<'a> {
        ReducedDynamics::new(&self.operator, &self.structure, xi, input)
    }

    /// Integrates the reduced model from `q̂0`.
    pub fn solve(
        &self,
        xi: &[f64],
        q0_hat: &[f64],
        grid: &TimeGrid,
        guard: &InstabilityGuard,
        input: Option<InputFn<'_>>,
    ) -> Result<Trajectory> {
        let dynamics = self.dynamics(xi, input);
        integrate(&dynamics, q0_hat, grid, guard)
    }
}

/// `dq̂/dt = c + A q̂ + H (q̂ ⊗ q̂) + B u(t)` with every block already
/// multiplied by its coefficient at one parameter. Matrices are row-major.
pub struct ReducedDynamics<'a> {
    r: usize,
    m: usize,
    constant: Vec<f64>,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
    input_matrix: Vec<f64>,
    input: Option<InputFn<'a>>,
    scratch: RefCell<(Vec<f64>, Vec<f64>)>,
}

impl<'a> ReducedDynamics<'a> {
    pub fn new(operator: &DMatrix<f64>, structure: &StructureFunction, xi: &[f64], input: Option<InputFn<'a>>) -> Self {
        let r = structure.reduced_dim();
        let m = structure.input_dim();
        let s = compressed_len(r);
        let mut constant = vec![0.0; r];
        let mut linear = vec![0.0; r * r];
        let mut quadratic = vec![0.0; r * s];
        let mut input_matrix = vec![0.0; r * m];
        for (idx, block) in structure.blocks().iter().enumerate() {
            let th = block.coefficient.eval(xi);
            let cols = structure.block_columns(idx);
            let width = cols.len();
            let dst: &mut [f64] = match block.kind {
                BlockKind::Constant => &mut constant,
                BlockKind::Linear => &mut linear,
                BlockKind::Quadratic => &mut quadratic,
                BlockKind::Input => &mut input_matrix,
            };
            for k in 0..r {
                for (c, col) in cols.clone().enumerate() {
                    dst[k * width + c] += th * operator[(k, col)];
                }
            }
        }
        Self {
            r,
            m,
            constant,
            linear,
            quadratic,
            input_matrix,
            input,
            scratch: RefCell::new((vec![0.0; s], vec![0.0; m])),
        }
    }
}

impl VectorField for ReducedDynamics<'_> {
    fn dim(&self) -> usize {
        self.r
    }

    fn rhs(&self, t: f64, q: &[f64], out: &mut [f64]) {
        let r = self.r;
        let mut scratch = self.scratch.borrow_mut();
        let (kron, u) = &mut *scratch;
        compressed_kron(q, kron);
        let s = kron.len();
        let use_input = self.m > 0 && self.input.is_some();
        if let Some(f) = self.input.filter(|_| use_input) {
            f(t, u);
        }
        for k in 0..r {
            let mut acc = self.constant[k];
            let lin = &self.linear[k * r..(k + 1) * r];
            for (a, qi) in lin.iter().zip(q) {
                acc += a * qi;
            }
            let quad = &self.quadratic[k * s..(k + 1) * s];
            for (h, w) in quad.iter().zip(kron.iter()) {
                acc += h * w;
            }
            if use_input {
                let b = &self.input_matrix[k * self.m..(k + 1) * self.m];
                for (bi, ui) in b.iter().zip(u.iter()) {
                    acc += bi * ui;
                }
            }
            out[k] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::PodBasis;
    use crate::models::Coefficient;
    use crate::opinf::structure::Block;
    use nalgebra::DVector;

    fn identity_basis(r: usize) -> Arc<PodBasis> {
        Arc::new(PodBasis::from_parts(DMatrix::identity(r, r), DVector::zeros(r), vec![1.0; r]).unwrap())
    }

    fn structure(r: usize, m: usize) -> Arc<StructureFunction> {
        let mut blocks = vec![
            Block::new(BlockKind::Constant, Coefficient::Param(0)),
            Block::new(BlockKind::Linear, Coefficient::One),
            Block::new(BlockKind::Linear, Coefficient::Param(1)),
            Block::new(BlockKind::Quadratic, Coefficient::Param(1)),
        ];
        if m > 0 {
            blocks.push(Block::new(BlockKind::Input, Coefficient::One));
        }
        Arc::new(StructureFunction::new(blocks, r, m).unwrap())
    }

    #[test]
    fn rhs_equals_operator_times_data_vector() {
        let r = 3;
        let s = structure(r, 1);
        let op = DMatrix::from_fn(r, s.width(), |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let rom = RomRealization::new(op.clone(), s.clone(), identity_basis(r)).unwrap();
        let xi = [0.7, -1.3];
        let q = [0.2, -0.5, 1.1];
        let input = |t: f64, u: &mut [f64]| u[0] = 2.0 * t;
        let dyn_ = rom.dynamics(&xi, Some(&input));
        let mut out = vec![0.0; r];
        dyn_.rhs(0.25, &q, &mut out);
        let mut d = vec![0.0; s.width()];
        s.evaluate(&q, &[0.5], &xi, &mut d).unwrap();
        let expected = &op * DVector::from_vec(d);
        for k in 0..r {
            assert!((out[k] - expected[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_decay_solution() {
        let r = 1;
        let s = Arc::new(StructureFunction::new(vec![Block::new(BlockKind::Linear, Coefficient::Param(0))], r, 0).unwrap());
        let rom = RomRealization::new(DMatrix::from_element(1, 1, -1.0), s, identity_basis(1)).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let traj = rom.solve(&[2.0], &[1.0], &grid, &InstabilityGuard::new(10.0).unwrap(), None).unwrap();
        assert!(traj.stable);
        assert!((traj.states[10][0] - (-2.0f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn rejects_mismatched_operator() {
        let s = structure(2, 0);
        assert!(RomRealization::new(DMatrix::zeros(2, s.width() + 1), s.clone(), identity_basis(2)).is_err());
        assert!(RomRealization::new(DMatrix::zeros(2, s.width()), s, identity_basis(3)).is_err());
    }
}
