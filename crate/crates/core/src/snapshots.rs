use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::models::TimeGrid;

/// Training data: parameters ξᵢ, a shared time grid, and state snapshots
/// (one `N x n_t` matrix per parameter, columns are sample times).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub params: Vec<Vec<f64>>,
    pub grid: TimeGrid,
    pub states: Vec<DMatrix<f64>>,
    /// Optional inputs, one `m x n_t` matrix per parameter.
    pub inputs: Option<Vec<DMatrix<f64>>>,
}

impl SnapshotSet {
    pub fn new(params: Vec<Vec<f64>>, grid: TimeGrid, states: Vec<DMatrix<f64>>) -> Result<Self> {
        let set = Self {
            params,
            grid,
            states,
            inputs: None,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn with_inputs(mut self, inputs: Vec<DMatrix<f64>>) -> Result<Self> {
        self.inputs = Some(inputs);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InsufficientData("snapshot set is empty".into()));
        }
        check_dim("snapshot parameter count", self.params.len(), self.states.len())?;
        let n = self.states[0].nrows();
        for s in &self.states {
            check_dim("snapshot state dimension", n, s.nrows())?;
            check_dim("snapshot count per parameter", self.grid.n_t, s.ncols())?;
        }
        if let Some(inputs) = &self.inputs {
            check_dim("input parameter count", self.states.len(), inputs.len())?;
            let m = inputs[0].nrows();
            for u in inputs {
                check_dim("input dimension", m, u.nrows())?;
                check_dim("input samples per parameter", self.grid.n_t, u.ncols())?;
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].nrows()
    }

    pub fn n_params(&self) -> usize {
        self.states.len()
    }

    /// All snapshots side by side, parameter-major.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        let n_t = self.grid.n_t;
        let mut out = DMatrix::zeros(n, n_t * self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            out.columns_mut(i * n_t, n_t).copy_from(s);
        }
        out
    }
}
