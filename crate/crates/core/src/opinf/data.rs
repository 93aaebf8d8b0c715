use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::derivatives::estimate_time_derivatives;
use super::structure::StructureFunction;
use crate::error::{check_dim, Error, Result};

/// Data matrix `D`, derivative targets (column `k` is `z_k`), and the
/// `(parameter, time)` index of every row. Rows are parameter-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionData {
    pub data: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    pub provenance: Vec<(usize, usize)>,
}

impl RegressionData {
    pub fn new(data: DMatrix<f64>, targets: DMatrix<f64>, provenance: Vec<(usize, usize)>) -> Result<Self> {
        check_dim("target rows", data.nrows(), targets.nrows())?;
        check_dim("provenance length", data.nrows(), provenance.len())?;
        if data.nrows() == 0 {
            return Err(Error::InsufficientData("regression has no rows".into()));
        }
        Ok(Self {
            data,
            targets,
            provenance,
        })
    }

    /// Estimates time derivatives per parameter block and assembles `D`.
    pub fn from_snapshots(
        reduced: &[DMatrix<f64>],
        inputs: Option<&[DMatrix<f64>]>,
        params: &[Vec<f64>],
        structure: &StructureFunction,
        dt: f64,
    ) -> Result<Self> {
        let (data, provenance) = assemble_data_matrix(reduced, inputs, params, structure)?;
        let r = structure.reduced_dim();
        let mut targets = DMatrix::zeros(data.nrows(), r);
        let mut row = 0;
        for block in reduced {
            let ddt = estimate_time_derivatives(block, dt)?;
            for j in 0..ddt.ncols() {
                for k in 0..r {
                    targets[(row, k)] = ddt[(k, j)];
                }
                row += 1;
            }
        }
        Self::new(data, targets, provenance)
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn reduced_dim(&self) -> usize {
        self.targets.ncols()
    }
}

/// Row `(i, j)` of the result is `d(q̂_ij, u_ij; ξ_i)`.
pub fn assemble_data_matrix(
    reduced: &[DMatrix<f64>],
    inputs: Option<&[DMatrix<f64>]>,
    params: &[Vec<f64>],
    structure: &StructureFunction,
) -> Result<(DMatrix<f64>, Vec<(usize, usize)>)> {
    check_dim("parameters for reduced snapshots", reduced.len(), params.len())?;
    if let Some(u) = inputs {
        check_dim("inputs for reduced snapshots", reduced.len(), u.len())?;
    } else if structure.has_inputs() {
        return Err(Error::InvalidArgument("structure has input blocks but no inputs were given".into()));
    }
    let rows: usize = reduced.iter().map(|q| q.ncols()).sum();
    let width = structure.width();
    let mut data = DMatrix::zeros(rows, width);
    let mut provenance = Vec::with_capacity(rows);
    let mut buf = vec![0.0; width];
    let mut q = vec![0.0; structure.reduced_dim()];
    let mut u = vec![0.0; structure.input_dim()];
    let mut row = 0;
    for (i, block) in reduced.iter().enumerate() {
        check_dim("reduced snapshot dimension", structure.reduced_dim(), block.nrows())?;
        for j in 0..block.ncols() {
            q.copy_from_slice(block.column(j).as_slice());
            if let Some(inputs) = inputs {
                check_dim("input samples", block.ncols(), inputs[i].ncols())?;
                u.copy_from_slice(inputs[i].column(j).as_slice());
            }
            structure.evaluate(&q, &u, &params[i], &mut buf)?;
            for (c, v) in buf.iter().enumerate() {
                data[(row, c)] = *v;
            }
            provenance.push((i, j));
            row += 1;
        }
    }
    Ok((data, provenance))
}
