use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::models::{Coefficient, PolynomialAffineSystem};
use crate::numeric::{compressed_kron, compressed_len};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Constant,
    Linear,
    Quadratic,
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub coefficient: Coefficient,
}

impl Block {
    pub fn new(kind: BlockKind, coefficient: Coefficient) -> Self {
        Self { kind, coefficient }
    }
}

/// Layout of the data vector `d(q̂, u; ξ)`: blocks ordered constant, linear,
/// quadratic (compressed), input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFunction {
    blocks: Vec<Block>,
    reduced_dim: usize,
    input_dim: usize,
    offsets: Vec<usize>,
    width: usize,
}

impl StructureFunction {
    pub fn new(mut blocks: Vec<Block>, reduced_dim: usize, input_dim: usize) -> Result<Self> {
        if reduced_dim == 0 {
            return Err(Error::InvalidArgument("reduced dimension must be positive".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("structure has no blocks".into()));
        }
        if input_dim == 0 && blocks.iter().any(|b| b.kind == BlockKind::Input) {
            return Err(Error::InvalidArgument("input blocks need a positive input dimension".into()));
        }
        blocks.sort_by_key(|b| b.kind);
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut width = 0;
        for b in &blocks {
            offsets.push(width);
            width += Self::block_width(b.kind, reduced_dim, input_dim);
        }
        Ok(Self {
            blocks,
            reduced_dim,
            input_dim,
            offsets,
            width,
        })
    }

    fn block_width(kind: BlockKind, r: usize, m: usize) -> usize {
        match kind {
            BlockKind::Constant => 1,
            BlockKind::Linear => r,
            BlockKind::Quadratic => compressed_len(r),
            BlockKind::Input => m,
        }
    }

    /// Reduced structure inherited from a full-order system under `q ≈ V q̂`
    /// (`shifted = false`) or `q ≈ q̄ + V q̂` (`shifted = true`).
    ///
    /// A shift moves linear and quadratic coefficients into lower-order blocks.
    pub fn inherited(system: &PolynomialAffineSystem, shifted: bool, reduced_dim: usize) -> Result<Self> {
        let mut constant: Vec<Coefficient> = system.constant_terms().iter().map(|t| t.coefficient).collect();
        let mut linear: Vec<Coefficient> = system.linear_terms().iter().map(|t| t.coefficient).collect();
        let quadratic: Vec<Coefficient> = system.quadratic_terms().iter().map(|t| t.coefficient).collect();
        let input: Vec<Coefficient> = system.input_terms().iter().map(|t| t.coefficient).collect();
        if shifted {
            constant.extend(linear.iter().copied());
            constant.extend(quadratic.iter().copied());
            linear.extend(quadratic.iter().copied());
        }
        let mut blocks = Vec::new();
        for (kind, coeffs) in [
            (BlockKind::Constant, constant),
            (BlockKind::Linear, linear),
            (BlockKind::Quadratic, quadratic),
            (BlockKind::Input, input),
        ] {
            let mut seen = Vec::new();
            for c in coeffs {
                if !seen.contains(&c) {
                    seen.push(c);
                    blocks.push(Block::new(kind, c));
                }
            }
        }
        Self::new(blocks, reduced_dim, system.input_dim())
    }

    /// Same blocks for a different reduced dimension.
    pub fn with_reduced_dim(&self, reduced_dim: usize) -> Result<Self> {
        Self::new(self.blocks.clone(), reduced_dim, self.input_dim)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Total width `d(r, m)`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Column range of block `index` within `d`.
    pub fn block_columns(&self, index: usize) -> std::ops::Range<usize> {
        let start = self.offsets[index];
        start..start + Self::block_width(self.blocks[index].kind, self.reduced_dim, self.input_dim)
    }

    pub fn has_inputs(&self) -> bool {
        self.blocks.iter().any(|b| b.kind == BlockKind::Input)
    }

    /// Writes `d(q̂, u; ξ)` into `out`.
    pub fn evaluate(&self, q_hat: &[f64], u: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim("reduced state", self.reduced_dim, q_hat.len())?;
        check_dim("data vector", self.width, out.len())?;
        if self.has_inputs() {
            check_dim("input", self.input_dim, u.len())?;
        }
        let s = compressed_len(self.reduced_dim);
        for (idx, block) in self.blocks.iter().enumerate() {
            let th = block.coefficient.eval(xi);
            let cols = self.block_columns(idx);
            let dst = &mut out[cols];
            match block.kind {
                BlockKind::Constant => dst[0] = th,
                BlockKind::Linear => {
                    for (o, q) in dst.iter_mut().zip(q_hat) {
                        *o = th * q;
                    }
                }
                BlockKind::Quadratic => {
                    debug_assert_eq!(dst.len(), s);
                    compressed_kron(q_hat, dst);
                    dst.iter_mut().for_each(|v| *v *= th);
                }
                BlockKind::Input => {
                    for (o, v) in dst.iter_mut().zip(u) {
                        *o = th * v;
                    }
                }
            }
        }
        Ok(())
    }
}
