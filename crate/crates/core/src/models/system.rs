use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{compressed_index, compressed_len};

/// Scalar coefficient function θ(ξ) multiplying one operator block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coefficient {
    /// θ(ξ) = 1.
    One,
    /// θ(ξ) = ξ\[i\].
    Param(usize),
}

impl Coefficient {
    #[inline]
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match *self {
            Coefficient::One => 1.0,
            Coefficient::Param(i) => xi[i],
        }
    }

    pub fn param_index(&self) -> Option<usize> {
        match *self {
            Coefficient::One => None,
            Coefficient::Param(i) => Some(i),
        }
    }
}

/// Compressed-sparse-row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<_> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y += alpha * A x`.
    pub fn mul_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (row, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr += alpha * acc;
        }
    }

    /// Iterates over `(col, value)` entries of one row.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out[(r, c)] += v;
            }
        }
        out
    }

    /// Dense `Vᵀ A W`.
    pub fn project(&self, left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
        let mut aw = DMatrix::zeros(self.nrows, right.ncols());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                for k in 0..right.ncols() {
                    aw[(r, k)] += v * right[(c, k)];
                }
            }
        }
        left.transpose() * aw
    }
}

/// Sparse quadratic operator acting on the compressed Kronecker square.
///
/// Each stored entry `(row, i, j, h)` with `i <= j` contributes `h q_i q_j` to `row`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl QuadraticOperator {
    /// Builds the operator from `(row, i, j, value)` entries. Index pairs are
    /// normalized to `i <= j` and duplicates are summed.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Self {
        let mut sorted: Vec<_> = entries
            .iter()
            .map(|&(r, i, j, v)| (r, i.min(j), i.max(j), v))
            .collect();
        sorted.sort_by(|a, b| (a.0, a.2, a.1).cmp(&(b.0, b.2, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut pairs = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last = None;
        for (r, i, j, v) in sorted {
            assert!(r < dim && j < dim, "quadratic entry out of bounds");
            if last == Some((r, i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            pairs.push((i, j));
            values.push(v);
            last = Some((r, i, j));
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            pairs,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y += alpha * H[q ⊗ q]`.
    pub fn mul_add(&self, alpha: f64, q: &[f64], y: &mut [f64]) {
        for (row, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let (i, j) = self.pairs[k];
                acc += self.values[k] * q[i] * q[j];
            }
            *yr += alpha * acc;
        }
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |k| {
            let (i, j) = self.pairs[k];
            (i, j, self.values[k])
        })
    }

    /// Dense `dim x dim(dim+1)/2` representation.
    pub fn to_dense_compressed(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, compressed_len(self.dim));
        for r in 0..self.dim {
            for (i, j, v) in self.row(r) {
                out[(r, compressed_index(i, j))] += v;
            }
        }
        out
    }

    /// Dense `dim x dim²` representation acting on the full Kronecker product,
    /// with cross terms split symmetrically.
    pub fn to_dense_full(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut out = DMatrix::zeros(n, n * n);
        for r in 0..n {
            for (i, j, v) in self.row(r) {
                if i == j {
                    out[(r, i * n + i)] += v;
                } else {
                    out[(r, i * n + j)] += 0.5 * v;
                    out[(r, j * n + i)] += 0.5 * v;
                }
            }
        }
        out
    }

    /// Bilinear form `B(a, b)` with `B(q, q) = H[q ⊗ q]`, accumulated as `y += alpha * B(a, b)`.
    pub fn bilinear_add(&self, alpha: f64, a: &[f64], b: &[f64], y: &mut [f64]) {
        for (row, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let (i, j) = self.pairs[k];
                let h = self.values[k];
                if i == j {
                    acc += h * a[i] * b[i];
                } else {
                    acc += 0.5 * h * (a[i] * b[j] + a[j] * b[i]);
                }
            }
            *yr += alpha * acc;
        }
    }
}

/// One operator block with its coefficient function.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTerm<T> {
    pub coefficient: Coefficient,
    pub operator: T,
}

impl<T> AffineTerm<T> {
    pub fn new(coefficient: Coefficient, operator: T) -> Self {
        Self {
            coefficient,
            operator,
        }
    }
}

/// Time-dependent input `u(t)` written into the output slice.
pub type InputFn<'a> = &'a (dyn Fn(f64, &mut [f64]) + Sync);

/// `dq/dt = Σ θ_c c + Σ θ_a A q + Σ θ_h H[q ⊗ q] + Σ θ_b B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialAffineSystem {
    state_dim: usize,
    input_dim: usize,
    param_dim: usize,
    constant: Vec<AffineTerm<DVector<f64>>>,
    linear: Vec<AffineTerm<SparseMatrix>>,
    quadratic: Vec<AffineTerm<QuadraticOperator>>,
    input: Vec<AffineTerm<DMatrix<f64>>>,
}

impl PolynomialAffineSystem {
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        param_dim: usize,
        constant: Vec<AffineTerm<DVector<f64>>>,
        linear: Vec<AffineTerm<SparseMatrix>>,
        quadratic: Vec<AffineTerm<QuadraticOperator>>,
        input: Vec<AffineTerm<DMatrix<f64>>>,
    ) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        for t in &constant {
            check_dim("constant block length", state_dim, t.operator.len())?;
        }
        for t in &linear {
            check_dim("linear block rows", state_dim, t.operator.nrows())?;
            check_dim("linear block cols", state_dim, t.operator.ncols())?;
        }
        for t in &quadratic {
            check_dim("quadratic block dimension", state_dim, t.operator.dim())?;
        }
        for t in &input {
            check_dim("input block rows", state_dim, t.operator.nrows())?;
            check_dim("input block cols", input_dim, t.operator.ncols())?;
        }
        let coeffs = constant
            .iter()
            .map(|t| t.coefficient)
            .chain(linear.iter().map(|t| t.coefficient))
            .chain(quadratic.iter().map(|t| t.coefficient))
            .chain(input.iter().map(|t| t.coefficient));
        for c in coeffs {
            if let Some(i) = c.param_index() {
                if i >= param_dim {
                    return Err(Error::InvalidArgument(format!(
                        "coefficient refers to parameter {i} but the parameter vector has length {param_dim}"
                    )));
                }
            }
        }
        Ok(Self {
            state_dim,
            input_dim,
            param_dim,
            constant,
            linear,
            quadratic,
            input,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn constant_terms(&self) -> &[AffineTerm<DVector<f64>>] {
        &self.constant
    }

    pub fn linear_terms(&self) -> &[AffineTerm<SparseMatrix>] {
        &self.linear
    }

    pub fn quadratic_terms(&self) -> &[AffineTerm<QuadraticOperator>] {
        &self.quadratic
    }

    pub fn input_terms(&self) -> &[AffineTerm<DMatrix<f64>>] {
        &self.input
    }

    /// Block counts `(n_c, n_a, n_h, n_b)`.
    pub fn block_counts(&self) -> (usize, usize, usize, usize) {
        (
            self.constant.len(),
            self.linear.len(),
            self.quadratic.len(),
            self.input.len(),
        )
    }

    /// Evaluates the right-hand side at `(q, u; ξ)`.
    pub fn evaluate(&self, xi: &[f64], q: &[f64], u: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim("parameter vector", self.param_dim, xi.len())?;
        check_dim("state", self.state_dim, q.len())?;
        check_dim("output", self.state_dim, out.len())?;
        if !self.input.is_empty() {
            check_dim("input", self.input_dim, u.len())?;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for t in &self.constant {
            let th = t.coefficient.eval(xi);
            for (o, c) in out.iter_mut().zip(t.operator.iter()) {
                *o += th * c;
            }
        }
        for t in &self.linear {
            t.operator.mul_add(t.coefficient.eval(xi), q, out);
        }
        for t in &self.quadratic {
            t.operator.mul_add(t.coefficient.eval(xi), q, out);
        }
        for t in &self.input {
            let th = t.coefficient.eval(xi);
            let bu = &t.operator * DVector::from_column_slice(u);
            for (o, v) in out.iter_mut().zip(bu.iter()) {
                *o += th * v;
            }
        }
        Ok(())
    }

    /// Binds a parameter vector (and optional input signal) for time integration.
    pub fn at<'a>(&'a self, xi: &[f64], input: Option<InputFn<'a>>) -> Result<SystemAt<'a>> {
        check_dim("parameter vector", self.param_dim, xi.len())?;
        if !self.input.is_empty() && input.is_none() {
            return Err(Error::InvalidArgument(
                "system has input blocks but no input signal was given".into(),
            ));
        }
        let mut constant = vec![0.0; self.state_dim];
        for t in &self.constant {
            let th = t.coefficient.eval(xi);
            for (o, c) in constant.iter_mut().zip(t.operator.iter()) {
                *o += th * c;
            }
        }
        Ok(SystemAt {
            system: self,
            constant,
            linear_coeffs: self.linear.iter().map(|t| t.coefficient.eval(xi)).collect(),
            quadratic_coeffs: self.quadratic.iter().map(|t| t.coefficient.eval(xi)).collect(),
            input_coeffs: self.input.iter().map(|t| t.coefficient.eval(xi)).collect(),
            input,
        })
    }

    /// Gershgorin bound on the spectral radius of the Jacobian at `ξ`, for
    /// states whose entries are bounded by `state_scale` in magnitude.
    pub fn stiffness_bound(&self, xi: &[f64], state_scale: f64) -> f64 {
        let mut row_sums = vec![0.0; self.state_dim];
        for t in &self.linear {
            let th = t.coefficient.eval(xi).abs();
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s += th * t.operator.row(r).map(|(_, v)| v.abs()).sum::<f64>();
            }
        }
        for t in &self.quadratic {
            let th = t.coefficient.eval(xi).abs();
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s += 2.0 * state_scale * th * t.operator.row(r).map(|(_, _, v)| v.abs()).sum::<f64>();
            }
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }
}

/// A system with its coefficient functions evaluated at a fixed `ξ`.
pub struct SystemAt<'a> {
    system: &'a PolynomialAffineSystem,
    constant: Vec<f64>,
    linear_coeffs: Vec<f64>,
    quadratic_coeffs: Vec<f64>,
    input_coeffs: Vec<f64>,
    input: Option<InputFn<'a>>,
}

impl super::VectorField for SystemAt<'_> {
    fn dim(&self) -> usize {
        self.system.state_dim
    }

    fn rhs(&self, t: f64, q: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.constant);
        for (term, &th) in self.system.linear.iter().zip(&self.linear_coeffs) {
            term.operator.mul_add(th, q, out);
        }
        for (term, &th) in self.system.quadratic.iter().zip(&self.quadratic_coeffs) {
            term.operator.mul_add(th, q, out);
        }
        if let Some(input) = self.input {
            let mut u = vec![0.0; self.system.input_dim];
            input(t, &mut u);
            let u = DVector::from_vec(u);
            for (term, &th) in self.system.input.iter().zip(&self.input_coeffs) {
                let bu = &term.operator * &u;
                for (o, v) in out.iter_mut().zip(bu.iter()) {
                    *o += th * v;
                }
            }
        }
    }
}
