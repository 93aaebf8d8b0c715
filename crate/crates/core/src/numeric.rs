//! Small numerical helpers shared across modules.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Number of entries in the compressed Kronecker square of a length-`r` vector.
pub const fn compressed_len(r: usize) -> usize {
    r * (r + 1) / 2
}

/// Position of the product `q_i q_j` (`i <= j`) in the compressed Kronecker square.
///
/// Entries are ordered column-wise: `q0q0, q0q1, q1q1, q0q2, q1q2, q2q2, ...`.
#[inline]
pub const fn compressed_index(i: usize, j: usize) -> usize {
    j * (j + 1) / 2 + i
}

/// Writes the compressed Kronecker square of `q` into `out`.
#[inline]
pub fn compressed_kron(q: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), compressed_len(q.len()));
    let mut idx = 0;
    for j in 0..q.len() {
        let qj = q[j];
        for &qi in &q[..=j] {
            out[idx] = qi * qj;
            idx += 1;
        }
    }
}

/// Maps a full `r x r^2` quadratic operator (acting on `q ⊗ q`) onto its
/// compressed `r x r(r+1)/2` equivalent.
pub fn compress_quadratic(full: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let rows = full.nrows();
    let r = (full.ncols() as f64).sqrt().round() as usize;
    assert_eq!(r * r, full.ncols(), "full quadratic operator must have r^2 columns");
    let mut out = nalgebra::DMatrix::zeros(rows, compressed_len(r));
    for row in 0..rows {
        for j in 0..r {
            for i in 0..=j {
                let c = compressed_index(i, j);
                out[(row, c)] = if i == j {
                    full[(row, i * r + i)]
                } else {
                    full[(row, i * r + j)] + full[(row, j * r + i)]
                };
            }
        }
    }
    out
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `n` points spaced uniformly between `min` and `max` (inclusive).
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    max
                } else {
                    min + (max - min) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `n` points spaced logarithmically between `min` and `max` (inclusive).
pub fn logspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = linspace(min.log10(), max.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect();
    if let Some(first) = out.first_mut() {
        *first = min;
    }
    if n > 1 {
        out[n - 1] = max;
    }
    out
}

/// SplitMix64 finalizer, used to derive independent seeds from index tuples.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = seed;
    for &p in parts {
        state = splitmix(state ^ splitmix(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix(state)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
