use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Uniform sample grid with an integer number of internal integrator steps
/// per sample interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub n_t: usize,
    pub substeps: usize,
}

impl TimeGrid {
    pub const DEFAULT_SUBSTEPS: usize = 10;

    pub fn new(t0: f64, tf: f64, n_t: usize) -> Result<Self> {
        Self::with_substeps(t0, tf, n_t, Self::DEFAULT_SUBSTEPS)
    }

    pub fn with_substeps(t0: f64, tf: f64, n_t: usize, substeps: usize) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && t0 < tf) {
            return Err(Error::InvalidArgument(format!(
                "time grid needs t0 < tf, got [{t0}, {tf}]"
            )));
        }
        if n_t < 2 {
            return Err(Error::InvalidArgument("time grid needs n_t >= 2".into()));
        }
        if substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be positive".into()));
        }
        Ok(Self {
            t0,
            tf,
            n_t,
            substeps,
        })
    }

    /// Same sample times with a different internal step.
    pub fn refined(&self, substeps: usize) -> Result<Self> {
        Self::with_substeps(self.t0, self.tf, self.n_t, substeps)
    }

    pub fn spacing(&self) -> f64 {
        (self.tf - self.t0) / (self.n_t - 1) as f64
    }

    pub fn dt_internal(&self) -> f64 {
        self.spacing() / self.substeps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j + 1 == self.n_t {
            self.tf
        } else {
            self.t0 + j as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|j| self.time(j)).collect()
    }
}

/// Upper bound on the state norm beyond which an integration is declared unstable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstabilityGuard {
    pub bound: f64,
}

impl InstabilityGuard {
    pub fn new(bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "instability guard bound must be positive, got {bound}"
            )));
        }
        Ok(Self { bound })
    }

    /// `factor` times the largest norm among `states`.
    pub fn from_reference<'a, I>(factor: f64, states: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let max = states
            .into_iter()
            .map(crate::numeric::norm2)
            .fold(0.0, f64::max);
        Self::new(factor * max)
    }

    #[inline]
    pub fn violated(&self, q: &[f64]) -> bool {
        let mut sq = 0.0;
        for &v in q {
            if !v.is_finite() {
                return true;
            }
            sq += v * v;
        }
        !(sq.sqrt() <= self.bound)
    }
}

/// Sampled solution of an initial-value problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    /// States at the sample times, truncated at the last sample before a blowup.
    pub states: Vec<Vec<f64>>,
    pub stable: bool,
    pub blowup_time: Option<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }
}

/// Autonomous or time-dependent vector field `dq/dt = f(t, q)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, q: &[f64], out: &mut [f64]);
}

/// Explicit fixed-step RK4 at `grid.dt_internal()`, sampled at the grid times.
///
/// The first internal step producing a non-finite entry or a norm above the
/// guard bound stops the integration and marks the trajectory unstable.
pub fn integrate<F>(field: &F, q0: &[f64], grid: &TimeGrid, guard: &InstabilityGuard) -> Result<Trajectory>
where
    F: VectorField + ?Sized,
{
    let n = field.dim();
    check_dim("initial state", n, q0.len())?;
    if !(guard.bound > 0.0) {
        return Err(Error::InvalidArgument("guard bound must be positive".into()));
    }
    let mut states = Vec::with_capacity(grid.n_t);
    if guard.violated(q0) {
        return Ok(Trajectory {
            grid: *grid,
            states,
            stable: false,
            blowup_time: Some(grid.t0),
        });
    }
    states.push(q0.to_vec());

    let h = grid.dt_internal();
    let mut q = q0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    for j in 1..grid.n_t {
        let t_start = grid.time(j - 1);
        for s in 0..grid.substeps {
            let t = t_start + s as f64 * h;
            field.rhs(t, &q, &mut k1);
            for i in 0..n {
                tmp[i] = q[i] + 0.5 * h * k1[i];
            }
            field.rhs(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = q[i] + 0.5 * h * k2[i];
            }
            field.rhs(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = q[i] + h * k3[i];
            }
            field.rhs(t + h, &tmp, &mut k4);
            for i in 0..n {
                q[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            }
            if guard.violated(&q) {
                return Ok(Trajectory {
                    grid: *grid,
                    states,
                    stable: false,
                    blowup_time: Some(t + h),
                });
            }
        }
        states.push(q.clone());
    }

    Ok(Trajectory {
        grid: *grid,
        states,
        stable: true,
        blowup_time: None,
    })
}
