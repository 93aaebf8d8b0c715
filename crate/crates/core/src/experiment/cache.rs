use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use super::io::{read_matrix, write_matrix, write_sidecar};
use super::problem::Problem;
use crate::active::FomSource;
use crate::error::{Error, Result};
use crate::models::TimeGrid;

/// FOM snapshots per parameter, held in memory and optionally persisted.
///
/// Keys combine the problem discretization, the time grid, the FOM step
/// setting, and the bit patterns of `ξ`.
pub struct FomCache {
    problem: Arc<Problem>,
    grid: TimeGrid,
    substeps: Option<usize>,
    candidates: Vec<Vec<f64>>,
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Arc<DMatrix<f64>>>>,
    solves: AtomicUsize,
}

impl FomCache {
    pub fn new(
        problem: Arc<Problem>,
        grid: TimeGrid,
        substeps: Option<usize>,
        candidates: Vec<Vec<f64>>,
        dir: Option<PathBuf>,
    ) -> Self {
        Self {
            problem,
            grid,
            substeps,
            candidates,
            dir,
            memory: Mutex::new(HashMap::new()),
            solves: AtomicUsize::new(0),
        }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Number of FOM integrations actually performed.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::SeqCst)
    }

    pub fn key(&self, xi: &[f64]) -> String {
        let steps = self.substeps.map_or_else(|| "auto".to_string(), |s| s.to_string());
        let xi_hex: Vec<String> = xi.iter().map(|v| format!("{:016x}", v.to_bits())).collect();
        format!(
            "{}-t{:016x}-{:016x}-{}-s{}-{}",
            self.problem.id(),
            self.grid.t0.to_bits(),
            self.grid.tf.to_bits(),
            self.grid.n_t,
            steps,
            xi_hex.join("-")
        )
    }

    fn file(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.promdat")))
    }

    pub fn get(&self, xi: &[f64]) -> Result<Arc<DMatrix<f64>>> {
        let key = self.key(xi);
        if let Some(hit) = self.memory.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let expected_rows = self.problem.system().state_dim();
        let loaded = match self.file(&key) {
            Some(path) if path.exists() => read_matrix(&path).ok().filter(|m| m.shape() == (expected_rows, self.grid.n_t)),
            _ => None,
        };
        let snapshots = match loaded {
            Some(m) => m,
            None => {
                let m = self.problem.solve_fom(xi, &self.grid, self.substeps)?;
                self.solves.fetch_add(1, Ordering::SeqCst);
                if let Some(path) = self.file(&key) {
                    self.persist(&path, xi, &m)?;
                }
                m
            }
        };
        let arc = Arc::new(snapshots);
        self.memory
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&arc));
        Ok(arc)
    }

    fn persist(&self, path: &Path, xi: &[f64], m: &DMatrix<f64>) -> Result<()> {
        write_matrix(path, m)?;
        write_sidecar(
            path,
            &[
                ("problem", self.problem.id()),
                ("xi", xi.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")),
                ("t0", self.grid.t0.to_string()),
                ("tf", self.grid.tf.to_string()),
                ("n_t", self.grid.n_t.to_string()),
                ("layout", "state x time".to_string()),
                ("creator", format!("bayesrom {}", env!("CARGO_PKG_VERSION"))),
            ],
        )
    }

    /// Snapshots at every candidate, computed in parallel where missing.
    pub fn warm(&self) -> Result<Vec<Arc<DMatrix<f64>>>> {
        use rayon::prelude::*;
        self.candidates.par_iter().map(|xi| self.get(xi)).collect()
    }
}

impl FomCache {
    fn candidate(&self, index: usize) -> Result<&[f64]> {
        self.candidates
            .get(index)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("candidate {index} out of range")))
    }
}

impl FomSource for FomCache {
    fn initial_state(&self, index: usize) -> Result<Vec<f64>> {
        self.candidate(index)?;
        Ok(self.problem.initial_state().to_vec())
    }

    fn snapshots(&self, index: usize) -> Result<Arc<DMatrix<f64>>> {
        self.get(self.candidate(index)?)
    }
}
