use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acquisition::{next_sample, AcquisitionScore};
use super::candidates::CandidateSet;
use super::lhs::lhs_baseline;
use crate::basis::{compute_pod_from_matrix, PodBasis, ShiftMode, TruncationRule};
use crate::error::{check_dim, Error, Result};
use crate::models::{InstabilityGuard, PolynomialAffineSystem, TimeGrid};
use crate::numeric::mix_seed;
use crate::opinf::{sample_realizations, RegressionData, StructureFunction};
use crate::regsearch::{select_regularization, RegChoice, RegGrid, TrainingSet};
use crate::rom::solve_ensemble;

/// Full-order data at candidate indices.
pub trait FomSource: Sync {
    fn initial_state(&self, index: usize) -> Result<Vec<f64>>;
    /// `N × n_t` snapshots on the campaign time grid.
    fn snapshots(&self, index: usize) -> Result<Arc<DMatrix<f64>>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub shift: ShiftMode,
    pub rule: TruncationRule,
    pub reg_grid: RegGrid,
    /// Posterior draws per candidate for acquisition.
    pub n_d: usize,
    /// ROM guard bound as a multiple of the largest reduced training norm.
    pub guard_factor: f64,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Adaptive,
    Lhs,
}

impl SamplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Adaptive => "adaptive",
            Self::Lhs => "lhs",
        }
    }
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Self::Adaptive),
            "lhs" | "random" => Ok(Self::Lhs),
            other => Err(Error::InvalidArgument(format!("unknown sampling mode '{other}'"))),
        }
    }
}

#[derive(Clone, Copy)]
pub struct CampaignSetup<'a> {
    pub system: &'a PolynomialAffineSystem,
    pub candidates: &'a CandidateSet,
    pub fom: &'a dyn FomSource,
    pub settings: &'a CampaignSettings,
}

/// Bayesian ROM trained on a set of candidates.
#[derive(Debug, Clone)]
pub struct TrainedRom {
    pub basis: Arc<PodBasis>,
    pub structure: Arc<StructureFunction>,
    pub guard: InstabilityGuard,
    pub choice: RegChoice,
}

/// Basis, regression and regularization search for the given training indices.
pub fn train_rom(setup: &CampaignSetup<'_>, training: &[usize], seed: u64) -> Result<TrainedRom> {
    if training.is_empty() {
        return Err(Error::InsufficientData("no training parameters".into()));
    }
    let settings = setup.settings;
    let snaps = training
        .iter()
        .map(|&i| setup.fom.snapshots(i))
        .collect::<Result<Vec<_>>>()?;
    let n = snaps[0].nrows();
    let n_t = settings.grid.n_t;
    let mut stacked = DMatrix::zeros(n, n_t * snaps.len());
    for (i, s) in snaps.iter().enumerate() {
        check_dim("snapshot state dimension", n, s.nrows())?;
        check_dim("snapshot count per parameter", n_t, s.ncols())?;
        stacked.columns_mut(i * n_t, n_t).copy_from(s.as_ref());
    }
    let basis = compute_pod_from_matrix(&stacked, settings.shift, settings.rule)?;
    drop(stacked);
    let structure = StructureFunction::inherited(setup.system, settings.shift == ShiftMode::MeanSnapshot, basis.rank())?;
    let reduced = snaps.iter().map(|s| basis.compress(s)).collect::<Result<Vec<_>>>()?;
    let params: Vec<Vec<f64>> = training.iter().map(|&i| setup.candidates.point(i).to_vec()).collect();
    let regression = RegressionData::from_snapshots(&reduced, None, &params, &structure, settings.grid.spacing())?;
    let guard = InstabilityGuard::from_reference(
        settings.guard_factor,
        reduced.iter().flat_map(|m| m.as_slice().chunks(m.nrows())),
    )?;
    let choice = select_regularization(
        &TrainingSet {
            regression: &regression,
            reduced: &reduced,
            params: &params,
            grid: settings.grid,
            guard,
        },
        &structure,
        &settings.reg_grid,
        seed,
    )?;
    Ok(TrainedRom {
        basis: Arc::new(basis),
        structure: Arc::new(structure),
        guard,
        choice,
    })
}

/// Scores of one candidate plus the reduced ensemble mean over stable draws.
#[derive(Debug, Clone)]
pub struct CandidateEvaluation {
    pub score: AcquisitionScore,
    /// `r × n_t`; absent when every draw is unstable.
    pub mean: Option<DMatrix<f64>>,
}

/// Scores every listed candidate with fresh posterior draws per candidate.
pub fn evaluate_candidates(
    setup: &CampaignSetup<'_>,
    rom: &TrainedRom,
    indices: &[usize],
    seed: u64,
) -> Result<Vec<CandidateEvaluation>> {
    let settings = setup.settings;
    indices
        .par_iter()
        .map(|&c| {
            let q0_hat = rom.basis.compress_vec(&setup.fom.initial_state(c)?)?;
            let draws = sample_realizations(
                &rom.choice.posterior,
                &rom.structure,
                &rom.basis,
                settings.n_d,
                mix_seed(seed, &[c as u64]),
            )?;
            let ensemble = solve_ensemble(&draws, setup.candidates.point(c), &q0_hat, &settings.grid, &rom.guard, None)?;
            Ok(CandidateEvaluation {
                score: AcquisitionScore::from_ensemble(&ensemble),
                mean: ensemble.mean().cloned(),
            })
        })
        .collect()
}

/// What a campaign observer sees after each trained ROM.
pub struct IterationState<'a> {
    pub n_p: usize,
    pub training: &'a [usize],
    pub rom: &'a TrainedRom,
    /// One entry per candidate of the grid, in candidate order.
    pub evaluations: &'a [CandidateEvaluation],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n_p: usize,
    pub training: Vec<usize>,
    pub reduced_dim: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub all_draws_stable: bool,
    pub training_error: Option<f64>,
    pub scores: Vec<AcquisitionScore>,
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub mode: SamplingMode,
    pub seed: u64,
    pub initial: usize,
    pub iterations: Vec<IterationRecord>,
}

impl CampaignRecord {
    pub fn final_training(&self) -> &[usize] {
        self.iterations.last().map_or(&[], |it| &it.training)
    }
}

/// Trains a ROM for every `n_p = 1..=budget`, scoring all candidates each time.
///
/// Adaptive mode adds the candidate chosen by [`next_sample`] among the
/// unconsumed ones; LHS mode uses a fresh Latin hypercube design of size `n_p`
/// sharing the initial sample.
pub fn run_campaign(
    setup: &CampaignSetup<'_>,
    mode: SamplingMode,
    initial: usize,
    budget: usize,
    seed: u64,
    observer: &mut dyn FnMut(&IterationState<'_>) -> Result<()>,
) -> Result<CampaignRecord> {
    let n_cand = setup.candidates.len();
    if budget == 0 || budget > n_cand {
        return Err(Error::InvalidArgument(format!(
            "budget must be in 1..={n_cand}, got {budget}"
        )));
    }
    if initial >= n_cand {
        return Err(Error::InvalidArgument(format!("initial index {initial} out of range")));
    }
    let shape = match mode {
        SamplingMode::Lhs => Some(setup.candidates.shape().ok_or_else(|| {
            Error::InvalidArgument("LHS needs a tensor-product candidate grid".into())
        })?),
        SamplingMode::Adaptive => None,
    };

    let all: Vec<usize> = (0..n_cand).collect();
    let mut candidates = setup.candidates.clone();
    let mut training = vec![initial];
    let mut iterations = Vec::with_capacity(budget);
    for n_p in 1..=budget {
        let step = n_p as u64;
        if let Some(shape) = &shape {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[step, 3]));
            training = lhs_baseline(shape, n_p, initial, &mut rng)?;
        }
        for &i in &training {
            candidates.consume(i)?;
        }
        let rom = train_rom(setup, &training, mix_seed(seed, &[step, 0]))?;
        let evaluations = evaluate_candidates(setup, &rom, &all, mix_seed(seed, &[step, 1]))?;
        observer(&IterationState {
            n_p,
            training: &training,
            rom: &rom,
            evaluations: &evaluations,
        })?;

        let selected = if mode == SamplingMode::Adaptive && n_p < budget {
            let scores: Vec<(usize, AcquisitionScore)> =
                candidates.unconsumed().map(|c| (c, evaluations[c].score)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[step, 2]));
            Some(next_sample(&scores, &mut rng)?)
        } else {
            None
        };
        iterations.push(IterationRecord {
            n_p,
            training: training.clone(),
            reduced_dim: rom.basis.rank(),
            lambda1: rom.choice.lambda1,
            lambda2: rom.choice.lambda2,
            all_draws_stable: rom.choice.all_draws_stable,
            training_error: rom.choice.training_error,
            scores: evaluations.iter().map(|e| e.score).collect(),
            selected,
        });
        if let Some(next) = selected {
            training.push(next);
        }
    }
    Ok(CampaignRecord {
        mode,
        seed,
        initial,
        iterations,
    })
}
