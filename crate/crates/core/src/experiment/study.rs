use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cache::FomCache;
use super::config::StudyConfig;
use super::io::write_atomic;
use super::metrics::{geometric_mean, instability_fraction, projection_integrals, quantile, total_error, ErrorIntegrals};
use super::problem::Problem;
use crate::active::{run_campaign, CampaignRecord, CampaignSettings, CampaignSetup, CandidateSet, IterationState, SamplingMode};
use crate::error::{Error, Result};
use crate::numeric::mix_seed;

/// Metrics of the ROM trained on `n_p` samples in one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub trial: usize,
    pub n_p: usize,
    pub mode: SamplingMode,
    pub beta: f64,
    pub e_total: f64,
    pub e_proj: f64,
    pub reduced_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRow {
    pub trial: usize,
    pub n_p: usize,
    pub mode: SamplingMode,
    pub candidate_index: usize,
    pub alpha: f64,
    pub omega: Option<f64>,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOutcome {
    pub trial: usize,
    pub record: CampaignRecord,
    pub metrics: Vec<MetricsRow>,
    pub acquisition: Vec<AcquisitionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub initial: usize,
    pub adaptive: CampaignOutcome,
    pub lhs: CampaignOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub candidates: Vec<Vec<f64>>,
    pub trials: Vec<TrialResult>,
}

impl StudyResult {
    pub fn metrics(&self) -> impl Iterator<Item = &MetricsRow> {
        self.trials
            .iter()
            .flat_map(|t| t.adaptive.metrics.iter().chain(&t.lhs.metrics))
    }
}

/// Statistics across trials at one `(mode, n_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialAggregate {
    pub mode: SamplingMode,
    pub n_p: usize,
    pub n_trials: usize,
    pub mean_beta: f64,
    pub max_beta: f64,
    pub e_total_geomean: f64,
    pub e_total_q05: f64,
    pub e_total_q95: f64,
    pub e_proj_geomean: f64,
    pub e_proj_q05: f64,
    pub e_proj_q95: f64,
}

pub fn aggregate<'a, I: IntoIterator<Item = &'a MetricsRow>>(rows: I) -> Vec<TrialAggregate> {
    let rows: Vec<&MetricsRow> = rows.into_iter().collect();
    let mut keys: Vec<(SamplingMode, usize)> = rows.iter().map(|r| (r.mode, r.n_p)).collect();
    keys.sort_by_key(|&(m, n)| (m.as_str(), n));
    keys.dedup();
    keys.into_iter()
        .map(|(mode, n_p)| {
            let group: Vec<&&MetricsRow> = rows.iter().filter(|r| r.mode == mode && r.n_p == n_p).collect();
            let beta: Vec<f64> = group.iter().map(|r| r.beta).collect();
            let et: Vec<f64> = group.iter().map(|r| r.e_total).collect();
            let ep: Vec<f64> = group.iter().map(|r| r.e_proj).collect();
            TrialAggregate {
                mode,
                n_p,
                n_trials: group.len(),
                mean_beta: beta.iter().sum::<f64>() / beta.len() as f64,
                max_beta: beta.iter().copied().fold(0.0, f64::max),
                e_total_geomean: geometric_mean(&et).unwrap_or(f64::NAN),
                e_total_q05: quantile(&et, 0.05).unwrap_or(f64::NAN),
                e_total_q95: quantile(&et, 0.95).unwrap_or(f64::NAN),
                e_proj_geomean: geometric_mean(&ep).unwrap_or(f64::NAN),
                e_proj_q05: quantile(&ep, 0.05).unwrap_or(f64::NAN),
                e_proj_q95: quantile(&ep, 0.95).unwrap_or(f64::NAN),
            }
        })
        .collect()
}

/// A configured study: problem, candidate grid, and FOM cache.
pub struct Study {
    config: StudyConfig,
    problem: Arc<Problem>,
    candidates: CandidateSet,
    settings: CampaignSettings,
    cache: FomCache,
}

impl Study {
    pub fn new(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let problem = Arc::new(Problem::new(config.problem)?);
        let candidates = CandidateSet::tensor(config.candidates.clone())?;
        let settings = config.campaign_settings()?;
        let cache = FomCache::new(
            Arc::clone(&problem),
            settings.grid,
            config.time.fom_substeps,
            candidates.points().to_vec(),
            config.study.cache_dir.clone(),
        );
        Ok(Self {
            config,
            problem,
            candidates,
            settings,
            cache,
        })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn cache(&self) -> &FomCache {
        &self.cache
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Initial candidate of trial `trial`, drawn uniformly from the grid.
    pub fn initial_index(&self, trial: usize) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.config.study.seed, &[trial as u64]));
        rng.random_range(0..self.candidates.len())
    }

    pub fn campaign_seed(&self, trial: usize, mode: SamplingMode) -> u64 {
        let tag = match mode {
            SamplingMode::Adaptive => 1,
            SamplingMode::Lhs => 2,
        };
        mix_seed(self.config.study.seed, &[trial as u64, tag])
    }

    /// Runs one campaign and evaluates its ROMs over the whole grid.
    pub fn run_campaign(&self, trial: usize, mode: SamplingMode, initial: usize, seed: u64) -> Result<CampaignOutcome> {
        let foms = self.cache.warm()?;
        let setup = CampaignSetup {
            system: self.problem.system(),
            candidates: &self.candidates,
            fom: &self.cache,
            settings: &self.settings,
        };
        let norm = self.problem.norm();
        let dt = self.settings.grid.spacing();
        let mut metrics = Vec::new();
        let mut acquisition = Vec::new();
        let mut observer = |state: &IterationState<'_>| -> Result<()> {
            let basis = &state.rom.basis;
            let mut integrals = Vec::with_capacity(foms.len());
            for (c, (fom, eval)) in foms.iter().zip(state.evaluations).enumerate() {
                let e = match &eval.mean {
                    Some(mean) => ErrorIntegrals::between(fom, &basis.lift(mean)?, norm, dt)?,
                    None => ErrorIntegrals::missing(fom, norm, dt),
                };
                acquisition.push(AcquisitionRow {
                    trial,
                    n_p: state.n_p,
                    mode,
                    candidate_index: c,
                    alpha: eval.score.alpha,
                    omega: eval.score.omega,
                    relative_error: e.relative()?,
                });
                integrals.push(e);
            }
            let refs: Vec<&DMatrix<f64>> = foms.iter().map(|f| f.as_ref()).collect();
            let alphas: Vec<f64> = state.evaluations.iter().map(|e| e.score.alpha).collect();
            metrics.push(MetricsRow {
                trial,
                n_p: state.n_p,
                mode,
                beta: instability_fraction(&alphas),
                e_total: total_error(&integrals)?,
                e_proj: total_error(&projection_integrals(basis, &refs, norm, dt)?)?,
                reduced_dim: basis.rank(),
            });
            Ok(())
        };
        let record = run_campaign(&setup, mode, initial, self.config.study.budget, seed, &mut observer)?;
        Ok(CampaignOutcome {
            trial,
            record,
            metrics,
            acquisition,
        })
    }

    pub fn run_trial(&self, trial: usize) -> Result<TrialResult> {
        let initial = self.initial_index(trial);
        let adaptive = self.run_campaign(trial, SamplingMode::Adaptive, initial, self.campaign_seed(trial, SamplingMode::Adaptive))?;
        let lhs = self.run_campaign(trial, SamplingMode::Lhs, initial, self.campaign_seed(trial, SamplingMode::Lhs))?;
        Ok(TrialResult {
            trial,
            initial,
            adaptive,
            lhs,
        })
    }

    /// Runs `n_trials` trials, reporting each finished trial to `progress`.
    pub fn run(&self, n_trials: usize, progress: &mut dyn FnMut(&TrialResult)) -> Result<StudyResult> {
        if n_trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        let mut trials = Vec::with_capacity(n_trials);
        for t in 0..n_trials {
            let result = self.run_trial(t)?;
            progress(&result);
            trials.push(result);
        }
        Ok(StudyResult {
            config: self.config.clone(),
            candidates: self.candidates.points().to_vec(),
            trials,
        })
    }
}

/// Builds the study from `config` and runs `n_trials` trials.
pub fn run_study(config: &StudyConfig, n_trials: usize) -> Result<StudyResult> {
    Study::new(config.clone())?.run(n_trials, &mut |_| {})
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes the study tables and `study.json` into `out`.
pub fn write_study(result: &StudyResult, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let outcomes = || result.trials.iter().flat_map(|t| [&t.adaptive, &t.lhs]);
    write_atomic(
        &out.join("instability.csv"),
        &csv_bytes(
            &["trial", "n_p", "mode", "beta"],
            result
                .metrics()
                .map(|m| vec![m.trial.to_string(), m.n_p.to_string(), m.mode.as_str().into(), m.beta.to_string()]),
        )?,
    )?;
    write_atomic(
        &out.join("errors.csv"),
        &csv_bytes(
            &["trial", "n_p", "mode", "e_total", "e_proj"],
            result.metrics().map(|m| {
                vec![
                    m.trial.to_string(),
                    m.n_p.to_string(),
                    m.mode.as_str().into(),
                    m.e_total.to_string(),
                    m.e_proj.to_string(),
                ]
            }),
        )?,
    )?;
    write_atomic(
        &out.join("acquisition.csv"),
        &csv_bytes(
            &["trial", "n_p", "candidate_index", "alpha", "omega"],
            result.trials.iter().flat_map(|t| &t.adaptive.acquisition).map(|a| {
                vec![
                    a.trial.to_string(),
                    a.n_p.to_string(),
                    a.candidate_index.to_string(),
                    a.alpha.to_string(),
                    fmt_opt(a.omega),
                ]
            }),
        )?,
    )?;
    let dim = result.candidates.first().map_or(0, Vec::len);
    let mut header = vec!["trial".to_string(), "n_p".into(), "mode".into()];
    header.extend((0..dim).map(|k| format!("xi{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_atomic(
        &out.join("samples.csv"),
        &csv_bytes(
            &header_refs,
            outcomes().flat_map(|o| {
                o.record.final_training().iter().enumerate().map(move |(k, &c)| {
                    let mut row = vec![o.trial.to_string(), (k + 1).to_string(), o.record.mode.as_str().into()];
                    row.extend(result.candidates[c].iter().map(|v| v.to_string()));
                    row
                })
            }),
        )?,
    )?;
    write_atomic(&out.join("study.json"), serde_json::to_string_pretty(result)?.as_bytes())?;
    Ok(())
}

pub fn read_study(dir: &Path) -> Result<StudyResult> {
    let text = fs::read_to_string(dir.join("study.json"))?;
    Ok(serde_json::from_str(&text)?)
}

/// Figure tables derived from a finished study.
pub fn write_report(result: &StudyResult, out: &Path) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(out)?;
    let agg = aggregate(result.metrics());
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let path = out.join(name);
        write_atomic(&path, &csv_bytes(header, rows.into_iter())?)?;
        written.push(path);
        Ok(())
    };
    emit(
        "fig_instability.csv",
        &["n_p", "mode", "mean_beta", "max_beta", "n_trials"],
        agg.iter()
            .map(|a| {
                vec![
                    a.n_p.to_string(),
                    a.mode.as_str().into(),
                    a.mean_beta.to_string(),
                    a.max_beta.to_string(),
                    a.n_trials.to_string(),
                ]
            })
            .collect(),
    )?;
    emit(
        "fig_rom_error.csv",
        &["n_p", "mode", "geomean", "q05", "q95"],
        agg.iter()
            .map(|a| {
                vec![
                    a.n_p.to_string(),
                    a.mode.as_str().into(),
                    a.e_total_geomean.to_string(),
                    a.e_total_q05.to_string(),
                    a.e_total_q95.to_string(),
                ]
            })
            .collect(),
    )?;
    emit(
        "fig_projection_error.csv",
        &["n_p", "mode", "geomean", "q05", "q95"],
        agg.iter()
            .map(|a| {
                vec![
                    a.n_p.to_string(),
                    a.mode.as_str().into(),
                    a.e_proj_geomean.to_string(),
                    a.e_proj_q05.to_string(),
                    a.e_proj_q95.to_string(),
                ]
            })
            .collect(),
    )?;
    emit(
        "fig_candidate_error.csv",
        &["trial", "n_p", "mode", "candidate_index", "alpha", "omega", "relative_error"],
        result
            .trials
            .iter()
            .flat_map(|t| t.adaptive.acquisition.iter().chain(&t.lhs.acquisition))
            .map(|a| {
                vec![
                    a.trial.to_string(),
                    a.n_p.to_string(),
                    a.mode.as_str().into(),
                    a.candidate_index.to_string(),
                    a.alpha.to_string(),
                    fmt_opt(a.omega),
                    a.relative_error.to_string(),
                ]
            })
            .collect(),
    )?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, n_p: usize, mode: SamplingMode, beta: f64, e: f64) -> MetricsRow {
        MetricsRow {
            trial,
            n_p,
            mode,
            beta,
            e_total: e,
            e_proj: e / 10.0,
            reduced_dim: 3,
        }
    }

    #[test]
    fn single_trial_aggregate_equals_the_trial() {
        let rows = [row(0, 1, SamplingMode::Adaptive, 0.25, 0.01)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].mean_beta, 0.25);
        assert_eq!(agg[0].max_beta, 0.25);
        assert!((agg[0].e_total_geomean - 0.01).abs() < 1e-15);
        assert_eq!(agg[0].e_total_q05, 0.01);
    }

    #[test]
    fn aggregate_groups_by_mode_and_size() {
        let rows = [
            row(0, 1, SamplingMode::Adaptive, 0.5, 1e-2),
            row(1, 1, SamplingMode::Adaptive, 0.0, 1e-4),
            row(0, 1, SamplingMode::Lhs, 1.0, 1.0),
            row(0, 2, SamplingMode::Adaptive, 0.0, 1e-3),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 3);
        let a1 = &agg[0];
        assert_eq!((a1.mode, a1.n_p, a1.n_trials), (SamplingMode::Adaptive, 1, 2));
        assert_eq!(a1.mean_beta, 0.25);
        assert!((a1.e_total_geomean - 1e-3).abs() < 1e-15);
        assert!(a1.e_total_q05 <= a1.e_total_q95);
    }
}
