use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bayesrom::active::SamplingMode;
use bayesrom::experiment::io::{write_matrix, write_sidecar};
use bayesrom::experiment::{
    read_study, write_report, write_study, Problem, ProblemConfig, Study, StudyConfig, StudyResult, TrialResult,
};
use bayesrom::models::TimeGrid;
use bayesrom::{Error, Result};

#[derive(Parser)]
#[command(name = "bayesrom", version, about = "Bayesian parametric operator inference with adaptive sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order solves.
    Fom {
        #[command(subcommand)]
        action: FomAction,
    },
    /// Single sampling campaigns.
    Campaign {
        #[command(subcommand)]
        action: CampaignAction,
    },
    /// Multi-trial studies comparing adaptive and Latin hypercube sampling.
    Study {
        #[command(subcommand)]
        action: StudyAction,
    },
    /// Figure-data tables from a finished study.
    Report {
        #[arg(long)]
        study: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: ReportFormat,
        /// Output directory (defaults to the study directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset configuration as TOML.
    Config {
        #[arg(long, default_value = "heat-desk")]
        preset: String,
    },
}

#[derive(Subcommand)]
enum FomAction {
    Solve {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        /// Parameter values, e.g. `0.01,2.5` for (κ, ρ) or `0.005` for ν.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        param: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Heat grid nodes or Burgers interior points per direction.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        n_t: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        tf: f64,
        /// RK4 steps per sample interval; chosen for stability when absent.
        #[arg(long)]
        substeps: Option<usize>,
    },
}

#[derive(Subcommand)]
enum CampaignAction {
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial candidate index; drawn from the seed when absent.
        #[arg(long)]
        initial: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum StudyAction {
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Overrides the configured number of trials.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration name.
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<StudyConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => StudyConfig::load(path),
            (None, Some(name)) => StudyConfig::preset(name),
            (None, None) => Err(Error::Config("pass --config <file> or --preset <name>".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Heat,
    Burgers,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adaptive,
    Lhs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fom {
            action:
                FomAction::Solve {
                    problem,
                    param,
                    out,
                    size,
                    n_t,
                    tf,
                    substeps,
                },
        } => fom_solve(problem, &param, &out, size, n_t, tf, substeps),
        Command::Campaign {
            action:
                CampaignAction::Run {
                    config,
                    mode,
                    seed,
                    initial,
                    out,
                },
        } => campaign_run(config.load()?, mode, seed, initial, &out),
        Command::Study {
            action: StudyAction::Run { config, trials, out },
        } => study_run(config.load()?, trials, &out),
        Command::Report { study, format, out } => {
            let ReportFormat::Csv = format;
            let result = read_study(&study)?;
            for path in write_report(&result, out.as_deref().unwrap_or(&study))? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Config { preset } => {
            print!("{}", StudyConfig::preset(&preset)?.to_toml_string()?);
            Ok(())
        }
    }
}

fn fom_solve(
    kind: ProblemKind,
    param: &[f64],
    out: &Path,
    size: Option<usize>,
    n_t: Option<usize>,
    tf: f64,
    substeps: Option<usize>,
) -> Result<()> {
    let (config, expected, default_nt) = match kind {
        ProblemKind::Heat => (
            ProblemConfig::Heat {
                n: size.unwrap_or(500),
                length: 1.0,
            },
            2,
            101,
        ),
        ProblemKind::Burgers => (ProblemConfig::Burgers { n_side: size.unwrap_or(101) }, 1, 100),
    };
    if param.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {expected} parameter value(s), got {}",
            param.len()
        )));
    }
    let problem = Problem::new(config)?;
    let grid = TimeGrid::new(0.0, tf, n_t.unwrap_or(default_nt))?;
    let start = Instant::now();
    let snapshots = problem.solve_fom(param, &grid, substeps)?;
    write_matrix(out, &snapshots)?;
    write_sidecar(
        out,
        &[
            ("problem", problem.id()),
            ("xi", param.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")),
            ("t0", grid.t0.to_string()),
            ("tf", grid.tf.to_string()),
            ("n_t", grid.n_t.to_string()),
            ("layout", "state x time".into()),
            ("creator", format!("bayesrom {}", env!("CARGO_PKG_VERSION"))),
        ],
    )?;
    eprintln!(
        "wrote {}x{} snapshots to {} in {:.2?}",
        snapshots.nrows(),
        snapshots.ncols(),
        out.display(),
        start.elapsed()
    );
    Ok(())
}

fn campaign_run(config: StudyConfig, mode: ModeArg, seed: u64, initial: Option<usize>, out: &Path) -> Result<()> {
    let mode = match mode {
        ModeArg::Adaptive => SamplingMode::Adaptive,
        ModeArg::Lhs => SamplingMode::Lhs,
    };
    let study = Study::new(config)?;
    let initial = match initial {
        Some(i) => i,
        None => ChaCha8Rng::seed_from_u64(seed).random_range(0..study.candidates().len()),
    };
    let start = Instant::now();
    let outcome = study.run_campaign(0, mode, initial, seed)?;
    for m in &outcome.metrics {
        eprintln!(
            "n_p={:2} r={:2} beta={:.3} e_total={:.3e} e_proj={:.3e}",
            m.n_p, m.reduced_dim, m.beta, m.e_total, m.e_proj
        );
    }
    eprintln!("campaign finished in {:.1?}", start.elapsed());
    let (adaptive, lhs) = match mode {
        SamplingMode::Adaptive => (outcome.clone(), empty_outcome(&outcome, SamplingMode::Lhs)),
        SamplingMode::Lhs => (empty_outcome(&outcome, SamplingMode::Adaptive), outcome.clone()),
    };
    let result = StudyResult {
        config: study.config().clone(),
        candidates: study.candidates().points().to_vec(),
        trials: vec![TrialResult {
            trial: 0,
            initial,
            adaptive,
            lhs,
        }],
    };
    write_study(&result, out)?;
    std::fs::write(out.join("campaign.json"), serde_json::to_string_pretty(&outcome.record)?)?;
    Ok(())
}

fn empty_outcome(like: &bayesrom::experiment::CampaignOutcome, mode: SamplingMode) -> bayesrom::experiment::CampaignOutcome {
    let mut o = like.clone();
    o.record.mode = mode;
    o.record.iterations.clear();
    o.metrics.clear();
    o.acquisition.clear();
    o
}

fn study_run(mut config: StudyConfig, trials: Option<usize>, out: &Path) -> Result<()> {
    if let Some(t) = trials {
        config.study.trials = t;
    }
    let n_trials = config.study.trials;
    let study = Study::new(config)?;
    let start = Instant::now();
    let result = study.run(n_trials, &mut |t| {
        let last = |o: &bayesrom::experiment::CampaignOutcome| {
            o.metrics
                .last()
                .map(|m| format!("beta={:.2} e_total={:.2e}", m.beta, m.e_total))
                .unwrap_or_default()
        };
        eprintln!(
            "trial {} (initial {}): adaptive {} | lhs {} [{:.0?}]",
            t.trial,
            t.initial,
            last(&t.adaptive),
            last(&t.lhs),
            start.elapsed()
        );
    })?;
    write_study(&result, out)?;
    eprintln!(
        "study finished in {:.1?} with {} FOM solves",
        start.elapsed(),
        study.cache().solve_count()
    );
    Ok(())
}
