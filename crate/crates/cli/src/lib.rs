//! Command-line front end: `gen`, `simulate`, `fit`, `cv`, `predict`, `phase`, `check`.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latent_structure::evaluate::SimulationKind;
use latent_structure::simulate::{ContinuousMode, InitialCondition};
use latent_structure::solver::FitMode;

use crate::config::{
    load, CheckConfig, CvCommandConfig, DataFormat, FitConfig, FitLambda, GenConfig, GenKind, InputConfig,
    PhaseCommandConfig, PredictConfig, SimulateConfig,
};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "latent-structure", version, about = "Dependency structure of linear stochastic systems with latent series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config (a bare config or an artifact written by this tool).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Observation file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Trailing rows withheld from fitting.
    #[arg(long)]
    pub holdout: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Trajectory,
    Prices,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Random,
    Illustrative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimArg {
    Discrete,
    Exact,
    Binned,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    SparsePlusLowRank,
    PureLasso,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SparsePlusLowRank => FitMode::SparsePlusLowRank,
            ModeArg::PureLasso => FitMode::PureLasso,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a ground-truth system.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        diag_margin: Option<f64>,
        #[arg(long)]
        min_magnitude: Option<f64>,
    },
    /// Simulate observations from a system file.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, value_enum)]
        simulation: Option<SimArg>,
        /// Sub-intervals per step for `--simulation binned`.
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        /// Start from a stationary draw instead of zero.
        #[arg(long)]
        stationary: bool,
    },
    /// Fit the sparse plus low-rank (or pure-LASSO) estimator.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, requires = "lambda_l")]
        lambda_a: Option<f64>,
        #[arg(long)]
        lambda_l: Option<f64>,
        #[arg(long, requires = "d")]
        c: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        /// Take (c, d) from a `cv` artifact.
        #[arg(long)]
        cv: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Choose (c, d) by block cross-validation.
    Cv {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',')]
        grid_c: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        grid_d: Option<Vec<f64>>,
        #[arg(long)]
        chunks: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Forecast with a fitted drift and score against held-out rows.
    Predict {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run the phase-transition sweep.
    Phase {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Report the structural constants and assumptions of a system file.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_input(cfg: &mut InputConfig, args: InputArgs) {
    if args.data.is_some() {
        cfg.path = args.data;
    }
    set(
        &mut cfg.format,
        args.format.map(|f| match f {
            FormatArg::Trajectory => DataFormat::Trajectory,
            FormatArg::Prices => DataFormat::Prices,
        }),
    );
    set(&mut cfg.holdout, args.holdout);
}

fn load_config<T: serde::de::DeserializeOwned + Default>(common: &Common) -> Result<T, CliError> {
    load(common.config.as_deref())
}

/// Runs one parsed invocation, returning the artifacts written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Gen { common, kind, p, r, s, eta, diag_margin, min_magnitude } => {
            let mut cfg: GenConfig = load_config(&common)?;
            set(
                &mut cfg.kind,
                kind.map(|k| match k {
                    KindArg::Random => GenKind::Random,
                    KindArg::Illustrative => GenKind::Illustrative,
                }),
            );
            set(&mut cfg.p, p);
            set(&mut cfg.r, r);
            set(&mut cfg.s, s);
            set(&mut cfg.eta, eta);
            set(&mut cfg.diag_margin, diag_margin);
            set(&mut cfg.min_magnitude, min_magnitude);
            set(&mut cfg.seed, common.seed);
            commands::gen(&cfg, &common.out)
        }
        Command::Simulate { common, system, n, eta, simulation, bins, burn_in, stationary } => {
            let mut cfg: SimulateConfig = load_config(&common)?;
            if system.is_some() {
                cfg.system = system;
            }
            set(&mut cfg.n, n);
            if eta.is_some() {
                cfg.eta = eta;
            }
            if let Some(kind) = simulation {
                cfg.simulation = match kind {
                    SimArg::Discrete => SimulationKind::Discrete,
                    SimArg::Exact => SimulationKind::Continuous { mode: ContinuousMode::Exact },
                    SimArg::Binned => SimulationKind::Continuous { mode: ContinuousMode::default() },
                };
            }
            if let Some(b) = bins {
                match &mut cfg.simulation {
                    SimulationKind::Continuous { mode } => *mode = ContinuousMode::Binned { bins: b },
                    SimulationKind::Discrete => {
                        return Err(CliError::Config("bins: only meaningful for binned continuous simulation".into()))
                    }
                }
            }
            set(&mut cfg.burn_in, burn_in);
            if stationary {
                cfg.init = InitialCondition::Stationary;
            }
            set(&mut cfg.seed, common.seed);
            commands::simulate(&cfg, &common.out)
        }
        Command::Fit { common, input, lambda_a, lambda_l, c, d, cv, mode, max_iter, tol } => {
            let mut cfg: FitConfig = load_config(&common)?;
            no_seed(&common, "fit")?;
            apply_input(&mut cfg.input, input);
            if let (Some(lambda_a), Some(lambda_l)) = (lambda_a, lambda_l) {
                cfg.lambda = FitLambda::Absolute { lambda_a, lambda_l };
            }
            if let (Some(c), Some(d)) = (c, d) {
                let (s_hint, r_hint, delta) = match cfg.lambda {
                    FitLambda::Scaled { s_hint, r_hint, delta, .. } => (s_hint, r_hint, delta),
                    _ => (1, 1, 0.1),
                };
                cfg.lambda = FitLambda::Scaled { c, d, s_hint, r_hint, delta };
            }
            if let Some(path) = cv {
                cfg.lambda = FitLambda::FromCv { path };
            }
            set(&mut cfg.mode, mode.map(Into::into));
            if max_iter.is_some() {
                cfg.max_iter = max_iter;
            }
            if tol.is_some() {
                cfg.tol = tol;
            }
            commands::fit_command(&cfg, &common.out)
        }
        Command::Cv { common, input, grid_c, grid_d, chunks, mode } => {
            let mut cfg: CvCommandConfig = load_config(&common)?;
            no_seed(&common, "cv")?;
            apply_input(&mut cfg.input, input);
            set(&mut cfg.cv.grid_c, grid_c);
            set(&mut cfg.cv.grid_d, grid_d);
            set(&mut cfg.cv.chunks, chunks);
            set(&mut cfg.cv.mode, mode.map(Into::into));
            commands::cv_command(&cfg, &common.out)
        }
        Command::Predict { common, input, estimate, horizon } => {
            let mut cfg: PredictConfig = load_config(&common)?;
            no_seed(&common, "predict")?;
            apply_input(&mut cfg.input, input);
            if estimate.is_some() {
                cfg.estimate = estimate;
            }
            set(&mut cfg.horizon, horizon);
            commands::predict_command(&cfg, &common.out)
        }
        Command::Phase { common, trials } => {
            let PhaseCommandConfig(mut cfg) = load_config(&common)?;
            set(&mut cfg.trials, trials);
            set(&mut cfg.master_seed, common.seed);
            commands::phase_command(&cfg, &common.out)
        }
        Command::Check { common, system, n, eta, delta } => {
            let mut cfg: CheckConfig = load_config(&common)?;
            no_seed(&common, "check")?;
            if system.is_some() {
                cfg.system = system;
            }
            set(&mut cfg.n, n);
            if eta.is_some() {
                cfg.eta = eta;
            }
            set(&mut cfg.delta, delta);
            commands::check_command(&cfg, &common.out)
        }
    }
}

/// Deterministic commands take no seed; accepting one silently would suggest
/// it mattered.
fn no_seed(common: &Common, command: &str) -> Result<(), CliError> {
    match common.seed {
        Some(_) => Err(CliError::Config(format!("seed: `{command}` is deterministic and takes no seed"))),
        None => Ok(()),
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run_args<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}
