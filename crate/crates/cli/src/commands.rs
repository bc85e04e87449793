//! One function per subcommand. Each validates its config, computes, and
//! writes artifacts under `out`, returning the paths written.

use std::path::{Path, PathBuf};

use latent_structure::evaluate::{
    block_cross_validate, default_zeta, export_dependency_graph, phase_transition, predict, scaled_lambdas,
    CvConfig, CvResult, PhaseConfig, SimulationKind,
};
use latent_structure::generate::{gen_illustrative, gen_random_system};
use latent_structure::linalg::Matrix;
use latent_structure::model::{assumption_report, RegularizerInputs, SystemParams};
use latent_structure::simulate::{
    read_trajectory_csv, sufficient_stats, write_trajectory_csv, SimOptions, Simulator, Trajectory,
};
use latent_structure::solver::{fit, Estimate, FitMode, SolverConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    CheckConfig, CvCommandConfig, DataFormat, FitConfig, FitLambda, GenConfig, GenKind, InputConfig, PredictConfig,
    SimulateConfig,
};
use crate::error::CliError;
use crate::ingest::ingest_csv;

const TOOL: &str = concat!("latent-structure ", env!("CARGO_PKG_VERSION"));

fn write(out: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn write_json(out: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact values serialize");
    text.push('\n');
    write(out, name, text.as_bytes())
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("artifact values serialize")
}

/// `# ` provenance lines heading every CSV artifact.
fn provenance<C: Serialize>(command: &str, config: &C) -> Vec<String> {
    vec![
        format!("{TOOL} {command}"),
        format!("config: {}", serde_json::to_string(config).expect("configs serialize")),
    ]
}

fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

/// Reads a JSON artifact's `key` payload, or the whole file if it is bare.
fn read_payload<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.as_object_mut().and_then(|o| o.remove(key)) {
        value = inner;
    }
    serde_json::from_value(value).map_err(|e| CliError::Parse(format!("{}: {key}: {e}", path.display())))
}

pub fn read_system(path: &Path) -> Result<SystemParams, CliError> {
    read_payload(path, "system")
}

pub fn gen(config: &GenConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let system = match config.kind {
        GenKind::Random => gen_random_system(&config.spec())?,
        GenKind::Illustrative => gen_illustrative(config.p, config.r)?.with_eta(config.eta)?,
    };
    let doc = json!({ "command": "gen", "config": config, "seed": config.seed, "system": system });
    Ok(vec![write_json(out, "system.json", &doc)?])
}

pub fn simulate(config: &SimulateConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let system = read_system(config.system.as_deref().expect("validated"))?;
    let eta = config.eta.unwrap_or(system.eta);
    let simulator = match config.simulation {
        SimulationKind::Discrete => {
            if eta == 0.0 {
                return Err(CliError::Config("eta: discrete simulation needs a positive step".into()));
            }
            Simulator::discrete(&system.with_eta(eta)?, config.seed)?
        }
        SimulationKind::Continuous { mode } => {
            if eta == 0.0 {
                return Err(CliError::Config("eta: continuous sampling needs a positive step".into()));
            }
            Simulator::continuous(&system, eta, mode, config.seed)?
        }
    };
    let opts = SimOptions {
        n: config.n,
        seed: config.seed,
        init: config.init.clone(),
        burn_in: config.burn_in,
        keep_latent: false,
    };
    let traj = simulator.run(&opts)?;
    let mut lines = provenance("simulate", config);
    lines.push(format!("seed: {}", config.seed));
    let mut bytes = comment_block(&lines).into_bytes();
    write_trajectory_csv(&traj, &mut bytes)?;
    Ok(vec![write(out, "trajectory.csv", &bytes)?])
}

/// Observations with the trailing `holdout` samples split off.
pub struct Observations {
    pub train: Trajectory,
    /// `p × holdout`
    pub held_out: Option<Matrix>,
    pub labels: Vec<String>,
}

pub fn load_observations(input: &InputConfig) -> Result<Observations, CliError> {
    let path = input.path.as_deref().expect("validated");
    let (traj, labels) = match input.format {
        DataFormat::Trajectory => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let traj = read_trajectory_csv(file)?;
            let labels = (1..=traj.p()).map(|k| format!("x{k}")).collect();
            (traj, labels)
        }
        DataFormat::Prices => {
            let table = ingest_csv(path, &input.ingest)?;
            if table.filled > 0 {
                eprintln!("note: forward-filled {} missing cells in {}", table.filled, path.display());
            }
            (table.to_trajectory()?, table.labels)
        }
    };
    let samples = traj.x.ncols();
    if input.holdout + 2 > samples {
        return Err(CliError::Config(format!(
            "input.holdout: {} held-out rows leave fewer than 2 of {samples} for fitting",
            input.holdout
        )));
    }
    let keep = samples - input.holdout;
    let held_out = (input.holdout > 0).then(|| traj.x.columns(keep, input.holdout).into_owned());
    let train = Trajectory::new(traj.x.columns(0, keep).into_owned(), None, traj.eta)?;
    Ok(Observations { train, held_out, labels })
}

fn resolve_lambdas(lambda: &FitLambda, p: usize, n: usize, eta: f64) -> Result<(f64, f64), CliError> {
    Ok(match lambda {
        FitLambda::Absolute { lambda_a, lambda_l } => (*lambda_a, *lambda_l),
        FitLambda::Scaled { c, d, s_hint, r_hint, delta } => scaled_lambdas(*c, *d, *s_hint, *r_hint, p, n, eta, *delta),
        FitLambda::FromCv { path } => {
            let cv: CvCommandConfig = crate::config::load(Some(path))?;
            let result: CvResult = read_payload(path, "result")?;
            let CvConfig { s_hint, r_hint, delta, .. } = cv.cv;
            scaled_lambdas(result.c, result.d, s_hint, r_hint, p, n, eta, delta)
        }
    })
}

pub fn fit_command(config: &FitConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let obs = load_observations(&config.input)?;
    let stats = sufficient_stats(&obs.train)?;
    let (p, n, eta) = (stats.p(), stats.n(), stats.eta());
    let (lambda_a, lambda_l) = resolve_lambdas(&config.lambda, p, n, eta)?;
    let mut solver = match config.mode {
        FitMode::SparsePlusLowRank => SolverConfig::new(lambda_a, lambda_l),
        FitMode::PureLasso => SolverConfig::lasso(lambda_a),
    };
    if let Some(m) = config.max_iter {
        solver.max_iter = m;
    }
    if let Some(t) = config.tol {
        solver.tol = t;
    }
    let est = fit(&stats, &solver)?;
    let zeta = config.zeta.unwrap_or_else(|| default_zeta(&est.a_hat));
    let graph = export_dependency_graph(&est.a_hat, zeta, &obs.labels)?;

    let doc = json!({
        "command": "fit",
        "config": config,
        "data": { "p": p, "n": n, "eta": eta },
        "lambda_a": lambda_a,
        "lambda_l": solver.lambda_l,
        "graph": { "zeta": zeta, "nonzeros": graph.nonzeros, "sparsity": graph.sparsity, "edges": graph.edges.len() },
        "estimate": to_value(&est),
    });
    Ok(vec![
        write_json(out, "estimate.json", &doc)?,
        write(out, "graph.dot", graph.to_dot().as_bytes())?,
        write(out, "graph.csv", graph.to_csv()?.as_bytes())?,
    ])
}

pub fn cv_command(config: &CvCommandConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let obs = load_observations(&config.input)?;
    let result = block_cross_validate(&obs.train.x, obs.train.eta, &config.cv)?;
    let doc = json!({ "command": "cv", "config": config, "result": to_value(&result) });
    Ok(vec![write_json(out, "cv.json", &doc)?])
}

pub fn predict_command(config: &PredictConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let obs = load_observations(&config.input)?;
    let est: Estimate = read_payload(config.estimate.as_deref().expect("validated"), "estimate")?;
    let last: Vec<f64> = obs.train.x.column(obs.train.x.ncols() - 1).iter().copied().collect();
    let actuals = obs.held_out.as_ref();
    let pred = predict(&est.drift(), &last, obs.train.eta, config.horizon, actuals)?;

    let mut csv = comment_block(&provenance("predict", config));
    csv.push_str("step");
    for label in &obs.labels {
        csv.push(',');
        csv.push_str(label);
    }
    csv.push('\n');
    for (k, col) in pred.path.column_iter().enumerate() {
        csv.push_str(&(k + 1).to_string());
        for v in col.iter() {
            csv.push(',');
            csv.push_str(&v.to_string());
        }
        csv.push('\n');
    }
    let doc = json!({
        "command": "predict",
        "config": config,
        "horizon": config.horizon,
        "mse": pred.mse,
    });
    Ok(vec![write(out, "forecast.csv", csv.as_bytes())?, write_json(out, "prediction.json", &doc)?])
}

pub fn phase_command(config: &PhaseConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let result = phase_transition(config)?;
    let mut lines = provenance("phase", config);
    lines.push(format!("master_seed: {}", config.master_seed));
    let csv = result.to_csv(&lines);
    let doc = json!({ "command": "phase", "config": config, "seed": config.master_seed, "records": to_value(&result.records) });
    Ok(vec![write(out, "phase.csv", csv.as_bytes())?, write_json(out, "phase_trials.json", &doc)?])
}

pub fn check_command(config: &CheckConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let system = read_system(config.system.as_deref().expect("validated"))?;
    let eta = config.eta.unwrap_or(if system.eta > 0.0 { system.eta } else { 0.01 });
    let inputs = RegularizerInputs {
        n: config.n,
        eta,
        delta: config.delta,
        x0_norm2: config.x0_norm2,
        u0_norm2: config.u0_norm2,
    };
    let report = assumption_report(&system, &inputs, config.k)?;
    let doc = json!({ "command": "check", "config": config, "passes": report.passes(), "report": to_value(&report) });
    Ok(vec![write_json(out, "report.json", &doc)?])
}
