//! Per-command configuration. Each config is a JSON object; absent fields
//! take the defaults below and command-line flags override on top.

use std::path::{Path, PathBuf};

use latent_structure::evaluate::{CvConfig, LambdaRule, PhaseConfig, PhasePoint, SimulationKind};
use latent_structure::generate::GenSpec;
use latent_structure::model::DEFAULT_K;
use latent_structure::simulate::InitialCondition;
use latent_structure::solver::FitMode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::ingest::IngestOptions;

/// Reads a config file. A JSON artifact written by this tool (an object with
/// `command` and `config` keys) is accepted in place of a bare config, so an
/// artifact's embedded config can be replayed directly.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("command") {
            if let Some(inner) = obj.remove("config") {
                value = inner;
            }
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn field_err(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {why}"))
}

fn required<'a>(field: &str, path: &'a Option<PathBuf>) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or_else(|| field_err(field, "required"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    #[default]
    Random,
    Illustrative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub kind: GenKind,
    pub p: usize,
    pub r: usize,
    pub s: usize,
    pub diag_margin: f64,
    pub min_magnitude: f64,
    pub eta: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            kind: GenKind::Random,
            p: 10,
            r: 2,
            s: 2,
            diag_margin: 1.0,
            min_magnitude: 0.0,
            eta: 0.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn spec(&self) -> GenSpec {
        GenSpec {
            p: self.p,
            r: self.r,
            s: self.s,
            seed: self.seed,
            diag_margin: self.diag_margin,
            eta: self.eta,
            min_magnitude: self.min_magnitude,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(field_err("eta", format!("must be non-negative, got {}", self.eta)));
        }
        match self.kind {
            GenKind::Random => self.spec().validate().map_err(|e| field_err("gen", e)),
            GenKind::Illustrative if self.r == 0 || self.r > self.p || self.p % self.r != 0 => {
                Err(field_err("r", format!("must divide p = {} and lie in 1..=p, got {}", self.p, self.r)))
            }
            GenKind::Illustrative => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub system: Option<PathBuf>,
    pub n: usize,
    pub simulation: SimulationKind,
    /// Sampling step; the system file's own step is used when absent.
    pub eta: Option<f64>,
    pub init: InitialCondition,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            system: None,
            n: 1000,
            simulation: SimulationKind::Discrete,
            eta: None,
            init: InitialCondition::Zero,
            burn_in: 0,
            seed: 0,
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        required("system", &self.system)?;
        if self.n == 0 {
            return Err(field_err("n", "must be at least 1"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(field_err("eta", format!("must be positive, got {eta}")));
            }
        }
        if let SimulationKind::Continuous { mode: latent_structure::simulate::ContinuousMode::Binned { bins: 0 } } =
            self.simulation
        {
            return Err(field_err("simulation.mode.bins", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// `t,x1,..,xp` as written by `simulate`.
    #[default]
    Trajectory,
    /// `date,name1,..,nameK` price table.
    Prices,
}

/// Where observations come from, shared by `fit`, `cv` and `predict`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub format: DataFormat,
    pub ingest: IngestOptions,
    /// Trailing rows kept out of fitting; `predict` scores against them.
    pub holdout: usize,
}

impl InputConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        required("input.path", &self.path)?;
        self.ingest.validate("input.ingest")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FitLambda {
    Absolute {
        lambda_a: f64,
        #[serde(default)]
        lambda_l: f64,
    },
    /// `λ_A = c·√(log(4((s+2r)p+r²)/δ)/(nη))`, `λ_L = d·√p·λ_A`.
    Scaled {
        c: f64,
        d: f64,
        #[serde(default = "one")]
        s_hint: usize,
        #[serde(default = "one")]
        r_hint: usize,
        #[serde(default = "tenth")]
        delta: f64,
    },
    /// `(c, d)` and the scaling hints of a `cv` artifact.
    FromCv { path: PathBuf },
}

fn one() -> usize {
    1
}

fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub input: InputConfig,
    pub lambda: FitLambda,
    pub mode: FitMode,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    /// Support threshold for the exported graph.
    pub zeta: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: InputConfig::default(),
            lambda: FitLambda::Scaled { c: 1.0, d: 0.5, s_hint: 1, r_hint: 1, delta: 0.1 },
            mode: FitMode::SparsePlusLowRank,
            max_iter: None,
            tol: None,
            zeta: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.input.validate()?;
        let lasso = self.mode == FitMode::PureLasso;
        match &self.lambda {
            FitLambda::Absolute { lambda_a, lambda_l } => {
                if !(*lambda_a > 0.0 && lambda_a.is_finite()) {
                    return Err(field_err("lambda.lambda_a", format!("must be positive, got {lambda_a}")));
                }
                if !lasso && !(*lambda_l > 0.0 && lambda_l.is_finite()) {
                    return Err(field_err("lambda.lambda_l", format!("must be positive, got {lambda_l}")));
                }
            }
            FitLambda::Scaled { c, d, delta, .. } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(field_err("lambda.c", format!("must be positive, got {c}")));
                }
                if !lasso && !(*d > 0.0 && d.is_finite()) {
                    return Err(field_err("lambda.d", format!("must be positive, got {d}")));
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(field_err("lambda.delta", format!("must lie in (0, 1), got {delta}")));
                }
            }
            FitLambda::FromCv { .. } => {}
        }
        if self.max_iter == Some(0) {
            return Err(field_err("max_iter", "must be at least 1"));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(field_err("tol", format!("must be positive, got {t}")));
            }
        }
        if let Some(z) = self.zeta {
            if !(z >= 0.0) {
                return Err(field_err("zeta", format!("must be non-negative, got {z}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvCommandConfig {
    pub input: InputConfig,
    pub cv: CvConfig,
}

impl Default for CvCommandConfig {
    fn default() -> Self {
        Self {
            input: InputConfig::default(),
            cv: CvConfig::new(vec![0.25, 0.5, 1.0, 2.0], vec![0.25, 0.5, 1.0]),
        }
    }
}

impl CvCommandConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.input.validate()?;
        self.cv.validate().map_err(|e| field_err("cv", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    pub input: InputConfig,
    pub estimate: Option<PathBuf>,
    pub horizon: usize,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            input: InputConfig::default(),
            estimate: None,
            horizon: 25,
        }
    }
}

impl PredictConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.input.validate()?;
        required("estimate", &self.estimate)?;
        if self.horizon == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        if self.input.holdout > 0 && self.input.holdout < self.horizon {
            return Err(field_err(
                "input.holdout",
                format!("{} held-out rows cannot score a horizon of {}", self.input.holdout, self.horizon),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub system: Option<PathBuf>,
    /// Sample count and step entering the regularizer formulas. The step
    /// defaults to the system's own, or 0.01 for a continuous-time system.
    pub n: usize,
    pub eta: Option<f64>,
    pub delta: f64,
    pub k: f64,
    pub x0_norm2: f64,
    pub u0_norm2: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            system: None,
            n: 10_000,
            eta: None,
            delta: 0.1,
            k: DEFAULT_K,
            x0_norm2: 0.0,
            u0_norm2: 0.0,
        }
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        required("system", &self.system)?;
        if self.n == 0 {
            return Err(field_err("n", "must be at least 1"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(field_err("eta", format!("must be positive, got {eta}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(field_err("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(field_err("k", format!("must be positive, got {}", self.k)));
        }
        if !(self.x0_norm2 >= 0.0 && self.u0_norm2 >= 0.0) {
            return Err(field_err("x0_norm2", "initial-condition norms must be non-negative"));
        }
        Ok(())
    }
}

/// Desk-scale sweep: p = 40, r = 2, s = 3, η ∈ {0.05, 0.1} at matched Θ.
pub fn desk_scale_phase() -> PhaseConfig {
    let base = GenSpec { min_magnitude: 0.5, ..GenSpec::new(40, 2, 3, 0) };
    let theta_unit = latent_structure::model::control_parameter(1.0, 1, base.s, base.r, base.p);
    let points = [0.05, 0.1]
        .into_iter()
        .flat_map(|eta| {
            [1.0, 3.0, 10.0, 30.0, 100.0].into_iter().map(move |theta: f64| PhasePoint {
                eta,
                n: (theta / (eta * theta_unit)).round() as usize,
                s: None,
                r: None,
            })
        })
        .collect();
    PhaseConfig {
        base,
        points,
        trials: 20,
        lambda: LambdaRule::Fixed { c: 0.7, d: 0.55, delta: 0.1 },
        master_seed: 0,
        simulation: SimulationKind::Discrete,
        init: InitialCondition::Zero,
        burn_in: 0,
        max_iter: None,
        tol: Some(1e-12),
    }
}

/// Newtype so the phase config gets a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseCommandConfig(pub PhaseConfig);

impl Default for PhaseCommandConfig {
    fn default() -> Self {
        Self(desk_scale_phase())
    }
}
