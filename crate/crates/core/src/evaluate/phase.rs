use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{block_cross_validate, recovery_report, scaled_lambdas, CvConfig};
use crate::error::{Error, Result};
use crate::generate::{gen_random_system, GenSpec};
use crate::model::{control_parameter, steady_state, theorem_constants, StructuralConstants};
use crate::rng::mix_seed;
use crate::simulate::{ContinuousMode, InitialCondition, SimOptions, Simulator};
use crate::solver::{fit, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LambdaRule {
    /// `λ_A = c·√(log(4((s+2r)p+r²)/δ)/(nη))`, `λ_L = d·√p·λ_A`.
    Fixed { c: f64, d: f64, delta: f64 },
    /// `(c, d)` chosen per trial by block cross-validation.
    CrossValidated(CvConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SimulationKind {
    /// Euler chain with `w ~ N(0, ηI)`.
    #[default]
    Discrete,
    Continuous { mode: ContinuousMode },
}

/// One grid point; `s` and `r` override the base spec when present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub eta: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub base: GenSpec,
    pub points: Vec<PhasePoint>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub lambda: LambdaRule,
    pub master_seed: u64,
    #[serde(default)]
    pub simulation: SimulationKind,
    #[serde(default)]
    pub init: InitialCondition,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::InvalidArgument(format!("{field}: {why}")));
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.points.is_empty() {
            return bad("points", "empty grid".into());
        }
        for (i, pt) in self.points.iter().enumerate() {
            if !(pt.eta > 0.0 && pt.eta.is_finite()) {
                return bad(&format!("points[{i}].eta"), format!("must be positive, got {}", pt.eta));
            }
            if pt.n < 2 {
                return bad(&format!("points[{i}].n"), "need at least 2 transitions".into());
            }
            self.spec_for(pt, 0).validate()?;
        }
        match &self.lambda {
            LambdaRule::Fixed { c, d, delta } => {
                if !(*c > 0.0) || !(*d > 0.0) || !(*delta > 0.0 && *delta < 1.0) {
                    return bad("lambda", "need c > 0, d > 0 and δ in (0, 1)".into());
                }
            }
            LambdaRule::CrossValidated(cv) => cv.validate()?,
        }
        Ok(())
    }

    fn spec_for(&self, pt: &PhasePoint, seed: u64) -> GenSpec {
        GenSpec {
            s: pt.s.unwrap_or(self.base.s),
            r: pt.r.unwrap_or(self.base.r),
            eta: pt.eta,
            seed,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub system_seed: u64,
    pub simulation_seed: u64,
    pub success: bool,
    pub support_subset: bool,
    pub linf_error: Option<f64>,
    pub lambda_a: Option<f64>,
    pub lambda_l: Option<f64>,
    /// `ν·λ_A`, the guaranteed bound on `‖Â − A*‖_∞`, when A3 holds.
    pub nu_lambda_a: Option<f64>,
    pub iterations: Option<usize>,
    /// Module error that turned this trial into a failure.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub p: usize,
    pub r: usize,
    pub s: usize,
    pub eta: f64,
    pub n: usize,
    pub theta: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub rows: Vec<PhaseRow>,
    pub records: Vec<TrialRecord>,
}

impl PhaseResult {
    /// CSV with header `p,r,s,eta,n,theta,trials,successes,success_rate`,
    /// preceded by `# ` comment lines.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            for line in c.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str("p,r,s,eta,n,theta,trials,successes,success_rate\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.p, row.r, row.s, row.eta, row.n, row.theta, row.trials, row.successes, row.success_rate
            ));
        }
        out
    }
}

/// One generate → simulate → fit → score cycle. Module errors become a
/// failed record rather than an error.
pub fn run_trial(config: &PhaseConfig, point: usize, trial: usize) -> TrialRecord {
    let pt = &config.points[point];
    let system_seed = mix_seed(config.master_seed, point as u64, 2 * trial as u64);
    let simulation_seed = mix_seed(config.master_seed, point as u64, 2 * trial as u64 + 1);
    let mut record = TrialRecord {
        point,
        trial,
        system_seed,
        simulation_seed,
        success: false,
        support_subset: false,
        linf_error: None,
        lambda_a: None,
        lambda_l: None,
        nu_lambda_a: None,
        iterations: None,
        error: None,
    };
    if let Err(e) = trial_body(config, pt, &mut record) {
        record.error = Some(format!("{}: {e}", e.tag()));
        record.success = false;
    }
    record
}

fn trial_body(config: &PhaseConfig, pt: &PhasePoint, record: &mut TrialRecord) -> Result<()> {
    let spec = config.spec_for(pt, record.system_seed);
    let system = gen_random_system(&spec)?;
    let (p, r, s) = (spec.p, spec.r, spec.s);
    let opts = SimOptions {
        n: pt.n,
        seed: record.simulation_seed,
        init: config.init.clone(),
        burn_in: config.burn_in,
        keep_latent: false,
    };
    let simulator = match config.simulation {
        SimulationKind::Discrete => Simulator::discrete(&system, opts.seed)?,
        SimulationKind::Continuous { mode } => Simulator::continuous(&system, pt.eta, mode, opts.seed)?,
    };
    let (stats, lambdas) = match &config.lambda {
        LambdaRule::Fixed { c, d, delta } => {
            let stats = simulator.run_stats(&opts)?;
            (stats, scaled_lambdas(*c, *d, s, r, p, pt.n, pt.eta, *delta))
        }
        LambdaRule::CrossValidated(cv) => {
            let traj = simulator.run(&opts)?;
            let cv = CvConfig { s_hint: s, r_hint: r, ..cv.clone() };
            let chosen = block_cross_validate(&traj.x, pt.eta, &cv)?;
            (crate::simulate::sufficient_stats(&traj)?, (chosen.lambda_a, chosen.lambda_l))
        }
    };
    record.lambda_a = Some(lambdas.0);
    record.lambda_l = Some(lambdas.1);

    let mut solver = SolverConfig::new(lambdas.0, lambdas.1);
    if let LambdaRule::CrossValidated(cv) = &config.lambda {
        solver.mode = cv.mode;
    }
    if let Some(m) = config.max_iter {
        solver.max_iter = m;
    }
    if let Some(t) = config.tol {
        solver.tol = t;
    }
    let est = fit(&stats, &solver)?;
    record.iterations = Some(est.iterations);

    // the target is the continuous-time truth for both simulation kinds
    let truth = system.with_eta(0.0)?;
    let ss = steady_state(&truth)?;
    let rep = recovery_report(&est.a_hat, &system.a, &est.l_hat, &ss.l, None)?;
    record.success = rep.signed_match;
    record.support_subset = rep.support_subset;
    record.linf_error = Some(rep.linf_error);

    let constants = StructuralConstants::from_system(&truth)?;
    if constants.a3_holds() {
        let tc = theorem_constants(
            constants.alpha,
            constants.theta,
            constants.c_min,
            constants.d_max,
            constants.s,
            lambdas.0,
            constants.l_spectral,
        );
        record.nu_lambda_a = Some(tc.a_error_bound(lambdas.0));
    }
    Ok(())
}

pub fn phase_transition(config: &PhaseConfig) -> Result<PhaseResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.points.len())
        .flat_map(|pt| (0..config.trials).map(move |t| (pt, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs.par_iter().map(|&(pt, t)| run_trial(config, pt, t)).collect();

    let rows = config
        .points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let spec = config.spec_for(pt, 0);
            let successes = records.iter().filter(|r| r.point == i && r.success).count();
            PhaseRow {
                p: spec.p,
                r: spec.r,
                s: spec.s,
                eta: pt.eta,
                n: pt.n,
                theta: control_parameter(pt.eta, pt.n, spec.s, spec.r, spec.p),
                trials: config.trials,
                successes,
                success_rate: successes as f64 / config.trials as f64,
            }
        })
        .collect();
    Ok(PhaseResult { rows, records })
}
