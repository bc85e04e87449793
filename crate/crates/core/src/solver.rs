//! Regularized least-squares fit of the drift as sparse `A` plus low-rank `L`,
//! by accelerated proximal gradient (FISTA) with function-value restart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    entry_l1, frob_inner, nuclear_norm, prox_l1, prox_nuclear_warm, Matrix,
};
use crate::simulate::SufficientStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    SparsePlusLowRank,
    /// `L` pinned to zero: the ℓ₁-only baseline.
    PureLasso,
}

fn default_max_iter() -> usize {
    5000
}

fn default_tol() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda_a: f64,
    #[serde(default)]
    pub lambda_l: f64,
    #[serde(default)]
    pub mode: FitMode,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop once the relative objective change falls below this and a
    /// further prox-gradient step moves the pair by less than it.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Fixed step; `1/(2σ_max(S1))` when absent.
    #[serde(default)]
    pub step: Option<f64>,
    /// Reset momentum whenever the objective would increase.
    #[serde(default = "default_true")]
    pub restart: bool,
}

impl SolverConfig {
    pub fn new(lambda_a: f64, lambda_l: f64) -> Self {
        Self {
            lambda_a,
            lambda_l,
            mode: FitMode::SparsePlusLowRank,
            max_iter: default_max_iter(),
            tol: default_tol(),
            step: None,
            restart: true,
        }
    }

    pub fn lasso(lambda_a: f64) -> Self {
        Self {
            mode: FitMode::PureLasso,
            ..Self::new(lambda_a, 0.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::InvalidArgument(format!("{field}: {why}")));
        if !(self.lambda_a > 0.0 && self.lambda_a.is_finite()) {
            return bad("lambda_a", format!("must be positive, got {}", self.lambda_a));
        }
        if self.mode == FitMode::SparsePlusLowRank && !(self.lambda_l > 0.0 && self.lambda_l.is_finite()) {
            return bad("lambda_l", format!("must be positive, got {}", self.lambda_l));
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad("tol", format!("must be positive, got {}", self.tol));
        }
        if let Some(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                return bad("step", format!("must be positive, got {step}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "crate::linalg::nested")]
    pub a_hat: Matrix,
    #[serde(with = "crate::linalg::nested")]
    pub l_hat: Matrix,
    /// Objective after each iteration, starting with the value at zero.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub step_used: f64,
}

impl Estimate {
    pub fn drift(&self) -> Matrix {
        &self.a_hat + &self.l_hat
    }
}

/// Smooth part `½tr(M S1 Mᵀ) − tr(Mᵀ S2) + (1/(2η²n))Σ‖Δx‖²` at `M = A + L`,
/// which equals `(1/(2η²n)) Σ ‖x(i+1) − x(i) − ηM x(i)‖²`.
pub fn smooth_loss(m_sum: &Matrix, stats: &SufficientStats) -> f64 {
    let ms1 = m_sum * stats.s1();
    0.5 * frob_inner(&ms1, m_sum) - frob_inner(m_sum, stats.s2()) + stats.loss_constant()
}

pub fn objective(a: &Matrix, l: &Matrix, stats: &SufficientStats, lambda_a: f64, lambda_l: f64) -> f64 {
    let penalty_l = if lambda_l == 0.0 { 0.0 } else { lambda_l * nuclear_norm(l) };
    smooth_loss(&(a + l), stats) + lambda_a * entry_l1(a) + penalty_l
}

/// Gradient of [`smooth_loss`] with respect to `M` (and hence to `A` and to `L`):
/// `M S1 − S2`.
pub fn smooth_gradient(m_sum: &Matrix, stats: &SufficientStats) -> Matrix {
    m_sum * stats.s1() - stats.s2()
}

const POWER_ITERS: usize = 50;
const POWER_TOL: f64 = 1e-8;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration from the
/// all-ones vector.
fn power_sigma_max(s: &Matrix) -> f64 {
    let n = s.nrows();
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERS {
        let w = s * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= POWER_TOL * norm;
        estimate = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    estimate
}

/// Default step `1/(2σ_max(S1))`: the smooth loss of the pair `(A, L)` has
/// Hessian `[[S1, S1], [S1, S1]]`, whose top eigenvalue is `2σ_max(S1)`.
pub fn default_step(stats: &SufficientStats) -> f64 {
    let sigma = power_sigma_max(stats.s1());
    if sigma > 0.0 {
        1.0 / (2.0 * sigma)
    } else {
        1.0
    }
}

const MAX_HALVINGS: usize = 60;

struct Problem<'a> {
    stats: &'a SufficientStats,
    lambda_a: f64,
    lambda_l: f64,
    lasso: bool,
}

impl Problem<'_> {
    fn value(&self, a: &Matrix, l: &Matrix, l_nuclear: f64) -> f64 {
        let base = smooth_loss(&(a + l), self.stats) + self.lambda_a * entry_l1(a);
        if self.lasso {
            base
        } else {
            base + self.lambda_l * l_nuclear
        }
    }

    /// Prox-gradient step from `(ya, yl)`; returns the new pair, its nuclear norm
    /// and objective.
    fn step(
        &self,
        ya: &Matrix,
        yl: &Matrix,
        step: f64,
        basis: &mut Option<Matrix>,
    ) -> Result<(Matrix, Matrix, f64, f64)> {
        let g = smooth_gradient(&(ya + yl), self.stats);
        let a = prox_l1(&(ya - &g * step), step * self.lambda_a);
        let (l, l_nuclear) = if self.lasso {
            (Matrix::zeros(yl.nrows(), yl.ncols()), 0.0)
        } else {
            let prox = prox_nuclear_warm(&(yl - &g * step), step * self.lambda_l, basis)?;
            (prox.matrix, prox.nuclear_norm)
        };
        let f = self.value(&a, &l, l_nuclear);
        Ok((a, l, l_nuclear, f))
    }
}

pub fn fit(stats: &SufficientStats, config: &SolverConfig) -> Result<Estimate> {
    config.validate()?;
    let p = stats.p();
    let problem = Problem {
        stats,
        lambda_a: config.lambda_a,
        lambda_l: config.lambda_l,
        lasso: config.mode == FitMode::PureLasso,
    };
    let mut step = config.step.unwrap_or_else(|| default_step(stats));

    let mut a = Matrix::zeros(p, p);
    let mut l = Matrix::zeros(p, p);
    let mut ya = a.clone();
    let mut yl = l.clone();
    let mut t = 1.0_f64;
    let mut f = problem.value(&a, &l, 0.0);
    let mut trace = vec![f];
    let mut basis = None;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=config.max_iter {
        iterations = it;
        let (mut na, mut nl, _, mut nf) = problem.step(&ya, &yl, step, &mut basis)?;
        if config.restart && nf > f {
            // drop momentum and step from the current iterate; if even that
            // fails to descend (step too long for round-off), shorten the step
            t = 1.0;
            let mut halvings = 0;
            loop {
                (na, nl, _, nf) = problem.step(&a, &l, step, &mut basis)?;
                if nf <= f || !nf.is_finite() || halvings == MAX_HALVINGS {
                    break;
                }
                step *= 0.5;
                halvings += 1;
            }
            if nf > f {
                // no descent available at machine precision: stay put
                na = a.clone();
                nl = l.clone();
                nf = f;
            }
        }
        if !nf.is_finite() || !na.iter().chain(nl.iter()).all(|v| v.is_finite()) {
            return Err(Error::Divergence { iteration: it });
        }

        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        ya = &na + (&na - &a) * momentum;
        yl = &nl + (&nl - &l) * momentum;
        t = t_next;

        let change = (f - nf).abs();
        a = na;
        l = nl;
        trace.push(nf);
        let previous = f;
        f = nf;
        if change <= config.tol * previous.abs().max(f64::MIN_POSITIVE) {
            // a flat objective is not enough on its own: accept only once a
            // plain prox-gradient step from here barely moves the pair
            let (pa, pl, _, _) = problem.step(&a, &l, step, &mut basis)?;
            let moved = ((&pa - &a).norm_squared() + (&pl - &l).norm_squared()).sqrt();
            if moved < config.tol {
                converged = true;
                break;
            }
        }
    }

    Ok(Estimate {
        a_hat: a,
        l_hat: l,
        objective_trace: trace,
        iterations,
        converged,
        step_used: step,
    })
}

/// [`fit`] with `L` pinned at zero.
pub fn fit_lasso(stats: &SufficientStats, config: &SolverConfig) -> Result<Estimate> {
    let config = SolverConfig {
        mode: FitMode::PureLasso,
        ..config.clone()
    };
    fit(stats, &config)
}
