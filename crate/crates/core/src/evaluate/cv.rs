use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scaled_lambdas;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::simulate::SufficientStats;
use crate::solver::{fit, smooth_loss, FitMode, SolverConfig};

fn default_chunks() -> usize {
    5
}

fn default_hint() -> usize {
    1
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub grid_c: Vec<f64>,
    /// Ignored (treated as `[0]`) in pure-LASSO mode.
    #[serde(default)]
    pub grid_d: Vec<f64>,
    #[serde(default = "default_chunks")]
    pub chunks: usize,
    /// Sparsity and latent dimension entering the `λ_A` scaling; unknown for
    /// real data, where they only rescale `c`.
    #[serde(default = "default_hint")]
    pub s_hint: usize,
    #[serde(default = "default_hint")]
    pub r_hint: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub mode: FitMode,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl CvConfig {
    pub fn new(grid_c: Vec<f64>, grid_d: Vec<f64>) -> Self {
        Self {
            grid_c,
            grid_d,
            chunks: default_chunks(),
            s_hint: default_hint(),
            r_hint: default_hint(),
            delta: default_delta(),
            mode: FitMode::SparsePlusLowRank,
            max_iter: None,
            tol: None,
        }
    }

    fn d_values(&self) -> Vec<f64> {
        match self.mode {
            FitMode::PureLasso => vec![0.0],
            FitMode::SparsePlusLowRank => self.grid_d.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::InvalidArgument(format!("{field}: {why}")));
        if self.grid_c.is_empty() {
            return bad("grid_c", "empty grid");
        }
        if self.d_values().is_empty() {
            return bad("grid_d", "empty grid");
        }
        if self.grid_c.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return bad("grid_c", "values must be positive");
        }
        if self.mode == FitMode::SparsePlusLowRank && self.grid_d.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("grid_d", "values must be positive");
        }
        if self.chunks < 2 {
            return bad("chunks", "need at least 2");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", "must lie in (0, 1)");
        }
        Ok(())
    }

    fn solver(&self, lambda_a: f64, lambda_l: f64) -> SolverConfig {
        let mut cfg = SolverConfig {
            mode: self.mode,
            ..SolverConfig::new(lambda_a, lambda_l)
        };
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        cfg
    }
}

/// Transition index ranges `[start, end)` of `chunks` consecutive blocks of
/// near-equal length covering `0..n`.
pub fn chunk_bounds(n: usize, chunks: usize) -> Vec<(usize, usize)> {
    (0..chunks)
        .map(|k| (k * n / chunks, (k + 1) * n / chunks))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub test: (usize, usize),
    pub train: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCandidate {
    pub c: f64,
    pub d: f64,
    /// One-step-ahead squared error per entry, per held-out fold.
    pub fold_mse: Vec<f64>,
    pub mean_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub c: f64,
    pub d: f64,
    /// Weights for refitting on the whole path (`n` = all transitions).
    pub lambda_a: f64,
    pub lambda_l: f64,
    pub candidates: Vec<CvCandidate>,
    pub folds: Vec<CvFold>,
}

/// Mean squared one-step prediction error per entry of drift `m` on `stats`:
/// `(1/(np)) Σ ‖Δx − ηMx‖² = 2η²·loss/p`.
fn one_step_mse(m: &Matrix, stats: &SufficientStats) -> f64 {
    2.0 * stats.eta() * stats.eta() * smooth_loss(m, stats) / stats.p() as f64
}

/// Picks `(c, d)` by holding out each contiguous chunk of the path in turn and
/// fitting on the others. Ties go to larger `c`, then larger `d`.
pub fn block_cross_validate(x: &Matrix, eta: f64, config: &CvConfig) -> Result<CvResult> {
    config.validate()?;
    let n = x.ncols().saturating_sub(1);
    if n < config.chunks {
        return Err(Error::InvalidArgument(format!(
            "{n} transitions cannot fill {} chunks",
            config.chunks
        )));
    }
    let p = x.nrows();
    let bounds = chunk_bounds(n, config.chunks);
    let chunk_stats: Vec<SufficientStats> = bounds
        .iter()
        .map(|&(s, e)| SufficientStats::from_columns(&x.columns(s, e - s + 1).into_owned(), eta))
        .collect::<Result<_>>()?;

    let folds: Vec<CvFold> = (0..bounds.len())
        .map(|k| CvFold {
            test: bounds[k],
            train: bounds.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, b)| *b).collect(),
        })
        .collect();
    let train_stats: Vec<SufficientStats> = (0..bounds.len())
        .map(|k| {
            let mut it = chunk_stats.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, s)| s);
            let first = it.next().expect("at least two chunks").clone();
            it.try_fold(first, |acc, s| acc.merge(s))
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(f64, f64)> = config
        .grid_c
        .iter()
        .flat_map(|&c| config.d_values().into_iter().map(move |d| (c, d)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|i| (0..bounds.len()).map(move |k| (i, k)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let (c, d) = pairs[i];
            let train = &train_stats[k];
            let (la, ll) = scaled_lambdas(c, d, config.s_hint, config.r_hint, p, train.n(), eta, config.delta);
            let est = fit(train, &config.solver(la, ll))?;
            Ok(one_step_mse(&est.drift(), &chunk_stats[k]))
        })
        .collect::<Result<_>>()?;

    let candidates: Vec<CvCandidate> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(c, d))| {
            let fold_mse = scores[i * bounds.len()..(i + 1) * bounds.len()].to_vec();
            let mean_mse = fold_mse.iter().sum::<f64>() / fold_mse.len() as f64;
            CvCandidate { c, d, fold_mse, mean_mse }
        })
        .collect();
    let best = candidates
        .iter()
        .min_by(|a, b| {
            a.mean_mse
                .total_cmp(&b.mean_mse)
                .then(b.c.total_cmp(&a.c))
                .then(b.d.total_cmp(&a.d))
        })
        .expect("non-empty grid");
    let (lambda_a, lambda_l) = scaled_lambdas(best.c, best.d, config.s_hint, config.r_hint, p, n, eta, config.delta);
    Ok(CvResult {
        c: best.c,
        d: best.d,
        lambda_a,
        lambda_l,
        candidates: candidates.clone(),
        folds,
    })
}
