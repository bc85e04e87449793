//! Recovery metrics, the phase-transition harness, block cross-validation,
//! forecasting and dependency-graph export.

mod cv;
mod graph;
mod phase;

pub use cv::{block_cross_validate, chunk_bounds, CvCandidate, CvConfig, CvFold, CvResult};
pub use graph::{export_dependency_graph, DependencyGraph};
pub use phase::{
    phase_transition, run_trial, LambdaRule, PhaseConfig, PhasePoint, PhaseResult, PhaseRow,
    SimulationKind, TrialRecord,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, spectral_norm, Matrix};
use crate::model::lambda_log_term;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// `Supp(Â) ⊆ Supp(A*)`
    pub support_subset: bool,
    /// `Sign(Â) = Sign(A*)` on thresholded supports
    pub signed_match: bool,
    /// `‖Â − A*‖_∞` (entrywise)
    pub linf_error: f64,
    /// `‖L̂ − L*‖₂`
    pub spectral_error_l: f64,
    pub support_threshold: f64,
}

/// `1e-6 · max(1, ‖Â‖_∞)`: proximal iterates have exact zeros, so this only
/// absorbs round-off.
pub fn default_zeta(a_hat: &Matrix) -> f64 {
    1e-6 * max_abs(a_hat).max(1.0)
}

fn thresholded_sign(v: f64, zeta: f64) -> i8 {
    if v.abs() > zeta {
        if v > 0.0 {
            1
        } else {
            -1
        }
    } else {
        0
    }
}

pub fn recovery_report(
    a_hat: &Matrix,
    a_star: &Matrix,
    l_hat: &Matrix,
    l_star: &Matrix,
    zeta: Option<f64>,
) -> Result<RecoveryReport> {
    if a_hat.shape() != a_star.shape() || l_hat.shape() != l_star.shape() {
        return Err(Error::Dimension("estimate and truth differ in shape".into()));
    }
    let zeta = zeta.unwrap_or_else(|| default_zeta(a_hat));
    if !(zeta >= 0.0) {
        return Err(Error::InvalidArgument(format!("support threshold must be non-negative, got {zeta}")));
    }
    let mut subset = true;
    let mut signed = true;
    for (h, s) in a_hat.iter().zip(a_star.iter()) {
        let sh = thresholded_sign(*h, zeta);
        // the truth is exactly sparse: its support is its nonzero pattern
        let ss = thresholded_sign(*s, 0.0);
        if sh != 0 && ss == 0 {
            subset = false;
        }
        if sh != ss {
            signed = false;
        }
    }
    Ok(RecoveryReport {
        support_subset: subset,
        signed_match: signed,
        linf_error: max_abs(&(a_hat - a_star)),
        spectral_error_l: spectral_norm(&(l_hat - l_star)),
        support_threshold: zeta,
    })
}

/// Regularization weights `λ_A = c·√(log(4((s+2r)p+r²)/δ)/(nη))` and
/// `λ_L = d·√p·λ_A`.
pub fn scaled_lambdas(c: f64, d: f64, s: usize, r: usize, p: usize, n: usize, eta: f64, delta: f64) -> (f64, f64) {
    let lambda_a = c * (lambda_log_term(s, r, p, delta) / (n as f64 * eta)).sqrt();
    (lambda_a, d * (p as f64).sqrt() * lambda_a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `p × horizon`; column `k` is the forecast `k+1` steps ahead.
    #[serde(with = "crate::linalg::nested")]
    pub path: Matrix,
    /// Mean over entries and horizon of the squared error, when actuals are given.
    pub mse: Option<f64>,
}

/// Iterates the noise-free dynamics `x̂ ← x̂ + η(Â + L̂)x̂` from `last`.
pub fn predict(
    drift: &Matrix,
    last: &[f64],
    eta: f64,
    horizon: usize,
    actuals: Option<&Matrix>,
) -> Result<Prediction> {
    let p = drift.nrows();
    if last.len() != p || !drift.is_square() {
        return Err(Error::Dimension("history and drift disagree in dimension".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let step = Matrix::identity(p, p) + drift * eta;
    let mut x = nalgebra::DVector::from_column_slice(last);
    let mut path = Matrix::zeros(p, horizon);
    for k in 0..horizon {
        x = &step * x;
        path.set_column(k, &x);
    }
    let mse = match actuals {
        None => None,
        Some(actual) => {
            if actual.nrows() != p || actual.ncols() < horizon {
                return Err(Error::Dimension(format!(
                    "need {p}×{horizon} actual values, got {}×{}",
                    actual.nrows(),
                    actual.ncols()
                )));
            }
            let diff = &path - actual.columns(0, horizon);
            Some(diff.norm_squared() / (p * horizon) as f64)
        }
    };
    Ok(Prediction { path, mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_row_major;

    #[test]
    fn perfect_recovery() {
        let a = from_row_major(2, 2, &[-1.0, 0.5, 0.0, -2.0]).unwrap();
        let l = Matrix::from_element(2, 2, 0.1);
        let rep = recovery_report(&a, &a, &l, &l, None).unwrap();
        assert!(rep.support_subset && rep.signed_match);
        assert_eq!(rep.linf_error, 0.0);
        assert_eq!(rep.spectral_error_l, 0.0);
    }

    #[test]
    fn extra_entry_breaks_subset() {
        let a = from_row_major(2, 2, &[-1.0, 0.5, 0.0, -2.0]).unwrap();
        let zeta = 1e-3;
        let mut noisy = a.clone();
        noisy[(1, 0)] = 2.0 * zeta;
        let z = Matrix::zeros(2, 2);
        let rep = recovery_report(&noisy, &a, &z, &z, Some(zeta)).unwrap();
        assert!(!rep.support_subset && !rep.signed_match);
        noisy[(1, 0)] = 0.5 * zeta;
        let rep = recovery_report(&noisy, &a, &z, &z, Some(zeta)).unwrap();
        assert!(rep.support_subset && rep.signed_match);
        // a missing entry keeps the subset property but not the signed match
        let mut sparse = a.clone();
        sparse[(0, 1)] = 0.0;
        let rep = recovery_report(&sparse, &a, &z, &z, Some(zeta)).unwrap();
        assert!(rep.support_subset && !rep.signed_match);
        // flipped sign
        let mut flipped = a.clone();
        flipped[(0, 1)] = -0.5;
        let rep = recovery_report(&flipped, &a, &z, &z, Some(zeta)).unwrap();
        assert!(rep.support_subset && !rep.signed_match);
    }

    #[test]
    fn lambda_scaling() {
        let (la, ll) = scaled_lambdas(2.0, 0.5, 3, 2, 40, 1000, 0.1, 0.1);
        let want = 2.0 * ((4.0 * (7.0 * 40.0 + 4.0) / 0.1_f64).ln() / 100.0).sqrt();
        assert!((la - want).abs() < 1e-15);
        assert!((ll - 0.5 * 40f64.sqrt() * want).abs() < 1e-14);
    }

    #[test]
    fn zero_drift_predicts_constant() {
        let last = [1.0, -2.0];
        let actual = from_row_major(2, 3, &[1.0, 2.0, 0.0, -2.0, -2.0, -1.0]).unwrap();
        let pred = predict(&Matrix::zeros(2, 2), &last, 1.0, 3, Some(&actual)).unwrap();
        assert_eq!(pred.path, from_row_major(2, 3, &[1.0, 1.0, 1.0, -2.0, -2.0, -2.0]).unwrap());
        let mse = (0.0 + 1.0 + 1.0 + 0.0 + 0.0 + 1.0) / 6.0;
        assert!((pred.mse.unwrap() - mse).abs() < 1e-15);
    }

    #[test]
    fn noise_free_recursion_is_reproduced() {
        let m = from_row_major(2, 2, &[-0.5, 0.2, 0.1, -0.3]).unwrap();
        let eta = 0.1;
        let mut x = nalgebra::DVector::from_vec(vec![1.0, 1.0]);
        let mut actual = Matrix::zeros(2, 25);
        for k in 0..25 {
            // written out entrywise as the independent recursion
            let next = [
                x[0] + eta * (m[(0, 0)] * x[0] + m[(0, 1)] * x[1]),
                x[1] + eta * (m[(1, 0)] * x[0] + m[(1, 1)] * x[1]),
            ];
            x = nalgebra::DVector::from_vec(next.to_vec());
            actual.set_column(k, &x);
        }
        let pred = predict(&m, &[1.0, 1.0], eta, 25, Some(&actual)).unwrap();
        assert!(pred.mse.unwrap() < 1e-28);
    }
}
