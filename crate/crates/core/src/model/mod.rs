//! Ground-truth systems, their stationary statistics, and the structural
//! constants used to state recovery guarantees.

mod constants;

pub use constants::{
    assumption_report, control_parameter, identifiability_alpha, incoherence_mu,
    lambda_log_term, lasso_incoherence_theta, row_supports, sample_complexity_t,
    sparsity_level, theorem_constants, theoretical_lambdas, AssumptionReport, Incoherence,
    RegularizerInputs, Regularizers, StructuralConstants, TheoremConstants, DEFAULT_K,
    DEFAULT_RANK_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_finite, from_rows, solve_lyapunov_continuous, solve_lyapunov_discrete,
    spectral_norm, sym_eigen_extremes, to_rows, Matrix,
};

/// Block system `d/dt [x; u] = [A B; C D] [x; u] + dw/dt` (or its Euler
/// discretization with step `eta`). `x` has `p` observed components, `u` has
/// `r` latent ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDoc", into = "SystemDoc")]
pub struct SystemParams {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    /// Sampling step; `0` selects the continuous-time interpretation.
    pub eta: f64,
}

impl SystemParams {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix, eta: f64) -> Result<Self> {
        let p = a.nrows();
        let r = d.nrows();
        if p == 0 {
            return Err(Error::Dimension("observed dimension p must be positive".into()));
        }
        let shapes = [
            ("A", a.shape(), (p, p)),
            ("B", b.shape(), (p, r)),
            ("C", c.shape(), (r, p)),
            ("D", d.shape(), (r, r)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::Dimension(format!(
                    "block {name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            ensure_finite(m, name)?;
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sampling step must be non-negative, got {eta}"
            )));
        }
        let params = Self { a, b, c, d, eta };
        if eta > 0.0 {
            let bound = 2.0 / spectral_norm(&params.joint());
            if eta >= bound {
                return Err(Error::InvalidArgument(format!(
                    "sampling step {eta} must be below 2/σ_max = {bound}"
                )));
            }
        }
        Ok(params)
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn r(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_continuous(&self) -> bool {
        self.eta == 0.0
    }

    /// The joint `(p+r)×(p+r)` drift matrix `[A B; C D]`.
    pub fn joint(&self) -> Matrix {
        let (p, r) = (self.p(), self.r());
        let mut m = Matrix::zeros(p + r, p + r);
        m.view_mut((0, 0), (p, p)).copy_from(&self.a);
        m.view_mut((0, p), (p, r)).copy_from(&self.b);
        m.view_mut((p, 0), (r, p)).copy_from(&self.c);
        m.view_mut((p, p), (r, r)).copy_from(&self.d);
        m
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.d.clone(),
            eta,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    p: usize,
    r: usize,
    eta: f64,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
}

fn shaped(rows: usize, cols: usize, data: &[Vec<f64>], name: &str) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        if data.len() != rows || data.iter().any(|row| !row.is_empty()) {
            return Err(Error::Dimension(format!("block {name} should be empty")));
        }
        return Ok(Matrix::zeros(rows, cols));
    }
    let m = from_rows(data)?;
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "block {name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

impl TryFrom<SystemDoc> for SystemParams {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<Self> {
        let (p, r) = (doc.p, doc.r);
        SystemParams::new(
            shaped(p, p, &doc.a, "A")?,
            shaped(p, r, &doc.b, "B")?,
            shaped(r, p, &doc.c, "C")?,
            shaped(r, r, &doc.d, "D")?,
            doc.eta,
        )
    }
}

impl From<SystemParams> for SystemDoc {
    fn from(s: SystemParams) -> Self {
        SystemDoc {
            p: s.p(),
            r: s.r(),
            eta: s.eta,
            a: to_rows(&s.a),
            b: to_rows(&s.b),
            c: to_rows(&s.c),
            d: to_rows(&s.d),
        }
    }
}

/// Stability margin `D`: `−λ_max((𝒜+𝒜ᵀ)/2)` in continuous time and
/// `(1 − σ_max(I + η𝒜)²)/η` in discrete time. Positive iff the system is
/// stable in the strong (contractive) sense.
pub fn stability_margin(params: &SystemParams) -> f64 {
    let joint = params.joint();
    if params.is_continuous() {
        -sym_eigen_extremes(&joint).1
    } else {
        let n = joint.nrows();
        let step = Matrix::identity(n, n) + joint * params.eta;
        let sigma = spectral_norm(&step);
        (1.0 - sigma * sigma) / params.eta
    }
}

/// Stationary covariance blocks and the latent-effect matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyState {
    /// Joint stationary covariance `[Q Rᵀ; R P]`.
    #[serde(with = "crate::linalg::nested")]
    pub joint: Matrix,
    /// Observed covariance, `p×p`.
    #[serde(with = "crate::linalg::nested")]
    pub q: Matrix,
    /// Latent–observed cross-covariance, `r×p`.
    #[serde(skip)]
    pub r: Matrix,
    /// Latent covariance, `r×r`.
    #[serde(skip)]
    pub p: Matrix,
    /// Latent-effect matrix `B R Q⁻¹`, `p×p`, rank at most `r`.
    #[serde(with = "crate::linalg::nested")]
    pub l: Matrix,
    /// `λ_min` of the joint covariance.
    pub c_min: f64,
    /// `λ_max` of the joint covariance.
    pub d_max: f64,
    pub stability_margin: f64,
}

const SINGULAR_Q_TOL: f64 = 1e-12;

pub fn steady_state(params: &SystemParams) -> Result<SteadyState> {
    let joint_drift = params.joint();
    let joint = if params.is_continuous() {
        solve_lyapunov_continuous(&joint_drift)?
    } else {
        solve_lyapunov_discrete(&joint_drift, params.eta)?
    };
    let (p, r) = (params.p(), params.r());
    let q = joint.view((0, 0), (p, p)).into_owned();
    let cross = joint.view((p, 0), (r, p)).into_owned();
    let latent = joint.view((p, p), (r, r)).into_owned();

    let (q_min, _) = sym_eigen_extremes(&q);
    if q_min < SINGULAR_Q_TOL {
        return Err(Error::Numerical(format!(
            "observed covariance is numerically singular (λ_min = {q_min:e})"
        )));
    }

    let l = if r == 0 {
        Matrix::zeros(p, p)
    } else {
        // L = B R Q⁻¹  ⇔  Q Lᵀ = (B R)ᵀ since Q is symmetric
        let br = &params.b * &cross;
        let chol = q
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("observed covariance is not positive definite".into()))?;
        chol.solve(&br.transpose()).transpose()
    };

    let (c_min, d_max) = sym_eigen_extremes(&joint);
    Ok(SteadyState {
        joint,
        q,
        r: cross,
        p: latent,
        l,
        c_min,
        d_max,
        stability_margin: stability_margin(params),
    })
}

/// Population least-squares estimate that ignores the latent series:
/// `A + B R Q⁻¹`.
pub fn population_mle(params: &SystemParams) -> Result<Matrix> {
    let ss = steady_state(params)?;
    Ok(&params.a + ss.l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_illustrative, gen_random_system, GenSpec};
    use crate::oracle;

    fn neg_identity_system(p: usize, r: usize, eta: f64) -> SystemParams {
        SystemParams::new(
            -Matrix::identity(p, p),
            Matrix::zeros(p, r),
            Matrix::zeros(r, p),
            -Matrix::identity(r, r),
            eta,
        )
        .unwrap()
    }

    #[test]
    fn margins_of_negative_identity() {
        assert!((stability_margin(&neg_identity_system(3, 1, 0.0)) - 1.0).abs() < 1e-14);
        let m = stability_margin(&neg_identity_system(2, 0, 0.5));
        assert!((m - 1.5).abs() < 1e-14);
    }

    #[test]
    fn illustrative_margin_closed_form() {
        // sym part is [[-I, B/2], [Bᵀ/2, -I]] with σ(B) = √(p/r)
        for (p, r) in [(4, 2), (16, 2), (9, 3), (4, 4)] {
            let sys = gen_illustrative(p, r).unwrap();
            let expected = 1.0 - ((p / r) as f64).sqrt() / 2.0;
            assert!((stability_margin(&sys) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_steady_state() {
        let ss = steady_state(&neg_identity_system(2, 0, 0.0)).unwrap();
        assert!((ss.q - Matrix::identity(2, 2) * 0.5).norm() < 1e-15);
        assert_eq!(ss.l, Matrix::zeros(2, 2));
        assert_eq!(population_mle(&neg_identity_system(2, 0, 0.0)).unwrap(), -Matrix::identity(2, 2));
    }

    #[test]
    fn illustrative_closed_forms() {
        for (p, r) in [(4, 2), (16, 2), (6, 3)] {
            let sys = gen_illustrative(p, r).unwrap();
            let ss = steady_state(&sys).unwrap();
            let bbt = &sys.b * sys.b.transpose();
            let eye = Matrix::identity(p, p);
            // Solving the block equations with P = I/2:
            // R = Bᵀ/4, Q = I/2 + BBᵀ/4, L = BBᵀ r/(p + 2r)
            assert!((&ss.p - Matrix::identity(r, r) * 0.5).norm() < 1e-12);
            assert!((&ss.r - sys.b.transpose() * 0.25).norm() < 1e-12);
            assert!((&ss.q - (&eye * 0.5 + &bbt * 0.25)).norm() < 1e-12);
            let l_expected = &bbt * (r as f64 / (p + 2 * r) as f64);
            assert!((&ss.l - &l_expected).norm() < 1e-12);
            assert!((population_mle(&sys).unwrap() - (-&eye + l_expected)).norm() < 1e-12);

            // λ_min of the observed block is ½; the joint matrix goes lower
            let (q_min, _) = sym_eigen_extremes(&ss.q);
            assert!((q_min - 0.5).abs() < 1e-12);
            let k = (p / r) as f64;
            let joint_min = ((4.0 + k) - (k * k + 4.0 * k).sqrt()) / 8.0;
            let joint_max = ((4.0 + k) + (k * k + 4.0 * k).sqrt()) / 8.0;
            assert!((ss.c_min - joint_min).abs() < 1e-12);
            assert!((ss.d_max - joint_max).abs() < 1e-12);
        }
    }

    #[test]
    fn random_system_blocks_match_kronecker_oracle() {
        let spec = GenSpec::new(6, 2, 2, 17);
        let sys = gen_random_system(&spec).unwrap();
        let ss = steady_state(&sys).unwrap();
        let reference = oracle::kronecker_lyapunov_continuous(&sys.joint());
        assert!((&ss.joint - &reference).norm() <= 1e-9 * reference.norm());
        assert!(
            crate::linalg::continuous_residual(&sys.joint(), &ss.joint) <= 1e-10 * ss.joint.norm()
        );
        // rank(L) ≤ r
        let sv = ss.l.singular_values();
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert!(sorted[2..].iter().all(|&s| s <= 1e-9 * sorted[0]));
        // population MLE minus L is A exactly
        let mle = population_mle(&sys).unwrap();
        assert_eq!(&mle - &ss.l, sys.a);

        let discrete = sys.with_eta(0.05).unwrap();
        let ssd = steady_state(&discrete).unwrap();
        let reference = oracle::kronecker_lyapunov_discrete(&sys.joint(), 0.05);
        assert!((&ssd.joint - &reference).norm() <= 1e-9 * reference.norm());
    }

    #[test]
    fn rejects_bad_blocks_and_steps() {
        let bad = SystemParams::new(
            -Matrix::identity(2, 2),
            Matrix::zeros(2, 1),
            Matrix::zeros(2, 2),
            -Matrix::identity(1, 1),
            0.0,
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
        // σ_max = 1 so η must stay below 2
        assert!(neg_identity_system(2, 1, 0.0).with_eta(2.0).is_err());
        assert!(neg_identity_system(2, 1, 0.0).with_eta(1.9).is_ok());
    }

    #[test]
    fn unstable_system_has_no_steady_state() {
        let sys = SystemParams::new(
            Matrix::identity(2, 2) * 0.1,
            Matrix::zeros(2, 0),
            Matrix::zeros(0, 2),
            Matrix::zeros(0, 0),
            0.0,
        )
        .unwrap();
        assert!(stability_margin(&sys) < 0.0);
        assert!(matches!(steady_state(&sys), Err(Error::Precondition(_))));
    }

    #[test]
    fn json_round_trip_keeps_empty_blocks() {
        let sys = neg_identity_system(3, 0, 0.0);
        let json = serde_json::to_string(&sys).unwrap();
        let back: SystemParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);
        let sys = gen_illustrative(4, 2).unwrap();
        let back: SystemParams = serde_json::from_str(&serde_json::to_string(&sys).unwrap()).unwrap();
        assert_eq!(back, sys);
    }
}
