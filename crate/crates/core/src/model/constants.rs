use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{stability_margin, steady_state, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::{max_row_l1, spectral_norm, svd, Matrix};

/// Relative singular-value cutoff used to read off the rank of `L`.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Sample-complexity constant; large enough for the worst-case guarantee.
pub const DEFAULT_K: f64 = 3.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incoherence {
    pub mu: f64,
    pub rank: usize,
}

/// Smallest `μ` for which `L` (rank `k`) satisfies
/// `max_i ‖Uᵀe_i‖, max_j ‖Vᵀe_j‖ ≤ √(μk/p)` and `‖UVᵀ‖_∞ ≤ √(kμ/p²)`.
pub fn incoherence_mu(l: &Matrix, rank_tol: f64) -> Result<Incoherence> {
    let p = l.nrows();
    let dec = svd(l)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(Incoherence { mu: 0.0, rank: 0 });
    }
    let rank = dec.s.iter().take_while(|&&s| s > rank_tol * smax).count();
    let u = dec.u.columns(0, rank);
    let v = dec.v.columns(0, rank);
    let max_row_sq = |m: &nalgebra::DMatrixView<f64>| {
        m.row_iter()
            .map(|row| row.norm_squared())
            .fold(0.0, f64::max)
    };
    let pf = p as f64;
    let kf = rank as f64;
    let uvt = u * v.transpose();
    let uvt_max = uvt.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let mu = (pf / kf * max_row_sq(&u))
        .max(pf / kf * max_row_sq(&v))
        .max(pf * pf / kf * uvt_max * uvt_max);
    Ok(Incoherence { mu, rank })
}

/// `α = 3√(μr/p)`; identifiability needs `α < 1`.
pub fn identifiability_alpha(mu: f64, r: usize, p: usize) -> f64 {
    3.0 * (mu * r as f64 / p as f64).sqrt()
}

/// Nonzero column indices of each row.
pub fn row_supports(a: &Matrix) -> Vec<Vec<usize>> {
    a.row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Maximum number of nonzeros in any row or column (diagonal included).
pub fn sparsity_level(a: &Matrix) -> usize {
    let rows = a
        .row_iter()
        .map(|r| r.iter().filter(|v| **v != 0.0).count())
        .max()
        .unwrap_or(0);
    let cols = a
        .column_iter()
        .map(|c| c.iter().filter(|v| **v != 0.0).count())
        .max()
        .unwrap_or(0);
    rows.max(cols)
}

/// `θ = 1 − max_k ‖Q_{S_k^c S_k} Q_{S_k S_k}⁻¹‖_{∞,1}`. Negative values mean the
/// incoherence condition fails; that is reported, not raised.
pub fn lasso_incoherence_theta(q: &Matrix, supports: &[Vec<usize>]) -> Result<f64> {
    let p = q.nrows();
    let unique: BTreeSet<Vec<usize>> = supports
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();

    let mut worst = 0.0_f64;
    for support in &unique {
        if support.is_empty() {
            return Err(Error::InvalidArgument("empty row support".into()));
        }
        if support.iter().any(|&j| j >= p) {
            return Err(Error::Dimension("support index out of range".into()));
        }
        let complement: Vec<usize> = (0..p).filter(|j| !support.contains(j)).collect();
        if complement.is_empty() {
            continue;
        }
        let k = support.len();
        let q_ss = Matrix::from_fn(k, k, |i, j| q[(support[i], support[j])]);
        let q_s_sc = Matrix::from_fn(k, complement.len(), |i, j| q[(support[i], complement[j])]);
        // Q_SS X = Q_{S,Sᶜ}  ⇒  Q_{Sᶜ,S} Q_SS⁻¹ = Xᵀ, whose row ℓ1 norms are X's column ℓ1 norms.
        let x = q_ss
            .lu()
            .solve(&q_s_sc)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::Numerical("singular support block of Q".into()))?;
        let norm = x
            .column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        worst = worst.max(norm);
    }
    Ok(1.0 - worst)
}

/// `log(4((s+2r)p + r²)/δ)` (natural log), shared by the regularizer and
/// horizon formulas.
pub fn lambda_log_term(s: usize, r: usize, p: usize, delta: f64) -> f64 {
    let (s, r, p) = (s as f64, r as f64, p as f64);
    (4.0 * ((s + 2.0 * r) * p + r * r) / delta).ln()
}

/// Constants read off the true system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub stability_margin: f64,
    pub mu: f64,
    pub alpha: f64,
    pub theta: f64,
    pub s: usize,
    pub c_min: f64,
    pub d_max: f64,
    pub l_spectral: f64,
}

impl StructuralConstants {
    pub fn from_system(params: &SystemParams) -> Result<Self> {
        let ss = steady_state(params)?;
        let inc = incoherence_mu(&ss.l, DEFAULT_RANK_TOL)?;
        let theta = lasso_incoherence_theta(&ss.q, &row_supports(&params.a))?;
        Ok(Self {
            stability_margin: stability_margin(params),
            mu: inc.mu,
            alpha: identifiability_alpha(inc.mu, params.r(), params.p()),
            theta,
            s: sparsity_level(&params.a),
            c_min: ss.c_min,
            d_max: ss.d_max,
            l_spectral: spectral_norm(&ss.l),
        })
    }

    pub fn a1_holds(&self) -> bool {
        self.stability_margin > 0.0
    }

    pub fn a2_holds(&self) -> bool {
        self.alpha < 1.0
    }

    pub fn a3_holds(&self) -> bool {
        self.theta > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerInputs {
    pub n: usize,
    pub eta: f64,
    pub delta: f64,
    /// `‖x(0)‖²`
    pub x0_norm2: f64,
    /// `‖u(0)‖²`
    pub u0_norm2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizers {
    /// Constant for the initial condition and latent coupling.
    pub m: f64,
    pub lambda_a: f64,
    pub lambda_l: f64,
}

/// Regularization weights that the recovery guarantee is stated for.
pub fn theoretical_lambdas(
    params: &SystemParams,
    constants: &StructuralConstants,
    inputs: &RegularizerInputs,
) -> Result<Regularizers> {
    let StructuralConstants {
        stability_margin: d,
        alpha,
        theta,
        s,
        ..
    } = *constants;
    if d <= 0.0 {
        return Err(Error::Assumption {
            assumption: "A1",
            detail: format!("stability margin D = {d} is not positive"),
        });
    }
    if alpha >= 1.0 {
        return Err(Error::Assumption {
            assumption: "A2",
            detail: format!("α = {alpha} is not below 1"),
        });
    }
    if theta <= 0.0 {
        return Err(Error::Assumption {
            assumption: "A3",
            detail: format!("θ = {theta} is not positive"),
        });
    }
    if inputs.n == 0 || !(inputs.eta > 0.0) {
        return Err(Error::InvalidArgument(
            "need n ≥ 1 samples and a positive sampling step".into(),
        ));
    }
    if !(inputs.delta > 0.0 && inputs.delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "failure probability δ must lie in (0, 1), got {}",
            inputs.delta
        )));
    }

    let (p, r) = (params.p(), params.r());
    let eta = inputs.eta;
    let m = (80.0 / d.sqrt() * max_row_l1(&params.b)).max(
        (inputs.x0_norm2 + inputs.u0_norm2 + (eta.sqrt() + 1.0).powi(2)).sqrt(),
    );
    let horizon = inputs.n as f64 * eta;
    let lambda_a = 16.0 * m * (4.0 - theta) / (theta * d.sqrt())
        * (lambda_log_term(s, r, p, inputs.delta) / horizon).sqrt();

    let sf = s as f64;
    let pf = p as f64;
    let ratio = 1.0 / (1.0 - alpha)
        * ((3.0 * alpha * sf.sqrt() / 4.0 + (8.0 - theta) * sf / (theta * (4.0 - theta)))
            * (theta * pf.sqrt() / (9.0 * sf * sf.sqrt()) + 1.0)
            + 0.5);
    let lambda_l = ratio * lambda_a * pf.sqrt();
    Ok(Regularizers {
        m,
        lambda_a,
        lambda_l,
    })
}

/// Observation horizon `T = nη` sufficient for recovery with probability `1 − δ`:
/// `K s³ / (D² θ² C_min²) · log(4((s+2r)p + r²)/δ)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_complexity_t(
    s: usize,
    r: usize,
    p: usize,
    d: f64,
    theta: f64,
    c_min: f64,
    delta: f64,
    k: f64,
) -> f64 {
    let s3 = (s as f64).powi(3);
    k * s3 / (d * d * theta * theta * c_min * c_min) * lambda_log_term(s, r, p, delta)
}

/// Control parameter `Θ = ηn / (s³ log((s+2r)p + r²))`.
pub fn control_parameter(eta: f64, n: usize, s: usize, r: usize, p: usize) -> f64 {
    let (sf, rf, pf) = (s as f64, r as f64, p as f64);
    eta * n as f64 / (sf.powi(3) * ((sf + 2.0 * rf) * pf + rf * rf).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub nu: f64,
    pub rho0: f64,
}

impl TheoremConstants {
    /// Bound on `‖Â − A*‖_∞`.
    pub fn a_error_bound(&self, lambda_a: f64) -> f64 {
        self.nu * lambda_a
    }

    /// Bound on `‖L̂ − L*‖₂`.
    pub fn l_error_bound(&self, l_spectral: f64) -> f64 {
        self.rho0 / (1.0 - 5.0 * self.rho0) * l_spectral
    }
}

/// `ν = αθ/(2D_max) + (8−θ)√s/(C_min(4−θ))` and
/// `ρ₀ = min(α/4, θαλ_A/(5θαλ_A + 16 D_max ‖L*‖₂))`.
pub fn theorem_constants(
    alpha: f64,
    theta: f64,
    c_min: f64,
    d_max: f64,
    s: usize,
    lambda_a: f64,
    l_spectral: f64,
) -> TheoremConstants {
    let sf = s as f64;
    let nu = alpha * theta / (2.0 * d_max) + (8.0 - theta) * sf.sqrt() / (c_min * (4.0 - theta));
    let tal = theta * alpha * lambda_a;
    let denom = 5.0 * tal + 16.0 * d_max * l_spectral;
    let second = if denom == 0.0 { 0.0 } else { tal / denom };
    TheoremConstants {
        nu,
        rho0: (alpha / 4.0).min(second),
    }
}

/// Everything the recovery guarantee needs, evaluated for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub p: usize,
    pub r: usize,
    /// Stability margin `D`.
    pub d: f64,
    pub mu: f64,
    pub alpha: f64,
    pub theta: f64,
    pub s: usize,
    pub c_min: f64,
    pub d_max: f64,
    pub l_spectral: f64,
    pub a1_holds: bool,
    pub a2_holds: bool,
    pub a3_holds: bool,
    pub nu: f64,
    /// Present only when A1–A3 hold (the formulas are undefined otherwise).
    pub m: Option<f64>,
    pub lambda_a_theory: Option<f64>,
    pub lambda_l_theory: Option<f64>,
    pub rho0: Option<f64>,
    pub t_required: Option<f64>,
    pub delta: f64,
    pub k: f64,
}

impl AssumptionReport {
    pub fn passes(&self) -> bool {
        self.a1_holds && self.a2_holds && self.a3_holds
    }
}

pub fn assumption_report(
    params: &SystemParams,
    inputs: &RegularizerInputs,
    k: f64,
) -> Result<AssumptionReport> {
    let c = StructuralConstants::from_system(params)?;
    let lambdas = theoretical_lambdas(params, &c, inputs).ok();
    let nu = theorem_constants(c.alpha, c.theta, c.c_min, c.d_max, c.s, 0.0, c.l_spectral).nu;
    let rho0 = lambdas.map(|l| {
        theorem_constants(c.alpha, c.theta, c.c_min, c.d_max, c.s, l.lambda_a, c.l_spectral).rho0
    });
    let t_required = (c.a1_holds() && c.a3_holds()).then(|| {
        sample_complexity_t(
            c.s,
            params.r(),
            params.p(),
            c.stability_margin,
            c.theta,
            c.c_min,
            inputs.delta,
            k,
        )
    });
    Ok(AssumptionReport {
        p: params.p(),
        r: params.r(),
        d: c.stability_margin,
        mu: c.mu,
        alpha: c.alpha,
        theta: c.theta,
        s: c.s,
        c_min: c.c_min,
        d_max: c.d_max,
        l_spectral: c.l_spectral,
        a1_holds: c.a1_holds(),
        a2_holds: c.a2_holds(),
        a3_holds: c.a3_holds(),
        nu,
        m: lambdas.map(|l| l.m),
        lambda_a_theory: lambdas.map(|l| l.lambda_a),
        lambda_l_theory: lambdas.map(|l| l.lambda_l),
        rho0,
        t_required,
        delta: inputs.delta,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_illustrative;
    use crate::linalg::from_row_major;
    use crate::model::steady_state;
    use crate::oracle;
    use crate::rng::SeededRng;

    #[test]
    fn mu_of_illustrative_is_r() {
        for (p, r) in [(4, 2), (16, 2), (18, 3), (8, 1)] {
            let sys = gen_illustrative(p, r).unwrap();
            let ss = steady_state(&sys).unwrap();
            let inc = incoherence_mu(&ss.l, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(inc.rank, r);
            assert!((inc.mu - r as f64).abs() < 1e-10, "p={p} r={r} μ={}", inc.mu);
        }
    }

    #[test]
    fn mu_of_canonical_rank_one() {
        let p = 5;
        let mut e1 = Matrix::zeros(p, p);
        e1[(0, 0)] = 1.0;
        // the row-space conditions give μ = p, the ‖UVᵀ‖_∞ condition gives p²
        let inc = incoherence_mu(&e1, DEFAULT_RANK_TOL).unwrap();
        assert!((inc.mu - (p * p) as f64).abs() < 1e-10);

        let flat = Matrix::from_element(p, p, 1.0 / p as f64);
        let inc = incoherence_mu(&flat, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(inc.rank, 1);
        assert!((inc.mu - 1.0).abs() < 1e-10, "{inc:?}");

        let zero = incoherence_mu(&Matrix::zeros(3, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(zero, Incoherence { mu: 0.0, rank: 0 });
    }

    #[test]
    fn mu_is_scale_invariant() {
        let mut rng = SeededRng::new(8);
        let u = Matrix::from_fn(6, 2, |_, _| rng.standard_normal());
        let v = Matrix::from_fn(6, 2, |_, _| rng.standard_normal());
        let l = &u * v.transpose();
        let base = incoherence_mu(&l, DEFAULT_RANK_TOL).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let scaled = incoherence_mu(&(&l * c), DEFAULT_RANK_TOL).unwrap();
            assert_eq!(scaled.rank, 2);
            assert!((scaled.mu - base.mu).abs() < 1e-9 * base.mu);
        }
    }

    #[test]
    fn alpha_values() {
        assert_eq!(identifiability_alpha(3.0, 0, 10), 0.0);
        assert!((identifiability_alpha(4.0, 4, 144) - 1.0).abs() < 1e-15);
        // μ = r: α < 1 iff r < √p / 3
        assert!(identifiability_alpha(2.0, 2, 64) < 1.0);
        assert!(identifiability_alpha(3.0, 3, 64) >= 1.0);
    }

    #[test]
    fn theta_diagonal_and_illustrative() {
        let q = Matrix::from_diagonal_element(4, 4, 2.0);
        let supports = vec![vec![0, 1], vec![2], vec![3, 0]];
        assert_eq!(lasso_incoherence_theta(&q, &supports).unwrap(), 1.0);

        // Q = I/2 + BBᵀ/4 with singleton supports: off-support entries ¼ against ¾
        for (p, r) in [(4, 2), (16, 2)] {
            let sys = gen_illustrative(p, r).unwrap();
            let ss = steady_state(&sys).unwrap();
            let theta = lasso_incoherence_theta(&ss.q, &row_supports(&sys.a)).unwrap();
            assert!((theta - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_two_by_two_family_is_monotone() {
        let mut last = f64::INFINITY;
        for k in 0..10 {
            let c = k as f64 / 10.0;
            let q = from_row_major(2, 2, &[1.0, c, c, 1.0]).unwrap();
            let theta = lasso_incoherence_theta(&q, &[vec![0], vec![1]]).unwrap();
            assert!((theta - (1.0 - c)).abs() < 1e-14);
            assert!(theta <= last);
            last = theta;
        }
    }

    #[test]
    fn theta_matches_dense_oracle() {
        let mut rng = SeededRng::new(13);
        let g = Matrix::from_fn(6, 6, |_, _| rng.standard_normal());
        let q = &g * g.transpose() + Matrix::identity(6, 6);
        let supports = vec![vec![0, 3], vec![1, 2], vec![4, 5], vec![0, 3]];
        let got = lasso_incoherence_theta(&q, &supports).unwrap();
        let want = oracle::dense_theta(&q, &supports);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn theta_singular_block_errors() {
        let q = from_row_major(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            lasso_incoherence_theta(&q, &[vec![0]]),
            Err(Error::Numerical(_))
        ));
    }

    fn constants(d: f64, theta: f64, alpha: f64, s: usize) -> StructuralConstants {
        StructuralConstants {
            stability_margin: d,
            mu: 0.0,
            alpha,
            theta,
            s,
            c_min: 0.5,
            d_max: 1.0,
            l_spectral: 0.0,
        }
    }

    fn simple_system(p: usize, r: usize) -> SystemParams {
        SystemParams::new(
            -Matrix::identity(p, p),
            Matrix::zeros(p, r),
            Matrix::zeros(r, p),
            -Matrix::identity(r, r),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn lambda_a_instantiation() {
        let (p, r, s) = (16, 2, 1);
        let sys = simple_system(p, r);
        let inputs = RegularizerInputs {
            n: 1000,
            eta: 0.01,
            delta: 0.1,
            x0_norm2: 0.0,
            u0_norm2: 0.0,
        };
        let c = constants(2.0, 0.5, 0.2, s);
        let regs = theoretical_lambdas(&sys, &c, &inputs).unwrap();
        // B = 0 so m is the initial-condition branch: √((√η + 1)²) = √η + 1
        let m = 0.01_f64.sqrt() + 1.0;
        assert!((regs.m - m).abs() < 1e-15);
        let log_term = (4.0 * ((s + 2 * r) * p + r * r) as f64 / 0.1).ln();
        let expected = 16.0 * m * 3.5 / (0.5 * 2f64.sqrt()) * (log_term / 10.0).sqrt();
        assert!((regs.lambda_a - expected).abs() < 1e-12 * expected);

        // doubling nη divides λ_A by √2
        let doubled = theoretical_lambdas(&sys, &c, &RegularizerInputs { n: 2000, ..inputs }).unwrap();
        assert!((regs.lambda_a / doubled.lambda_a - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lambda_l_ratio_by_substitution() {
        // s = 1, α = 3r/√p, θ = ½:
        //   first factor  = 9r/(4√p) + 7.5/1.75 = 9r/(4√p) + 30/7
        //   second factor = √p/18 + 1
        let (p, r) = (64, 2);
        let sys = simple_system(p, r);
        let alpha = 3.0 * r as f64 / (p as f64).sqrt();
        let c = constants(1.0, 0.5, alpha, 1);
        let inputs = RegularizerInputs {
            n: 500,
            eta: 0.1,
            delta: 0.05,
            x0_norm2: 1.0,
            u0_norm2: 0.0,
        };
        let regs = theoretical_lambdas(&sys, &c, &inputs).unwrap();
        let sp = (p as f64).sqrt();
        let first = 9.0 * r as f64 / (4.0 * sp) + 30.0 / 7.0;
        let second = sp / 18.0 + 1.0;
        let ratio = (first * second + 0.5) / (1.0 - alpha);
        assert!((regs.lambda_l / (regs.lambda_a * sp) - ratio).abs() < 1e-12 * ratio);
    }

    #[test]
    fn lambdas_name_the_failed_assumption() {
        let sys = simple_system(4, 1);
        let inputs = RegularizerInputs {
            n: 10,
            eta: 0.1,
            delta: 0.1,
            x0_norm2: 0.0,
            u0_norm2: 0.0,
        };
        for (c, name) in [
            (constants(-1.0, 0.5, 0.1, 1), "A1"),
            (constants(1.0, 0.5, 1.2, 1), "A2"),
            (constants(1.0, -0.1, 0.1, 1), "A3"),
        ] {
            match theoretical_lambdas(&sys, &c, &inputs) {
                Err(Error::Assumption { assumption, .. }) => assert_eq!(assumption, name),
                other => panic!("expected assumption failure, got {other:?}"),
            }
        }
        let bad_delta = RegularizerInputs { delta: 1.5, ..inputs };
        assert!(theoretical_lambdas(&sys, &constants(1.0, 0.5, 0.1, 1), &bad_delta).is_err());
    }

    #[test]
    fn horizon_formula() {
        // D = 2, θ = ½, C_min = ½ makes the prefactor 4K s³
        let (s, r, p, delta) = (1, 2, 16, 0.1);
        let t = sample_complexity_t(s, r, p, 2.0, 0.5, 0.5, delta, DEFAULT_K);
        let log_term = ((4 * (1 + 2 * r) * p + 4 * r * r) as f64 / delta).ln();
        assert!((t - 4.0 * DEFAULT_K * log_term).abs() < 1e-9 * t);

        let t1 = sample_complexity_t(2, r, p, 1.0, 0.5, 0.5, delta, 1.0);
        let t2 = sample_complexity_t(4, r, p, 1.0, 0.5, 0.5, delta, 1.0);
        let logs = lambda_log_term(4, r, p, delta) / lambda_log_term(2, r, p, delta);
        assert!((t2 / t1 - 8.0 * logs).abs() < 1e-12);

        // spot value: s=3, r=2, p=40, D=2, θ=½, C_min=½, δ=0.1
        let spot = sample_complexity_t(3, 2, 40, 2.0, 0.5, 0.5, 0.1, DEFAULT_K);
        let by_hand = 3.0e6 * 27.0 / (4.0 * 0.25 * 0.25) * (4.0 * (7.0 * 40.0 + 4.0) / 0.1_f64).ln();
        assert!((spot - by_hand).abs() < 1e-9 * by_hand);
    }

    #[test]
    fn control_parameter_values() {
        let theta = control_parameter(0.01, 1_000_000, 20, 10, 200);
        let expected = 1e4 / (8000.0 * 8100_f64.ln());
        assert!((theta - expected).abs() < 1e-15);
        assert!((theta - 0.1389).abs() < 1e-3);
        let doubled = control_parameter(0.01, 2_000_000, 20, 10, 200);
        assert!((doubled - 2.0 * theta).abs() < 1e-15);
    }

    #[test]
    fn theorem_constant_formulas() {
        let (p, r, s) = (64usize, 2usize, 1usize);
        let alpha = 3.0 * r as f64 / (p as f64).sqrt();
        let tc = theorem_constants(alpha, 0.5, 0.5, 1.0, s, 0.1, 0.8);
        // with D_max = 1, C_min = ½: 3r/(4√p) + (15/7)·√s/½
        let expected = 3.0 * r as f64 / (4.0 * (p as f64).sqrt()) + 30.0 / 7.0;
        assert!((tc.nu - expected).abs() < 1e-12);
        assert!(tc.rho0 <= alpha / 4.0);

        let mut last = f64::INFINITY;
        for lambda_a in [1.0, 1e-2, 1e-4, 1e-8] {
            let rho = theorem_constants(alpha, 0.5, 0.5, 1.0, s, lambda_a, 0.8).rho0;
            assert!(rho < last && rho <= alpha / 4.0);
            last = rho;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn report_for_illustrative() {
        let sys = gen_illustrative(4, 2).unwrap();
        let inputs = RegularizerInputs {
            n: 10_000,
            eta: 0.01,
            delta: 0.1,
            x0_norm2: 0.0,
            u0_norm2: 0.0,
        };
        let rep = assumption_report(&sys, &inputs, DEFAULT_K).unwrap();
        assert!((rep.mu - 2.0).abs() < 1e-10);
        assert!((rep.alpha - 3.0 * 2.0 / 2.0).abs() < 1e-10);
        assert!(rep.a1_holds && !rep.a2_holds && rep.a3_holds);
        assert!(rep.lambda_a_theory.is_none());
        assert!(rep.t_required.is_some());
        assert_eq!(rep.s, 1);
        assert!(!rep.passes());
    }
}
