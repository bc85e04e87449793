use latent_structure::evaluate::recovery_report;
use latent_structure::generate::{gen_random_system, GenSpec};
use latent_structure::linalg::{
    continuous_residual, discrete_residual, frob_inner, matrix_exponential, max_abs, prox_l1, prox_nuclear,
    solve_lyapunov_continuous, solve_lyapunov_discrete, spectral_norm, svd, sym_eigen_extremes, Matrix,
};
use latent_structure::model::{incoherence_mu, population_mle, stability_margin, steady_state, DEFAULT_RANK_TOL};
use latent_structure::rng::SeededRng;
use latent_structure::simulate::SufficientStats;
use latent_structure::solver::{fit, smooth_gradient, SolverConfig};
use proptest::prelude::*;

fn gaussian(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.standard_normal())
}

/// Random matrix shifted left until its symmetric part is negative definite.
fn stable(n: usize, rng: &mut SeededRng) -> Matrix {
    let g = gaussian(n, n, rng);
    let shift = spectral_norm(&g) + 0.5;
    g - Matrix::identity(n, n) * shift
}

fn orthogonal(n: usize, rng: &mut SeededRng) -> Matrix {
    gaussian(n, n, rng).qr().q()
}

/// Sufficient statistics of a synthetic problem with positive definite `S1`.
fn random_stats(p: usize, rng: &mut SeededRng) -> SufficientStats {
    let n = 50 * p;
    let x = gaussian(p, n + 1, rng);
    SufficientStats::from_columns(&x, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn lyapunov_solutions_are_symmetric_pd_with_small_residual(n in 1usize..9, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let a = stable(n, &mut rng);
        let q = solve_lyapunov_continuous(&a).unwrap();
        prop_assert!(max_abs(&(&q - q.transpose())) <= 1e-12 * max_abs(&q).max(1.0));
        prop_assert!(sym_eigen_extremes(&q).0 > 0.0);
        prop_assert!(continuous_residual(&a, &q) <= 1e-10 * (1.0 + spectral_norm(&a) * q.norm()));

        let eta = 1.0 / (spectral_norm(&a) + 1.0);
        let qd = solve_lyapunov_discrete(&a, eta).unwrap();
        prop_assert!(max_abs(&(&qd - qd.transpose())) <= 1e-12 * max_abs(&qd).max(1.0));
        prop_assert!(sym_eigen_extremes(&qd).0 > 0.0);
        prop_assert!(discrete_residual(&a, &qd, eta) <= 1e-10 * (1.0 + spectral_norm(&a) * qd.norm()));
    }

    #[test]
    fn prox_maps_are_non_expansive(rows in 1usize..7, cols in 1usize..7, tau in 0.0f64..2.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let x = gaussian(rows, cols, &mut rng);
        let y = gaussian(rows, cols, &mut rng) * 0.3 + &x;
        let gap = (&x - &y).norm();
        prop_assert!((prox_l1(&x, tau) - prox_l1(&y, tau)).norm() <= gap * (1.0 + 1e-12));
        let px = prox_nuclear(&x, tau).unwrap().matrix;
        let py = prox_nuclear(&y, tau).unwrap().matrix;
        prop_assert!((px - py).norm() <= gap * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn nuclear_prox_is_unitarily_invariant(n in 1usize..7, tau in 0.0f64..2.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let m = gaussian(n, n, &mut rng);
        let u = orthogonal(n, &mut rng);
        let v = orthogonal(n, &mut rng);
        let rotated = prox_nuclear(&(&u * &m * v.transpose()), tau).unwrap().matrix;
        let expected = &u * prox_nuclear(&m, tau).unwrap().matrix * v.transpose();
        prop_assert!(max_abs(&(rotated - expected)) < 1e-10);
    }

    #[test]
    fn exponential_semigroup(n in 1usize..7, s in 0.01f64..1.0, t in 0.01f64..1.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let m = stable(n, &mut rng);
        let lhs = matrix_exponential(&(&m * (s + t))).unwrap();
        let rhs = matrix_exponential(&(&m * s)).unwrap() * matrix_exponential(&(&m * t)).unwrap();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-9);
    }

    #[test]
    fn generated_systems_keep_their_structure(
        p in 3usize..13, r_pick in 0usize..3, s_frac in 0.0f64..1.0, margin in 0.2f64..2.0, seed in any::<u64>()
    ) {
        let r = [0, 2, p][r_pick].max(if r_pick == 0 { 0 } else { 2 });
        let s = ((p - 1) as f64 * s_frac) as usize;
        let spec = GenSpec { diag_margin: margin, ..GenSpec::new(p, r, s, seed) };
        prop_assume!(spec.validate().is_ok());
        let sys = gen_random_system(&spec).unwrap();
        prop_assert!(stability_margin(&sys) >= margin - 1e-10);
        prop_assert_eq!(&sys, &gen_random_system(&spec).unwrap());

        let ss = steady_state(&sys).unwrap();
        let sv = svd(&ss.l).unwrap().s;
        let top = sv.first().copied().unwrap_or(0.0);
        prop_assert!(sv.iter().skip(r).all(|v| *v <= 1e-9 * top.max(f64::MIN_POSITIVE)));
        let residual = population_mle(&sys).unwrap() - &ss.l - &sys.a;
        prop_assert!(max_abs(&residual) <= 1e-12 * (1.0 + max_abs(&sys.a)));
    }

    #[test]
    fn mu_ignores_positive_scale(p in 2usize..9, r in 1usize..3, scale in 1e-3f64..1e3, seed in any::<u64>()) {
        prop_assume!(r <= p);
        let mut rng = SeededRng::new(seed);
        let l = gaussian(p, r, &mut rng) * gaussian(r, p, &mut rng);
        let base = incoherence_mu(&l, DEFAULT_RANK_TOL).unwrap();
        let scaled = incoherence_mu(&(&l * scale), DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(base.rank, scaled.rank);
        prop_assert!((base.mu - scaled.mu).abs() <= 1e-9 * base.mu);
    }

    #[test]
    fn self_comparison_is_perfect(p in 1usize..8, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let x = prox_l1(&gaussian(p, p, &mut rng), 0.7);
        let y = gaussian(p, p, &mut rng);
        let rep = recovery_report(&x, &x, &y, &y, None).unwrap();
        prop_assert!(rep.support_subset && rep.signed_match);
        prop_assert_eq!(rep.linf_error, 0.0);
        prop_assert_eq!(rep.spectral_error_l, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn fista_trace_never_increases(p in 2usize..7, la in 0.01f64..0.5, ll in 0.01f64..1.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let stats = random_stats(p, &mut rng);
        let est = fit(&stats, &SolverConfig::new(la, ll)).unwrap();
        for w in est.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0], "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn converged_fit_is_a_fixed_point(p in 2usize..6, la in 0.02f64..0.5, ll in 0.02f64..1.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let stats = random_stats(p, &mut rng);
        let cfg = SolverConfig::new(la, ll);
        let est = fit(&stats, &cfg).unwrap();
        prop_assume!(est.converged);
        let step = est.step_used;
        let g = smooth_gradient(&est.drift(), &stats);
        let a = prox_l1(&(&est.a_hat - &g * step), step * la);
        let l = prox_nuclear(&(&est.l_hat - &g * step), step * ll).unwrap().matrix;
        let moved = ((a - &est.a_hat).norm_squared() + (l - &est.l_hat).norm_squared()).sqrt();
        prop_assert!(moved < 10.0 * cfg.tol, "moved {moved:e}");
    }

    #[test]
    fn fit_is_covariant_under_data_scaling(p in 2usize..6, c in 0.2f64..5.0, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let x = gaussian(p, 50 * p + 1, &mut rng);
        let stats = SufficientStats::from_columns(&x, 0.1).unwrap();
        let scaled = SufficientStats::from_columns(&(&x * c), 0.1).unwrap();
        prop_assert!(max_abs(&(scaled.s1() - stats.s1() * (c * c))) <= 1e-12 * max_abs(scaled.s1()));
        prop_assert!(max_abs(&(scaled.s2() - stats.s2() * (c * c))) <= 1e-12 * max_abs(scaled.s2()));

        let tight = |la: f64, ll: f64| SolverConfig { tol: 1e-14, max_iter: 50_000, ..SolverConfig::new(la, ll) };
        let base = fit(&stats, &tight(0.1, 0.3)).unwrap();
        let other = fit(&scaled, &tight(0.1 * c * c, 0.3 * c * c)).unwrap();
        let scale = 1.0 + max_abs(&base.a_hat) + max_abs(&base.l_hat);
        prop_assert!(max_abs(&(&other.a_hat - &base.a_hat)) < 1e-5 * scale);
        prop_assert!(max_abs(&(&other.l_hat - &base.l_hat)) < 1e-5 * scale);
        // objectives differ exactly by the data scale
        let ratio = other.objective_trace.last().unwrap() / base.objective_trace.last().unwrap();
        prop_assert!((ratio / (c * c) - 1.0).abs() < 1e-6);
        prop_assert!(frob_inner(&base.a_hat, &other.a_hat) >= 0.0);
    }
}
