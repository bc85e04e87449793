//! Sample paths of the discrete and continuous systems, and their reduction to
//! sufficient statistics.

mod io;
mod stats;

pub use io::{read_trajectory_csv, write_trajectory_csv};
pub use stats::{sufficient_stats, SufficientStats, StatsAccumulator};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    matrix_exponential, solve_lyapunov_continuous, solve_lyapunov_discrete, spectral_abscissa,
    spectral_radius, Matrix,
};
use crate::model::SystemParams;
use crate::rng::SeededRng;

/// States beyond this Euclidean norm are treated as a numerical blow-up.
pub const DIVERGENCE_NORM: f64 = 1e10;

/// Bins per sampling interval in the default continuous mode.
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ContinuousMode {
    /// The Brownian path is held constant on `bins` sub-intervals of each step.
    Binned { bins: usize },
    /// Exact Gaussian transition of the Ornstein–Uhlenbeck flow.
    Exact,
}

impl Default for ContinuousMode {
    fn default() -> Self {
        ContinuousMode::Binned { bins: DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialCondition {
    #[default]
    Zero,
    /// A draw from the stationary Gaussian of the chain, which removes burn-in.
    Stationary,
    Given { x0: Vec<f64>, u0: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Number of transitions; the path holds `n + 1` observed vectors.
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: InitialCondition,
    /// Transitions simulated and discarded before `x(0)`.
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub keep_latent: bool,
}

impl SimOptions {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            init: InitialCondition::Zero,
            burn_in: 0,
            keep_latent: false,
        }
    }
}

/// Observed (and optionally latent) path sampled every `eta` time units.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `p × (n+1)`; column `i` is `x(i)`.
    pub x: Matrix,
    /// `r × (n+1)` when retained.
    pub u: Option<Matrix>,
    pub eta: f64,
}

impl Trajectory {
    pub fn new(x: Matrix, u: Option<Matrix>, eta: f64) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::Dimension("trajectory has no samples".into()));
        }
        if let Some(u) = &u {
            if u.ncols() != x.ncols() {
                return Err(Error::Dimension("latent and observed paths differ in length".into()));
            }
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling step must be positive, got {eta}")));
        }
        crate::linalg::ensure_finite(&x, "trajectory")?;
        Ok(Self { x, u, eta })
    }

    pub fn p(&self) -> usize {
        self.x.nrows()
    }

    /// Number of transitions.
    pub fn n(&self) -> usize {
        self.x.ncols() - 1
    }

    /// `T = nη`.
    pub fn horizon(&self) -> f64 {
        self.n() as f64 * self.eta
    }
}

#[derive(Debug, Clone)]
enum Noise {
    /// `σ · z`
    Isotropic(f64),
    /// `F z` with `F` lower triangular
    Factor(Matrix),
}

/// One-step Gaussian transition `X ← M X + ξ`, `ξ ~ N(0, Σ)`, on the joint state.
#[derive(Debug, Clone)]
pub struct Simulator {
    transition: Matrix,
    noise: Noise,
    stationary: Matrix,
    state: DVector<f64>,
    scratch: DVector<f64>,
    draw: DVector<f64>,
    rng: SeededRng,
    p: usize,
    eta: f64,
    steps: usize,
}

fn cholesky_factor(cov: &Matrix, what: &str) -> Result<Matrix> {
    let sym = (cov + cov.transpose()) * 0.5;
    sym.cholesky()
        .map(|c| c.unpack())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

impl Simulator {
    /// Euler–Maruyama chain `X(i+1) = (I + η𝒜) X(i) + w(i)`, `w ~ N(0, ηI)`.
    pub fn discrete(params: &SystemParams, seed: u64) -> Result<Self> {
        let eta = params.eta;
        if eta <= 0.0 {
            return Err(Error::InvalidArgument(
                "discrete simulation needs a positive sampling step".into(),
            ));
        }
        let joint = params.joint();
        let dim = joint.nrows();
        let transition = Matrix::identity(dim, dim) + &joint * eta;
        let radius = spectral_radius(&transition);
        if radius >= 1.0 {
            return Err(Error::Precondition(format!(
                "discrete system is unstable: spectral radius of I + η𝒜 is {radius}"
            )));
        }
        let stationary = solve_lyapunov_discrete(&joint, eta)?;
        Ok(Self::assemble(transition, Noise::Isotropic(eta.sqrt()), stationary, params.p(), eta, seed))
    }

    /// Continuous system observed every `eta` time units.
    pub fn continuous(params: &SystemParams, eta: f64, mode: ContinuousMode, seed: u64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling step must be positive, got {eta}")));
        }
        let joint = params.joint();
        let abscissa = spectral_abscissa(&joint);
        if abscissa >= 0.0 {
            return Err(Error::Precondition(format!(
                "continuous system is unstable: spectral abscissa is {abscissa}"
            )));
        }
        let transition = matrix_exponential(&(&joint * eta))?;
        let cov = match mode {
            ContinuousMode::Exact => exact_increment_covariance(&joint, eta)?,
            ContinuousMode::Binned { bins } => binned_increment_covariance(&joint, eta, bins)?,
        };
        let factor = cholesky_factor(&cov, "increment covariance")?;
        let stationary = solve_lyapunov_continuous(&joint)?;
        Ok(Self::assemble(transition, Noise::Factor(factor), stationary, params.p(), eta, seed))
    }

    fn assemble(transition: Matrix, noise: Noise, stationary: Matrix, p: usize, eta: f64, seed: u64) -> Self {
        let dim = transition.nrows();
        Self {
            transition,
            noise,
            stationary,
            state: DVector::zeros(dim),
            scratch: DVector::zeros(dim),
            draw: DVector::zeros(dim),
            rng: SeededRng::new(seed),
            p,
            eta,
            steps: 0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    /// Joint state `[x; u]`.
    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn observed(&self) -> nalgebra::DVectorView<'_, f64> {
        self.state.rows(0, self.p)
    }

    pub fn initialize(&mut self, init: &InitialCondition) -> Result<()> {
        let dim = self.state.len();
        match init {
            InitialCondition::Zero => self.state.fill(0.0),
            InitialCondition::Stationary => {
                let factor = cholesky_factor(&self.stationary, "stationary covariance")?;
                for v in self.draw.iter_mut() {
                    *v = self.rng.standard_normal();
                }
                self.state.gemv(1.0, &factor, &self.draw, 0.0);
            }
            InitialCondition::Given { x0, u0 } => {
                if x0.len() + u0.len() != dim || x0.len() != self.p {
                    return Err(Error::Dimension(format!(
                        "initial condition has {}+{} entries, expected {}+{}",
                        x0.len(),
                        u0.len(),
                        self.p,
                        dim - self.p
                    )));
                }
                for (dst, src) in self.state.iter_mut().zip(x0.iter().chain(u0)) {
                    *dst = *src;
                }
                if !self.state.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("initial condition".into()));
                }
            }
        }
        Ok(())
    }

    /// Advances one step with the supplied increment `ξ` instead of a random draw.
    pub fn advance_with(&mut self, increment: &DVector<f64>) -> Result<()> {
        self.scratch.copy_from(increment);
        self.scratch.gemv(1.0, &self.transition, &self.state, 1.0);
        std::mem::swap(&mut self.state, &mut self.scratch);
        self.steps += 1;
        if !(self.state.norm() <= DIVERGENCE_NORM) {
            return Err(Error::Divergence { iteration: self.steps });
        }
        Ok(())
    }

    pub fn advance(&mut self) -> Result<()> {
        for v in self.draw.iter_mut() {
            *v = self.rng.standard_normal();
        }
        match &self.noise {
            Noise::Isotropic(sigma) => {
                let sigma = *sigma;
                self.scratch.copy_from(&self.draw);
                self.scratch.gemv(1.0, &self.transition, &self.state, sigma);
            }
            Noise::Factor(f) => {
                self.scratch.gemv(1.0, &self.transition, &self.state, 0.0);
                self.scratch.gemv(1.0, f, &self.draw, 1.0);
            }
        }
        std::mem::swap(&mut self.state, &mut self.scratch);
        self.steps += 1;
        if !(self.state.norm() <= DIVERGENCE_NORM) {
            return Err(Error::Divergence { iteration: self.steps });
        }
        Ok(())
    }

    /// Runs `opts` and keeps the path in memory.
    pub fn run(mut self, opts: &SimOptions) -> Result<Trajectory> {
        self.prepare(opts)?;
        let dim = self.state.len();
        let mut x = Matrix::zeros(self.p, opts.n + 1);
        let mut u = opts.keep_latent.then(|| Matrix::zeros(dim - self.p, opts.n + 1));
        for i in 0..=opts.n {
            if i > 0 {
                self.advance()?;
            }
            x.column_mut(i).copy_from(&self.state.rows(0, self.p));
            if let Some(u) = u.as_mut() {
                u.column_mut(i).copy_from(&self.state.rows(self.p, dim - self.p));
            }
        }
        Trajectory::new(x, u, self.eta)
    }

    /// Runs `opts` and reduces the path to sufficient statistics on the fly,
    /// without storing it.
    pub fn run_stats(mut self, opts: &SimOptions) -> Result<SufficientStats> {
        self.prepare(opts)?;
        let mut acc = StatsAccumulator::new(self.p, self.eta);
        acc.push(self.observed().as_slice());
        for _ in 0..opts.n {
            self.advance()?;
            acc.push(self.observed().as_slice());
        }
        acc.finish()
    }

    fn prepare(&mut self, opts: &SimOptions) -> Result<()> {
        self.rng = SeededRng::new(opts.seed);
        self.steps = 0;
        self.initialize(&opts.init)?;
        for _ in 0..opts.burn_in {
            self.advance()?;
        }
        Ok(())
    }
}

/// `G(η) = ∫₀^η e^{s𝒜} e^{s𝒜ᵀ} ds` via the Van Loan block exponential.
pub fn exact_increment_covariance(joint: &Matrix, eta: f64) -> Result<Matrix> {
    let n = joint.nrows();
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-joint * eta));
    block.view_mut((0, n), (n, n)).copy_from(&(Matrix::identity(n, n) * eta));
    block.view_mut((n, n), (n, n)).copy_from(&(joint.transpose() * eta));
    let e = matrix_exponential(&block)?;
    let f12 = e.view((0, n), (n, n));
    let f22 = e.view((n, n), (n, n));
    let g = f22.transpose() * f12;
    Ok((&g + g.transpose()) * 0.5)
}

/// Covariance of `Σ_k e^{𝒜(η−τ_k)} ΔW_k` with `τ_k = kη/K` and
/// `ΔW_k ~ N(0, (η/K) I)`.
pub fn binned_increment_covariance(joint: &Matrix, eta: f64, bins: usize) -> Result<Matrix> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin per step".into()));
    }
    let n = joint.nrows();
    let h = eta / bins as f64;
    let step = matrix_exponential(&(joint * h))?;
    // e^{𝒜(η−τ_k)} = step^{K−k}, k = 0..K−1, i.e. powers 1..K
    let mut power = step.clone();
    let mut cov = Matrix::zeros(n, n);
    for k in 0..bins {
        if k > 0 {
            power = &power * &step;
        }
        cov += &power * power.transpose();
    }
    cov *= h;
    Ok((&cov + cov.transpose()) * 0.5)
}

pub fn simulate_discrete(params: &SystemParams, opts: &SimOptions) -> Result<Trajectory> {
    Simulator::discrete(params, opts.seed)?.run(opts)
}

pub fn simulate_continuous(
    params: &SystemParams,
    eta: f64,
    mode: ContinuousMode,
    opts: &SimOptions,
) -> Result<Trajectory> {
    Simulator::continuous(params, eta, mode, opts.seed)?.run(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_illustrative;
    use crate::linalg::from_row_major;

    fn scalar(a: f64, eta: f64) -> SystemParams {
        SystemParams::new(
            from_row_major(1, 1, &[a]).unwrap(),
            Matrix::zeros(1, 0),
            Matrix::zeros(0, 1),
            Matrix::zeros(0, 0),
            eta,
        )
        .unwrap()
    }

    #[test]
    fn injected_discrete_step() {
        let sys = gen_illustrative(4, 2).unwrap().with_eta(0.1).unwrap();
        let mut sim = Simulator::discrete(&sys, 0).unwrap();
        let x0 = vec![1.0, -2.0, 0.5, 3.0];
        let u0 = vec![0.25, -1.0];
        sim.initialize(&InitialCondition::Given { x0: x0.clone(), u0: u0.clone() }).unwrap();
        let w = DVector::from_vec(vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        sim.advance_with(&w).unwrap();
        let joint = sys.joint();
        let start = DVector::from_iterator(6, x0.into_iter().chain(u0));
        let expected = (Matrix::identity(6, 6) + joint * 0.1) * start + w;
        // equal up to summation order inside the matrix-vector product
        assert!((sim.state() - &expected).amax() <= 4.0 * f64::EPSILON * expected.amax());
    }

    #[test]
    fn noise_free_continuous_step_is_the_flow() {
        let sys = gen_illustrative(4, 2).unwrap();
        let start = vec![1.0, 0.0, -1.0, 2.0];
        for mode in [ContinuousMode::Exact, ContinuousMode::Binned { bins: 10 }] {
            let mut sim = Simulator::continuous(&sys, 0.2, mode, 1).unwrap();
            sim.initialize(&InitialCondition::Given { x0: start.clone(), u0: vec![0.5, 0.5] })
                .unwrap();
            let before = sim.state().clone();
            sim.advance_with(&DVector::zeros(6)).unwrap();
            let flow = crate::oracle::taylor_expm(&(sys.joint() * 0.2), 40);
            assert!((sim.state() - flow * before).norm() < 1e-13);
        }
    }

    #[test]
    fn scalar_exact_increment_variance() {
        for eta in [0.01, 0.1, 1.0, 3.0] {
            let g = exact_increment_covariance(&from_row_major(1, 1, &[-1.0]).unwrap(), eta).unwrap();
            let want = (1.0 - (-2.0 * eta).exp()) / 2.0;
            assert!((g[(0, 0)] - want).abs() < 1e-12, "{eta}: {} vs {want}", g[(0, 0)]);
        }
    }

    #[test]
    fn binned_covariance_converges_linearly() {
        // diagonal 𝒜: per-coordinate closed forms for both covariances
        let a = Matrix::from_diagonal(&DVector::from_vec(vec![-0.5, -2.0, -4.0]));
        let eta = 0.5;
        let exact = exact_increment_covariance(&a, eta).unwrap();
        for (k, d) in [0.5, 2.0, 4.0].iter().enumerate() {
            assert!((exact[(k, k)] - (1.0 - (-2.0 * d * eta).exp()) / (2.0 * d)).abs() < 1e-13);
        }
        let gap = |bins| (binned_increment_covariance(&a, eta, bins).unwrap() - &exact).norm();
        let (g1, g10, g100) = (gap(1), gap(10), gap(100));
        assert!(g10 < g1 && g100 < g10);
        // O(η/K): a tenfold refinement shrinks the gap by close to ten
        assert!((g10 / g100 - 10.0).abs() < 1.0, "{g10} {g100}");
        let binned_closed = |d: f64, bins: usize| {
            let h = eta / bins as f64;
            (1..=bins).map(|j| (-2.0 * d * h * j as f64).exp()).sum::<f64>() * h
        };
        let b10 = binned_increment_covariance(&a, eta, 10).unwrap();
        assert!((b10[(1, 1)] - binned_closed(2.0, 10)).abs() < 1e-13);
    }

    #[test]
    fn scalar_discrete_variance_matches_closed_form() {
        let eta = 0.1;
        let opts = SimOptions::new(200_000, 5);
        let traj = simulate_discrete(&scalar(-1.0, eta), &opts).unwrap();
        let xs: Vec<f64> = traj.x.iter().copied().collect();
        let var = xs.iter().map(|v| v * v).sum::<f64>() / xs.len() as f64;
        let target = 1.0 / (2.0 - eta);
        // AR(1) with φ = 0.9: variance of the sample second moment inflates by (1+φ²)/(1−φ²)
        let phi: f64 = 1.0 - eta;
        let se = target * (2.0 * (1.0 + phi * phi) / (1.0 - phi * phi) / xs.len() as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target} ± {se}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let sys = gen_illustrative(4, 2).unwrap();
        let opts = SimOptions::new(50, 3);
        let a = simulate_continuous(&sys, 0.1, ContinuousMode::default(), &opts).unwrap();
        let b = simulate_continuous(&sys, 0.1, ContinuousMode::default(), &opts).unwrap();
        assert_eq!(a, b);
        let c = simulate_continuous(&sys, 0.1, ContinuousMode::default(), &SimOptions::new(50, 4)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.x.column(0).iter().copied().collect::<Vec<_>>(), vec![0.0; 4]);
    }

    #[test]
    fn latent_retention_and_burn_in() {
        let sys = gen_illustrative(4, 2).unwrap();
        let mut opts = SimOptions::new(10, 3);
        opts.keep_latent = true;
        let full = simulate_continuous(&sys, 0.1, ContinuousMode::Exact, &SimOptions { n: 15, ..opts.clone() }).unwrap();
        assert_eq!(full.u.as_ref().unwrap().shape(), (2, 16));
        opts.burn_in = 5;
        let tail = simulate_continuous(&sys, 0.1, ContinuousMode::Exact, &opts).unwrap();
        assert_eq!(tail.x, full.x.columns(5, 11).into_owned());
        assert_eq!(tail.n(), 10);
        assert!((tail.horizon() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stats_streaming_matches_stored_path() {
        let sys = gen_illustrative(4, 2).unwrap().with_eta(0.05).unwrap();
        let opts = SimOptions::new(1234, 9);
        let traj = simulate_discrete(&sys, &opts).unwrap();
        let streamed = Simulator::discrete(&sys, 9).unwrap().run_stats(&opts).unwrap();
        let stored = sufficient_stats(&traj).unwrap();
        assert!((streamed.s1() - stored.s1()).norm() < 1e-12);
        assert!((streamed.s2() - stored.s2()).norm() < 1e-12);
        assert!((streamed.sq_increment_sum() - stored.sq_increment_sum()).abs() < 1e-9);
    }

    #[test]
    fn instability_and_blow_up() {
        let unstable = scalar(0.5, 0.0);
        assert!(matches!(
            Simulator::continuous(&unstable, 0.1, ContinuousMode::Exact, 0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(Simulator::discrete(&scalar(-1.0, 0.0), 0), Err(Error::InvalidArgument(_))));
        let mut sim = Simulator::discrete(&scalar(-1.0, 0.5), 0).unwrap();
        sim.initialize(&InitialCondition::Given { x0: vec![1.0], u0: vec![] }).unwrap();
        let err = sim.advance_with(&DVector::from_element(1, 1e11)).unwrap_err();
        assert_eq!(err, Error::Divergence { iteration: 1 });
    }
}
