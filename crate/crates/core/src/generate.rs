//! Ground-truth systems: a seeded random ensemble and a closed-form block example.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::SystemParams;
use crate::rng::SeededRng;

fn default_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub p: usize,
    pub r: usize,
    /// Off-diagonal nonzeros per row of `A`.
    pub s: usize,
    pub seed: u64,
    /// Extra Geršgorin slack added to every diagonal entry.
    #[serde(default = "default_margin")]
    pub diag_margin: f64,
    #[serde(default)]
    pub eta: f64,
    /// Off-diagonal `A` values are standard normals conditioned on
    /// `|v| ≥ min_magnitude`; zero keeps them unconditioned.
    #[serde(default)]
    pub min_magnitude: f64,
}

impl GenSpec {
    pub fn new(p: usize, r: usize, s: usize, seed: u64) -> Self {
        Self {
            p,
            r,
            s,
            seed,
            diag_margin: default_margin(),
            eta: 0.0,
            min_magnitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Construction("p must be positive".into()));
        }
        if self.s >= self.p {
            return Err(Error::Construction(format!(
                "need s < p, got s = {} and p = {}",
                self.s, self.p
            )));
        }
        if self.r > 0 {
            if (2 * self.p) % self.r != 0 {
                return Err(Error::Construction(format!(
                    "r = {} does not divide 2p = {}",
                    self.r,
                    2 * self.p
                )));
            }
            if self.r < 2 {
                return Err(Error::Construction(
                    "each observed row needs two distinct latent parents, so r ≥ 2".into(),
                ));
            }
        }
        if !(self.diag_margin > 0.0 && self.diag_margin.is_finite()) {
            return Err(Error::Construction(format!(
                "diag_margin must be positive, got {}",
                self.diag_margin
            )));
        }
        if !(0.0..=MAX_MIN_MAGNITUDE).contains(&self.min_magnitude) {
            return Err(Error::Construction(format!(
                "min_magnitude must lie in [0, {MAX_MIN_MAGNITUDE}], got {}",
                self.min_magnitude
            )));
        }
        Ok(())
    }
}

// rejection sampling keeps ~0.3% of draws at this floor
const MAX_MIN_MAGNITUDE: f64 = 3.0;

fn floored_normal(rng: &mut SeededRng, floor: f64) -> f64 {
    loop {
        let v = rng.standard_normal();
        if v.abs() >= floor {
            return v;
        }
    }
}

/// Assigns each of `p` rows two distinct columns out of `r` so that every column
/// is used exactly `2p/r` times.
fn balanced_assignment(p: usize, r: usize, rng: &mut SeededRng) -> Result<Vec<[usize; 2]>> {
    let per_column = 2 * p / r;
    let mut pool: Vec<usize> = (0..r).flat_map(|k| std::iter::repeat_n(k, per_column)).collect();
    const RESHUFFLES: usize = 100;
    for _ in 0..RESHUFFLES {
        rng.shuffle(&mut pool);
        let mut rows: Vec<[usize; 2]> = pool.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        if repair(&mut rows, rng) {
            return Ok(rows);
        }
    }
    Err(Error::Construction(format!(
        "could not balance latent assignment for p = {p}, r = {r}"
    )))
}

/// Removes duplicate pairs by swapping one copy with an entry of another row.
/// Swaps preserve column counts. Returns false if some duplicate could not be
/// fixed.
fn repair(rows: &mut [[usize; 2]], rng: &mut SeededRng) -> bool {
    let n = rows.len();
    for i in 0..n {
        let [a, b] = rows[i];
        if a != b {
            continue;
        }
        let start = rng.below(n);
        let mut fixed = false;
        for off in 0..n {
            let j = (start + off) % n;
            if j == i {
                continue;
            }
            for slot in 0..2 {
                let c = rows[j][slot];
                let other = rows[j][1 - slot];
                if c != a && other != a {
                    rows[i][1] = c;
                    rows[j][slot] = a;
                    fixed = true;
                    break;
                }
            }
            if fixed {
                break;
            }
        }
        if !fixed {
            return false;
        }
    }
    true
}

/// Random sparse system: `A` gets `s` off-diagonal Gaussian entries per row,
/// each observed variable has two latent parents with a balanced column
/// degree of `2p/r`, `C = 0`, `D` diagonal. Diagonals are then made negative
/// enough that the symmetric part of the joint matrix has all eigenvalues at
/// most `−diag_margin`.
pub fn gen_random_system(spec: &GenSpec) -> Result<SystemParams> {
    spec.validate()?;
    let (p, r, s) = (spec.p, spec.r, spec.s);
    let mut rng = SeededRng::new(spec.seed);

    let mut a = Matrix::zeros(p, p);
    let mut candidates: Vec<usize> = Vec::with_capacity(p.saturating_sub(1));
    for i in 0..p {
        candidates.clear();
        candidates.extend((0..p).filter(|&j| j != i));
        // partial Fisher–Yates: the first s slots become the support
        for k in 0..s {
            let pick = k + rng.below(candidates.len() - k);
            candidates.swap(k, pick);
        }
        for &j in &candidates[..s] {
            a[(i, j)] = floored_normal(&mut rng, spec.min_magnitude);
        }
    }

    let mut b = Matrix::zeros(p, r);
    if r > 0 {
        let parents = balanced_assignment(p, r, &mut rng)?;
        for (i, pair) in parents.iter().enumerate() {
            for &k in pair {
                b[(i, k)] = rng.standard_normal();
            }
        }
    }
    let c = Matrix::zeros(r, p);
    let mut d = Matrix::zeros(r, r);

    // Bound on the quadratic form of the symmetric part: an A pair contributes
    // at most (|a_ij| + |a_ji|)/2·(x_i² + x_j²)/2 and a B entry at most
    // |b_ik|/2·(t·x_i² + u_k²/t). Diagonals dominating those coefficients plus
    // the margin give λ_max ≤ −margin. The weight t balances the worst observed
    // and latent loads; t = 1 would hand each latent half of its column mass.
    let b_rows = (0..p).map(|i| b.row(i).iter().map(|v| v.abs()).sum::<f64>());
    let b_cols: Vec<f64> = (0..r).map(|k| b.column(k).iter().map(|v| v.abs()).sum()).collect();
    let max_row = b_rows.clone().fold(0.0, f64::max);
    let max_col = b_cols.iter().copied().fold(0.0, f64::max);
    let t = if max_row > 0.0 && max_col > 0.0 { (max_col / max_row).sqrt() } else { 1.0 };
    for (i, b_row) in b_rows.enumerate() {
        let row: f64 = a.row(i).iter().map(|v| v.abs()).sum();
        let col: f64 = a.column(i).iter().map(|v| v.abs()).sum();
        a[(i, i)] = -(row + col) / 2.0 - t * b_row / 2.0 - spec.diag_margin;
    }
    for (k, col) in b_cols.iter().enumerate() {
        d[(k, k)] = -col / (2.0 * t) - spec.diag_margin;
    }

    SystemParams::new(a, b, c, d, spec.eta)
}

/// Block example: `A = −I`, `D = −I`, `C = 0`, and latent `k` drives observed
/// variables `k·p/r .. (k+1)·p/r` with unit weight.
pub fn gen_illustrative(p: usize, r: usize) -> Result<SystemParams> {
    if p == 0 || r == 0 || r > p || p % r != 0 {
        return Err(Error::Construction(format!(
            "illustrative system needs 1 ≤ r ≤ p with r | p, got p = {p}, r = {r}"
        )));
    }
    let block = p / r;
    let mut b = Matrix::zeros(p, r);
    for i in 0..p {
        b[(i, i / block)] = 1.0;
    }
    SystemParams::new(
        -Matrix::identity(p, p),
        b,
        Matrix::zeros(r, p),
        -Matrix::identity(r, r),
        0.0,
    )
}
