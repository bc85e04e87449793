use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::Trajectory;

/// Everything the least-squares loss needs from a path `x(0..=n)`:
/// `S1 = (1/n) Σ x(i)x(i)ᵀ`, `S2 = (1/(ηn)) Σ (x(i+1) − x(i)) x(i)ᵀ` and
/// `Σ ‖x(i+1) − x(i)‖²`, with sums over `i = 0..n−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    s1: Matrix,
    s2: Matrix,
    sq_increment_sum: f64,
    n: usize,
    eta: f64,
}

impl SufficientStats {
    pub fn from_parts(s1: Matrix, s2: Matrix, sq_increment_sum: f64, n: usize, eta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("statistics need at least one transition".into()));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!("sampling step must be positive, got {eta}")));
        }
        if !s1.is_square() || s1.shape() != s2.shape() {
            return Err(Error::Dimension("S1 and S2 must be square and of equal size".into()));
        }
        crate::linalg::ensure_finite(&s1, "S1")?;
        crate::linalg::ensure_finite(&s2, "S2")?;
        Ok(Self { s1, s2, sq_increment_sum, n, eta })
    }

    /// Statistics of the columns of `x` (one column per sample).
    pub fn from_columns(x: &Matrix, eta: f64) -> Result<Self> {
        let mut acc = StatsAccumulator::new(x.nrows(), eta);
        for col in x.column_iter() {
            acc.push(col.as_slice());
        }
        acc.finish()
    }

    pub fn p(&self) -> usize {
        self.s1.nrows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn s1(&self) -> &Matrix {
        &self.s1
    }

    pub fn s2(&self) -> &Matrix {
        &self.s2
    }

    pub fn sq_increment_sum(&self) -> f64 {
        self.sq_increment_sum
    }

    /// `(1/(2η²n)) Σ ‖x(i+1) − x(i)‖²`, the loss at `A + L = 0`.
    pub fn loss_constant(&self) -> f64 {
        self.sq_increment_sum / (2.0 * self.eta * self.eta * self.n as f64)
    }

    /// Pools two sets of statistics (e.g. disjoint chunks of one path).
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.p() != other.p() || self.eta != other.eta {
            return Err(Error::Dimension("cannot merge statistics of different shape or step".into()));
        }
        let n = self.n + other.n;
        let (wa, wb) = (self.n as f64 / n as f64, other.n as f64 / n as f64);
        Ok(Self {
            s1: &self.s1 * wa + &other.s1 * wb,
            s2: &self.s2 * wa + &other.s2 * wb,
            sq_increment_sum: self.sq_increment_sum + other.sq_increment_sum,
            n,
            eta: self.eta,
        })
    }
}

const BLOCK: usize = 256;

/// Streaming reduction of a path to [`SufficientStats`]. Samples are buffered in
/// blocks so the outer products run as matrix products; summation order is
/// fixed by the block size, so results are reproducible.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    p: usize,
    eta: f64,
    buf: Matrix,
    len: usize,
    sxx: Matrix,
    sdx: Matrix,
    sq: f64,
    n: usize,
}

impl StatsAccumulator {
    pub fn new(p: usize, eta: f64) -> Self {
        Self {
            p,
            eta,
            buf: Matrix::zeros(p, BLOCK + 1),
            len: 0,
            sxx: Matrix::zeros(p, p),
            sdx: Matrix::zeros(p, p),
            sq: 0.0,
            n: 0,
        }
    }

    pub fn push(&mut self, sample: &[f64]) {
        debug_assert_eq!(sample.len(), self.p);
        self.buf.column_mut(self.len).copy_from_slice(sample);
        self.len += 1;
        if self.len == BLOCK + 1 {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.len < 2 {
            return;
        }
        let k = self.len - 1;
        let x = self.buf.columns(0, k);
        let dx = self.buf.columns(1, k) - x;
        let xt = x.transpose();
        self.sxx.gemm(1.0, &x, &xt, 1.0);
        self.sdx.gemm(1.0, &dx, &xt, 1.0);
        self.sq += dx.norm_squared();
        self.n += k;
        let last = self.buf.column(k).into_owned();
        self.buf.set_column(0, &last);
        self.len = 1;
    }

    pub fn finish(mut self) -> Result<SufficientStats> {
        self.flush();
        if self.n == 0 {
            return Err(Error::InvalidArgument("statistics need at least one transition".into()));
        }
        let n = self.n as f64;
        SufficientStats::from_parts(
            self.sxx / n,
            self.sdx / (self.eta * n),
            self.sq,
            self.n,
            self.eta,
        )
    }
}

pub fn sufficient_stats(traj: &Trajectory) -> Result<SufficientStats> {
    SufficientStats::from_columns(&traj.x, traj.eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_row_major;
    use crate::rng::SeededRng;

    #[test]
    fn single_transition() {
        let x = from_row_major(2, 2, &[1.0, 2.0, -1.0, 0.5]).unwrap();
        let st = SufficientStats::from_columns(&x, 0.5).unwrap();
        assert_eq!(st.n(), 1);
        let x0 = x.column(0);
        let dx = x.column(1) - x0;
        assert_eq!(st.s1(), &(x0 * x0.transpose()));
        assert_eq!(st.s2(), &(&dx * x0.transpose() / 0.5));
        assert_eq!(st.sq_increment_sum(), dx.norm_squared());
    }

    #[test]
    fn blocks_and_merges_agree_with_direct_sums() {
        let mut rng = SeededRng::new(3);
        let n = 3 * BLOCK + 17;
        let x = Matrix::from_fn(3, n + 1, |_, _| rng.standard_normal());
        let st = SufficientStats::from_columns(&x, 0.2).unwrap();
        let mut s1 = Matrix::zeros(3, 3);
        let mut s2 = Matrix::zeros(3, 3);
        for i in 0..n {
            let xi = x.column(i);
            s1 += xi * xi.transpose();
            s2 += (x.column(i + 1) - xi) * xi.transpose();
        }
        assert!((st.s1() - s1 / n as f64).norm() < 1e-12);
        assert!((st.s2() - s2 / (0.2 * n as f64)).norm() < 1e-12);

        // chunks sharing their boundary sample pool to the whole
        let left = SufficientStats::from_columns(&x.columns(0, 401).into_owned(), 0.2).unwrap();
        let right = SufficientStats::from_columns(&x.columns(400, n + 1 - 400).into_owned(), 0.2).unwrap();
        let pooled = left.merge(&right).unwrap();
        assert_eq!(pooled.n(), n);
        assert!((pooled.s1() - st.s1()).norm() < 1e-12);
        assert!((pooled.s2() - st.s2()).norm() < 1e-12);
        assert!((pooled.sq_increment_sum() - st.sq_increment_sum()).abs() < 1e-9);
    }

    #[test]
    fn needs_a_transition() {
        assert!(SufficientStats::from_columns(&Matrix::zeros(2, 1), 0.1).is_err());
    }
}
