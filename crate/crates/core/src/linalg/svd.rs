use super::matrix::{ensure_finite, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U diag(S) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (k, sk) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(*sk);
        }
        us * self.v.transpose()
    }
}

/// One-sided (Hestenes) Jacobi on the columns of a tall matrix. Returns the
/// rotated columns `W = M V` (mutually orthogonal) and the accumulated `V`.
fn hestenes(mut w: Matrix, mut v: Matrix) -> Result<(Matrix, Matrix)> {
    let n = w.ncols();
    // columns this small are numerically zero; rotating them never settles
    let negligible = (f64::EPSILON * w.norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta, gamma) = {
                    let ci = w.column(i);
                    let cj = w.column(j);
                    (ci.norm_squared(), cj.norm_squared(), ci.dot(&cj))
                };
                if alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for row in 0..m.nrows() {
                        let (a, b) = (m[(row, i)], m[(row, j)]);
                        m[(row, i)] = c * a - s * b;
                        m[(row, j)] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            return Ok((w, v));
        }
    }
    Err(Error::Numerical(format!(
        "svd did not converge within {MAX_SWEEPS} sweeps"
    )))
}

/// Extends orthonormal columns `q[.., ..k]` with the standard basis vector
/// least represented in their span, written to column `k`.
fn complete_column(q: &mut Matrix, k: usize) {
    let rows = q.nrows();
    let mut best = (f64::NEG_INFINITY, Matrix::zeros(rows, 1));
    for e in 0..rows {
        let mut cand = Matrix::zeros(rows, 1);
        cand[(e, 0)] = 1.0;
        for _ in 0..2 {
            for prev in 0..k {
                let proj = q.column(prev).dot(&cand.column(0));
                cand -= q.column(prev) * proj;
            }
        }
        let norm = cand.norm();
        if norm > best.0 {
            best = (norm, cand / norm);
        }
    }
    q.set_column(k, &best.1.column(0));
}

/// Thin SVD with singular values sorted non-increasing. Each pair of singular
/// vectors is oriented so that the largest-magnitude entry of the `U` column is
/// positive (first such entry on ties), which makes the factors deterministic.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    ensure_finite(m, "svd input")?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdResult {
            u: Matrix::zeros(rows, 0),
            s: Vec::new(),
            v: Matrix::zeros(cols, 0),
        });
    }
    // Jacobi works on columns, so make the input tall.
    let wide = rows < cols;
    let tall = if wide { m.transpose() } else { m.clone() };
    let n = tall.ncols();
    let (w, rot) = hestenes(tall, Matrix::identity(n, n))?;
    Ok(assemble(w, rot, wide))
}

/// SVD of a tall or square matrix, starting the Jacobi sweeps from `basis`,
/// an orthogonal guess for the right singular vectors (typically those of a
/// nearby matrix). Converges in one or two sweeps when the guess is good.
pub fn svd_warm(m: &Matrix, basis: &Matrix) -> Result<SvdResult> {
    ensure_finite(m, "svd input")?;
    let (rows, cols) = m.shape();
    if rows < cols || basis.shape() != (cols, cols) || cols == 0 {
        return svd(m);
    }
    // re-orthonormalize so rounding does not accumulate across calls
    let q = basis.clone().qr().q();
    let (w, rot) = hestenes(m * &q, q)?;
    Ok(assemble(w, rot, false))
}

fn assemble(w: Matrix, rot: Matrix, wide: bool) -> SvdResult {
    let k = w.ncols();

    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let smax = norms[order[0]];
    let tiny = smax * f64::EPSILON * k as f64;

    let tall_rows = w.nrows();
    let mut left = Matrix::zeros(tall_rows, k);
    let mut right = Matrix::zeros(k, k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &rot.column(src));
        s.push(norms[src]);
        if norms[src] > tiny && norms[src] > 0.0 {
            left.set_column(dst, &(w.column(src) / norms[src]));
        } else {
            complete_column(&mut left, dst);
        }
    }
    let (mut u, mut v) = if wide { (right, left) } else { (left, right) };

    for c in 0..k {
        let col = u.column(c);
        let mut pivot = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    SvdResult { u, s, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn orthonormality_gap(q: &Matrix) -> f64 {
        (q.transpose() * q - Matrix::identity(q.ncols(), q.ncols())).norm()
    }

    #[test]
    fn identity() {
        let r = svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(r.s, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_with_negative_entry() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -2.0]));
        let r = svd(&m).unwrap();
        assert!((r.s[0] - 3.0).abs() < 1e-14);
        assert!((r.s[1] - 2.0).abs() < 1e-14);
        assert!((r.reconstruct() - m).norm() < 1e-13);
        // sign convention: dominant U entry positive, so V absorbs the sign
        assert!(r.u[(1, 1)] > 0.0);
        assert!(r.v[(1, 1)] < 0.0);
    }

    #[test]
    fn random_rectangular_reconstruction() {
        let mut rng = SeededRng::new(11);
        for (rows, cols) in [(5, 4), (4, 5), (7, 7)] {
            let m = Matrix::from_fn(rows, cols, |_, _| rng.standard_normal());
            let r = svd(&m).unwrap();
            let rel = (r.reconstruct() - &m).norm() / m.norm();
            assert!(rel < 1e-8, "relative reconstruction error {rel}");
            assert!(orthonormality_gap(&r.u) < 1e-10);
            assert!(orthonormality_gap(&r.v) < 1e-10);
            assert!(r.s.windows(2).all(|w| w[0] >= w[1]));
            for k in 0..r.s.len() {
                let col = r.u.column(k);
                let imax = col.iamax();
                assert!(col[imax] > 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient() {
        for n in 2..9 {
            let m = Matrix::from_element(n, n, 1.0 / n as f64);
            let r = svd(&m).unwrap();
            assert!((r.s[0] - 1.0).abs() < 1e-14, "n={n} {:?}", r.s);
            assert!(r.s[1..].iter().all(|&s| s < 1e-14));
            assert!(orthonormality_gap(&r.u) < 1e-12);
            assert!(orthonormality_gap(&r.v) < 1e-12);
            assert!((r.reconstruct() - &m).norm() < 1e-14);
            let e = 1.0 / (n as f64).sqrt();
            assert!(r.u.column(0).iter().all(|&x| (x - e).abs() < 1e-14));
        }
        let z = svd(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(z.s, vec![0.0, 0.0]);
        assert!(orthonormality_gap(&z.u) < 1e-15);
    }

    #[test]
    fn warm_start_matches_cold() {
        let mut rng = SeededRng::new(5);
        let m = Matrix::from_fn(6, 6, |_, _| rng.standard_normal());
        let cold = svd(&m).unwrap();
        let nudged = &m + Matrix::from_fn(6, 6, |_, _| 1e-3 * rng.standard_normal());
        let warm = svd_warm(&nudged, &cold.v).unwrap();
        let reference = svd(&nudged).unwrap();
        for (a, b) in warm.s.iter().zip(&reference.s) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((warm.reconstruct() - &nudged).norm() < 1e-12);
        assert!(orthonormality_gap(&warm.v) < 1e-12);
        // a useless basis still gives a correct answer
        let warm = svd_warm(&m, &Matrix::identity(6, 6)).unwrap();
        assert!((warm.reconstruct() - &m).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = f64::INFINITY;
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }
}
