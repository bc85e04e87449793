//! Continuous and discrete Lyapunov solvers.
//!
//! Both reduce the coefficient matrix to real Schur form `A = U T Uᵀ` (with
//! `T` quasi-upper-triangular: 1×1 blocks for real eigenvalues, 2×2 blocks for
//! complex pairs) and back-substitute block by block, Bartels–Stewart style.
//! Each block is a Sylvester/Stein equation of size at most 2×2, solved through
//! its (at most 4×4) Kronecker form.

use nalgebra::linalg::Schur;

use super::matrix::{
    ensure_finite, ensure_square, spectral_abscissa, spectral_radius, Matrix,
};
use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 100_000;

/// `(start, size)` of each diagonal block of a quasi-triangular matrix.
fn schur_blocks(t: &Matrix) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}

fn real_schur(a: &Matrix) -> Result<(Matrix, Matrix)> {
    Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .map(Schur::unpack)
        .ok_or_else(|| Error::Numerical("real Schur decomposition did not converge".into()))
}

fn solve_small(kron: Matrix, rhs: &Matrix) -> Result<Matrix> {
    let (rows, cols) = rhs.shape();
    let b = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let x = kron
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular block in Schur back-substitution".into()))?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("singular block in Schur back-substitution".into()));
    }
    Ok(Matrix::from_column_slice(rows, cols, x.as_slice()))
}

/// Solves `T Y + Y Tᵀ = C` for quasi-upper-triangular `T`.
fn solve_schur_continuous(t: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = t.nrows();
    let blocks = schur_blocks(t);
    let mut y = Matrix::zeros(n, n);

    for &(js, jb) in blocks.iter().rev() {
        let je = js + jb;
        let tjj = t.view((js, js), (jb, jb)).into_owned();
        let tj_tail = t.view((js, je), (jb, n - je));
        for &(is, ib) in blocks.iter().rev() {
            let ie = is + ib;
            let tii = t.view((is, is), (ib, ib)).into_owned();

            let mut rhs = c.view((is, js), (ib, jb)).into_owned();
            rhs -= t.view((is, ie), (ib, n - ie)) * y.view((ie, js), (n - ie, jb));
            rhs -= y.view((is, je), (ib, n - je)) * tj_tail.transpose();

            let kron = Matrix::identity(jb, jb).kronecker(&tii)
                + tjj.kronecker(&Matrix::identity(ib, ib));
            let block = solve_small(kron, &rhs)?;
            y.view_mut((is, js), (ib, jb)).copy_from(&block);
        }
    }
    Ok(y)
}

/// Solves `T Y Tᵀ − Y = C` for quasi-upper-triangular `T`.
fn solve_schur_stein(t: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = t.nrows();
    let blocks = schur_blocks(t);
    let mut y = Matrix::zeros(n, n);

    for &(js, jb) in blocks.iter().rev() {
        let je = js + jb;
        let tjj = t.view((js, js), (jb, jb)).into_owned();
        let tj_tail = t.view((js, je), (jb, n - je)).into_owned();
        // z[k] = Σ_{l ≥ j} Y_kl T_jlᵀ, filled for row blocks already solved.
        let mut z = Matrix::zeros(n, jb);
        for &(is, ib) in blocks.iter().rev() {
            let ie = is + ib;
            let tii = t.view((is, is), (ib, ib)).into_owned();

            let partial = y.view((is, je), (ib, n - je)) * tj_tail.transpose();
            let mut rhs = c.view((is, js), (ib, jb)).into_owned();
            rhs -= t.view((is, ie), (ib, n - ie)) * z.view((ie, 0), (n - ie, jb));
            rhs -= &tii * &partial;

            let kron = tjj.kronecker(&tii) - Matrix::identity(ib * jb, ib * jb);
            let block = solve_small(kron, &rhs)?;
            y.view_mut((is, js), (ib, jb)).copy_from(&block);
            z.view_mut((is, 0), (ib, jb))
                .copy_from(&(partial + &block * tjj.transpose()));
        }
    }
    Ok(y)
}

fn symmetrize(m: Matrix) -> Matrix {
    (&m + m.transpose()) * 0.5
}

/// Solves `A X + X Aᵀ + C = 0` for Hurwitz-stable `A`.
pub fn solve_continuous_lyapunov_with(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    ensure_square(a, "Lyapunov coefficient")?;
    ensure_finite(a, "Lyapunov coefficient")?;
    if c.shape() != a.shape() {
        return Err(Error::Dimension("Lyapunov right-hand side shape".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let abscissa = spectral_abscissa(a);
    if abscissa >= 0.0 {
        return Err(Error::Precondition(format!(
            "continuous Lyapunov equation needs a stable matrix; spectral abscissa is {abscissa:e}"
        )));
    }
    let (u, t) = real_schur(a)?;
    let ct = u.transpose() * c * &u;
    let y = solve_schur_continuous(&t, &(-ct))?;
    Ok(&u * y * u.transpose())
}

/// Stationary covariance of `dX = A X dt + dW`: the solution of `A Q + Q Aᵀ + I = 0`.
pub fn solve_lyapunov_continuous(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let q = solve_continuous_lyapunov_with(a, &Matrix::identity(n, a.ncols()))?;
    Ok(symmetrize(q))
}

/// Solves `M X Mᵀ − X + C = 0` for Schur-stable `M` (spectral radius below one).
pub fn solve_stein_with(m: &Matrix, c: &Matrix) -> Result<Matrix> {
    ensure_square(m, "Stein coefficient")?;
    ensure_finite(m, "Stein coefficient")?;
    if c.shape() != m.shape() {
        return Err(Error::Dimension("Stein right-hand side shape".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let radius = spectral_radius(m);
    if radius >= 1.0 {
        return Err(Error::Precondition(format!(
            "discrete Lyapunov equation needs spectral radius < 1; got {radius}"
        )));
    }
    let (u, t) = real_schur(m)?;
    let ct = u.transpose() * c * &u;
    let y = solve_schur_stein(&t, &(-ct))?;
    Ok(&u * y * u.transpose())
}

/// Stationary covariance of `X(i+1) = (I + ηA) X(i) + w(i)`, `w ~ N(0, ηI)`:
/// the solution of `A Q + Q Aᵀ + η A Q Aᵀ + I = 0`.
pub fn solve_lyapunov_discrete(a: &Matrix, eta: f64) -> Result<Matrix> {
    ensure_square(a, "Lyapunov coefficient")?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sampling step must be positive, got {eta}"
        )));
    }
    let n = a.nrows();
    // (I + ηA) Q (I + ηA)ᵀ − Q + ηI = η (A Q + Q Aᵀ + η A Q Aᵀ + I)
    let m = Matrix::identity(n, n) + a * eta;
    let q = solve_stein_with(&m, &(Matrix::identity(n, n) * eta))?;
    Ok(symmetrize(q))
}

/// `‖A Q + Q Aᵀ + I‖_F`.
pub fn continuous_residual(a: &Matrix, q: &Matrix) -> f64 {
    let n = a.nrows();
    (a * q + q * a.transpose() + Matrix::identity(n, n)).norm()
}

/// `‖A Q + Q Aᵀ + η A Q Aᵀ + I‖_F`.
pub fn discrete_residual(a: &Matrix, q: &Matrix, eta: f64) -> f64 {
    let n = a.nrows();
    (a * q + q * a.transpose() + a * q * a.transpose() * eta + Matrix::identity(n, n)).norm()
}
