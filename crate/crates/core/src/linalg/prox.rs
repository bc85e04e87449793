use super::matrix::Matrix;
use super::svd::{svd, svd_warm, SvdResult};
use crate::error::Result;

/// Entrywise soft threshold `sign(m)·max(|m| − τ, 0)`; the proximal map of `τ‖·‖₁`.
pub fn prox_l1(m: &Matrix, tau: f64) -> Matrix {
    debug_assert!(tau >= 0.0);
    m.map(|v| {
        let shrunk = v.abs() - tau;
        if shrunk > 0.0 {
            shrunk.copysign(v)
        } else {
            0.0
        }
    })
}

/// Output of singular value thresholding.
#[derive(Debug, Clone)]
pub struct NuclearProx {
    pub matrix: Matrix,
    /// Number of singular values that survived the threshold.
    pub rank: usize,
    /// `‖matrix‖_*`, the sum of the surviving shrunken singular values.
    pub nuclear_norm: f64,
}

/// Singular value soft threshold; the proximal map of `τ‖·‖_*`.
pub fn prox_nuclear(m: &Matrix, tau: f64) -> Result<NuclearProx> {
    debug_assert!(tau >= 0.0);
    Ok(shrink(&svd(m)?, m.shape(), tau))
}

/// [`prox_nuclear`] reusing the right singular vectors of a previous call as
/// the starting basis; `basis` is updated in place. Iterative solvers call the
/// prox on slowly changing matrices, where this is several times faster.
pub fn prox_nuclear_warm(m: &Matrix, tau: f64, basis: &mut Option<Matrix>) -> Result<NuclearProx> {
    debug_assert!(tau >= 0.0);
    let dec = match basis.as_ref() {
        Some(b) => svd_warm(m, b)?,
        None => svd(m)?,
    };
    let out = shrink(&dec, m.shape(), tau);
    if dec.v.is_square() {
        *basis = Some(dec.v);
    }
    Ok(out)
}

fn shrink(dec: &SvdResult, shape: (usize, usize), tau: f64) -> NuclearProx {
    let m_shape = shape;
    let mut out = Matrix::zeros(m_shape.0, m_shape.1);
    let mut rank = 0;
    let mut nuclear_norm = 0.0;
    for (k, &sigma) in dec.s.iter().enumerate() {
        let shrunk = sigma - tau;
        if shrunk <= 0.0 {
            // sorted, nothing further survives
            break;
        }
        rank += 1;
        nuclear_norm += shrunk;
        out += dec.u.column(k) * (dec.v.column(k).transpose() * shrunk);
    }
    NuclearProx {
        matrix: out,
        rank,
        nuclear_norm,
    }
}

/// `‖M‖_*`.
pub fn nuclear_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    super::svd::svd(m).map_or(f64::NAN, |d| d.s.iter().sum())
}
