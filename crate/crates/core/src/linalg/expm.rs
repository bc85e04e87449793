//! Matrix exponential by scaling and squaring around a diagonal Padé core.
//!
//! Degree selection follows Higham's backward-error bounds on the 1-norm:
//! the smallest of degrees 3, 5, 7, 9 whose threshold covers `‖M‖₁` is used
//! directly, otherwise `M` is scaled by `2^-s` into the degree-13 region and
//! the result squared `s` times.

use super::matrix::{ensure_finite, ensure_square, Matrix};
use crate::error::{Error, Result};

const PADE_THRESHOLDS: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

/// Largest scaling exponent tried before declaring the input out of range.
const MAX_SQUARINGS: i32 = 1100;

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Coefficients `b_j = (2m-j)! m! / ((2m)! j! (m-j)!)` of the degree-`m`
/// diagonal Padé approximant to `e^x`.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut b = vec![1.0; m + 1];
    for j in 1..=m {
        // b_j / b_{j-1} = (m - j + 1) / (j (2m - j + 1))
        b[j] = b[j - 1] * (m - j + 1) as f64 / (j as f64 * (2 * m - j + 1) as f64);
    }
    b
}

fn pade_approximant(a: &Matrix, degree: usize) -> Result<Matrix> {
    let n = a.nrows();
    let b = pade_coefficients(degree);
    let a2 = a * a;

    // Even powers A^0, A^2, ..., A^{degree-1}.
    let mut even_powers = vec![Matrix::identity(n, n)];
    for k in 1..=(degree / 2) {
        let next = &even_powers[k - 1] * &a2;
        even_powers.push(next);
    }

    let mut u_inner = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for (k, pow) in even_powers.iter().enumerate() {
        let even = 2 * k;
        let odd = 2 * k + 1;
        if even <= degree {
            v += pow * b[even];
        }
        if odd <= degree {
            u_inner += pow * b[odd];
        }
    }
    let u = a * u_inner;

    let numerator = &v + &u;
    let denominator = &v - &u;
    denominator
        .lu()
        .solve(&numerator)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))
}

/// `e^M` for a square matrix.
pub fn matrix_exponential(m: &Matrix) -> Result<Matrix> {
    ensure_square(m, "matrix_exponential input")?;
    ensure_finite(m, "matrix_exponential input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let norm = one_norm(m);
    for &(degree, theta) in &PADE_THRESHOLDS[..4] {
        if norm <= theta {
            return pade_approximant(m, degree);
        }
    }

    let theta13 = PADE_THRESHOLDS[4].1;
    let squarings = ((norm / theta13).log2().ceil() as i32).max(0);
    if squarings > MAX_SQUARINGS {
        return Err(Error::Overflow(format!(
            "‖M‖₁ = {norm:e} is beyond the representable range of the exponential"
        )));
    }
    let scaled = m * 2f64.powi(-squarings);
    let mut r = pade_approximant(&scaled, 13)?;
    for _ in 0..squarings {
        r = &r * &r;
    }

    if r.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(Error::Overflow(
            "matrix exponential entries exceed the floating-point range".into(),
        ))
    }
}
