//! Dense real matrices and the handful of norms the rest of the crate needs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense real matrix. Storage is nalgebra's column-major `DMatrix`; row-major
/// construction and nested-array serialization are provided here.
pub type Matrix = DMatrix<f64>;

/// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m, "matrix entries")?;
    Ok(m)
}

/// Builds a matrix from nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged rows".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    from_row_major(nrows, ncols, &flat)
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Entrywise max-abs norm `‖M‖_∞`.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Entrywise ℓ1 norm `‖M‖_1`.
pub fn entry_l1(m: &Matrix) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Maximum row ℓ1 norm `‖M‖_{∞,1}`.
pub fn max_row_l1(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius inner product `trace(Aᵀ B)`.
pub fn frob_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Extreme eigenvalues `(λ_min, λ_max)` of the symmetric part of `m`.
pub fn sym_eigen_extremes(m: &Matrix) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let vals = SymmetricEigen::new(sym).eigenvalues;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    super::svd::svd(m).map_or(f64::NAN, |d| d.s[0])
}

/// Largest real part over the eigenvalues of a square matrix.
pub fn spectral_abscissa(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Serde adapter storing a matrix as an array of row arrays.
pub mod nested {
    use super::{from_rows, to_rows, Matrix};
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let m = from_row_major(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m[(0, 2)], 3.0);
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(to_rows(&m), vec![vec![1., 2., 3.], vec![4., 5., 6.]]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            from_row_major(2, 2, &[1., 2., 3.]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            from_row_major(1, 2, &[1., f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn norms() {
        let m = from_row_major(2, 2, &[1., -3., 2., 0.5]).unwrap();
        assert_eq!(max_abs(&m), 3.0);
        assert_eq!(entry_l1(&m), 6.5);
        assert_eq!(max_row_l1(&m), 4.0);
        let (lo, hi) = sym_eigen_extremes(&Matrix::from_diagonal_element(3, 3, -2.0));
        assert!((lo + 2.0).abs() < 1e-14 && (hi + 2.0).abs() < 1e-14);
    }
}
