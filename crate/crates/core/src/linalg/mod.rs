//! Dense real-matrix primitives: SVD, matrix exponential, Lyapunov solvers and
//! the proximal maps of the ℓ₁ and nuclear norms.

mod expm;
mod lyapunov;
mod matrix;
mod prox;
mod svd;

pub use expm::matrix_exponential;
pub use lyapunov::{
    continuous_residual, discrete_residual, solve_continuous_lyapunov_with,
    solve_lyapunov_continuous, solve_lyapunov_discrete, solve_stein_with,
};
pub use matrix::{
    ensure_finite, ensure_square, entry_l1, frob_inner, from_row_major, from_rows, max_abs,
    max_row_l1, nested, spectral_abscissa, spectral_norm, spectral_radius,
    sym_eigen_extremes, to_rows, Matrix,
};
pub use prox::{nuclear_norm, prox_l1, prox_nuclear, prox_nuclear_warm, NuclearProx};
pub use svd::{svd, svd_warm, SvdResult};
