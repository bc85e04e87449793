//! Slow, independent reference implementations used only by tests.

use crate::linalg::Matrix;

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
pub fn gauss_solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut b = b.clone();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
        if a[(pivot, col)].abs() < 1e-300 {
            return None;
        }
        a.swap_rows(col, pivot);
        b.swap_rows(col, pivot);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[(row, k)] -= f * a[(col, k)];
            }
            for k in 0..b.ncols() {
                b[(row, k)] -= f * b[(col, k)];
            }
        }
    }
    let mut x = Matrix::zeros(n, b.ncols());
    for k in 0..b.ncols() {
        for row in (0..n).rev() {
            let mut acc = b[(row, k)];
            for j in row + 1..n {
                acc -= a[(row, j)] * x[(j, k)];
            }
            x[(row, k)] = acc / a[(row, row)];
        }
    }
    Some(x)
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Matrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn vec_solve(op: &Matrix, n: usize) -> Matrix {
    let rhs = Matrix::from_fn(n * n, 1, |k, _| if k % n == k / n { -1.0 } else { 0.0 });
    let v = gauss_solve(op, &rhs).expect("singular Kronecker operator");
    Matrix::from_fn(n, n, |i, j| v[(i + j * n, 0)])
}

/// Solves `AQ + QAᵀ + I = 0` via `(I⊗A + A⊗I) vec Q = −vec I`.
pub fn kronecker_lyapunov_continuous(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let eye = Matrix::identity(n, n);
    vec_solve(&(kron(&eye, a) + kron(a, &eye)), n)
}

/// Solves `AQ + QAᵀ + ηAQAᵀ + I = 0`.
pub fn kronecker_lyapunov_discrete(a: &Matrix, eta: f64) -> Matrix {
    let n = a.nrows();
    let eye = Matrix::identity(n, n);
    vec_solve(&(kron(&eye, a) + kron(a, &eye) + kron(a, a) * eta), n)
}

/// Minimizes `½(x − m)² + τ|x|` over a grid of spacing `h` around `m`.
pub fn grid_search_prox_l1(m: f64, tau: f64, h: f64) -> f64 {
    let radius = m.abs() + tau + 1.0;
    let steps = (2.0 * radius / h).ceil() as i64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let x = -radius + k as f64 * h;
        let f = 0.5 * (x - m).powi(2) + tau * x.abs();
        if f < best.0 {
            best = (f, x);
        }
    }
    // zero is not necessarily on the grid
    if 0.5 * m * m + 0.0 <= best.0 {
        return 0.0;
    }
    best.1
}

/// Minimizes `½‖X − M‖² + τ‖X‖_*` through the factorization
/// `‖X‖_* = min_{X = UVᵀ} ½(‖U‖² + ‖V‖²)` and plain gradient descent.
pub fn factored_prox_nuclear(m: &Matrix, tau: f64, iters: usize) -> Matrix {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let mut u = Matrix::from_fn(rows, k, |i, j| if i == j { 1.0 } else { 0.1 / (1 + i + j) as f64 });
    let mut v = Matrix::from_fn(cols, k, |i, j| if i == j { 1.0 } else { 0.05 / (1 + i + 2 * j) as f64 });
    let step = 0.2 / (1.0 + m.norm());
    for _ in 0..iters {
        let resid = &u * v.transpose() - m;
        let gu = &resid * &v + &u * tau;
        let gv = resid.transpose() * &u + &v * tau;
        u -= gu * step;
        v -= gv * step;
    }
    u * v.transpose()
}

/// Truncated Taylor series with scaling and squaring by plain halving.
pub fn taylor_expm(a: &Matrix, terms: usize) -> Matrix {
    let n = a.nrows();
    let norm = a.norm();
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.5 {
        squarings += 1;
    }
    let scaled = a / 2f64.powi(squarings);
    let mut out = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=terms {
        term = &term * &scaled / k as f64;
        out += &term;
    }
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

/// `1 − max_k ‖Q_{Sᶜ,S} (Q_{S,S})⁻¹‖_{∞,1}` by explicit inversion.
pub fn dense_theta(q: &Matrix, supports: &[Vec<usize>]) -> f64 {
    let p = q.nrows();
    let mut worst = 0.0_f64;
    for s in supports {
        let comp: Vec<usize> = (0..p).filter(|j| !s.contains(j)).collect();
        let q_ss = Matrix::from_fn(s.len(), s.len(), |i, j| q[(s[i], s[j])]);
        let inv = gauss_solve(&q_ss, &Matrix::identity(s.len(), s.len())).unwrap();
        let q_cs = Matrix::from_fn(comp.len(), s.len(), |i, j| q[(comp[i], s[j])]);
        let prod = q_cs * inv;
        for row in prod.row_iter() {
            worst = worst.max(row.iter().map(|v| v.abs()).sum());
        }
    }
    1.0 - worst
}

/// Central finite-difference gradient of a scalar matrix function.
pub fn finite_difference_gradient(f: impl Fn(&Matrix) -> f64, at: &Matrix, h: f64) -> Matrix {
    let mut g = Matrix::zeros(at.nrows(), at.ncols());
    for i in 0..at.nrows() {
        for j in 0..at.ncols() {
            let mut plus = at.clone();
            plus[(i, j)] += h;
            let mut minus = at.clone();
            minus[(i, j)] -= h;
            g[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    g
}

/// Per-sample least-squares loss `(1/(2η²n)) Σ ‖x(i+1) − x(i) − η M x(i)‖²`.
pub fn direct_loss(m: &Matrix, path: &[Vec<f64>], eta: f64) -> f64 {
    let n = path.len() - 1;
    let mut total = 0.0;
    for w in path.windows(2) {
        for row in 0..m.nrows() {
            let mut pred = w[0][row];
            for col in 0..m.ncols() {
                pred += eta * m[(row, col)] * w[0][col];
            }
            total += (w[1][row] - pred).powi(2);
        }
    }
    total / (2.0 * eta * eta * n as f64)
}

/// Row-wise least squares of `(x(i+1) − x(i))/η` on `x(i)` with batch-means
/// standard errors. Returns `(estimate, standard_error)`.
pub fn ols_with_batch_errors(path: &[Vec<f64>], eta: f64, batches: usize) -> (Matrix, Matrix) {
    let fit = |seg: &[Vec<f64>]| {
        let p = seg[0].len();
        let mut s1 = Matrix::zeros(p, p);
        let mut s2 = Matrix::zeros(p, p);
        for w in seg.windows(2) {
            for a in 0..p {
                for b in 0..p {
                    s1[(a, b)] += w[0][a] * w[0][b];
                    s2[(a, b)] += (w[1][a] - w[0][a]) / eta * w[0][b];
                }
            }
        }
        // M S1 = S2  ⇔  S1 Mᵀ = S2ᵀ
        gauss_solve(&s1, &s2.transpose()).unwrap().transpose()
    };
    let full = fit(path);
    let len = path.len() / batches;
    let estimates: Vec<Matrix> = (0..batches)
        .map(|b| fit(&path[b * len..((b + 1) * len + 1).min(path.len())]))
        .collect();
    let mean = estimates.iter().fold(Matrix::zeros(full.nrows(), full.ncols()), |acc, e| acc + e)
        / batches as f64;
    let var = estimates
        .iter()
        .fold(Matrix::zeros(full.nrows(), full.ncols()), |acc, e| {
            acc + (e - &mean).map(|v| v * v)
        })
        / (batches as f64 - 1.0);
    let se = var.map(|v| (v / batches as f64).sqrt());
    (full, se)
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations,
/// with the accumulated eigenvectors as columns.
pub fn jacobi_eigen(s: &Matrix) -> (Vec<f64>, Matrix) {
    let n = s.nrows();
    let mut a = (s + s.transpose()) * 0.5;
    let mut v = Matrix::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 * a.norm_squared().max(1e-300) {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                if a[(i, j)] == 0.0 {
                    continue;
                }
                let theta = (a[(j, j)] - a[(i, i)]) / (2.0 * a[(i, j)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                let mut rot = Matrix::identity(n, n);
                rot[(i, i)] = c;
                rot[(j, j)] = c;
                rot[(i, j)] = sn;
                rot[(j, i)] = -sn;
                a = rot.transpose() * &a * &rot;
                v = &v * rot;
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// `‖L‖_*` as the sum of square roots of the eigenvalues of `LᵀL`.
pub fn factored_nuclear_norm(l: &Matrix) -> f64 {
    jacobi_eigen(&(l.transpose() * l)).0.iter().map(|e| e.max(0.0).sqrt()).sum()
}

fn l1_subgradient(a: &Matrix) -> Matrix {
    a.map(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 })
}

/// A subgradient of `‖L‖_*`: `Σ_{σ_k>0} u_k v_kᵀ` from the eigenpairs of `LᵀL`.
fn nuclear_subgradient(l: &Matrix) -> Matrix {
    let (vals, vecs) = jacobi_eigen(&(l.transpose() * l));
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut g = Matrix::zeros(l.nrows(), l.ncols());
    for (k, &lam) in vals.iter().enumerate() {
        if lam > 1e-14 * scale && lam > 0.0 {
            let v = vecs.column(k);
            let u = l * v / lam.sqrt();
            g += u * v.transpose();
        }
    }
    g
}

/// Minimizes the regularized loss from sufficient statistics by subgradient
/// descent with steps `c/√k`, returning the best objective seen. `lambda_l = 0`
/// pins `L` to zero.
pub fn subgradient_fit(
    stats: &crate::simulate::SufficientStats,
    lambda_a: f64,
    lambda_l: f64,
    iters: usize,
) -> f64 {
    let p = stats.p();
    let (s1, s2) = (stats.s1(), stats.s2());
    let constant = stats.sq_increment_sum() / (2.0 * stats.eta() * stats.eta() * stats.n() as f64);
    let value = |a: &Matrix, l: &Matrix| {
        let m = a + l;
        let quad = (&m * s1 * m.transpose()).trace() * 0.5;
        let lin = (m.transpose() * s2).trace();
        let pen_l = if lambda_l > 0.0 { lambda_l * factored_nuclear_norm(l) } else { 0.0 };
        quad - lin + constant + lambda_a * a.iter().map(|v| v.abs()).sum::<f64>() + pen_l
    };
    let (eig, _) = jacobi_eigen(s1);
    let lipschitz = 2.0 * eig.iter().fold(0.0_f64, |m, v| m.max(*v));
    let c = 1.0 / lipschitz;
    let mut a = Matrix::zeros(p, p);
    let mut l = Matrix::zeros(p, p);
    let mut best = value(&a, &l);
    for k in 1..=iters {
        let g = (&a + &l) * s1 - s2;
        let step = c / (k as f64).sqrt();
        a -= (&g + l1_subgradient(&a) * lambda_a) * step;
        if lambda_l > 0.0 {
            l -= (&g + nuclear_subgradient(&l) * lambda_l) * step;
        }
        best = best.min(value(&a, &l));
    }
    best
}
