//! Independent reference solvers for tests. Nothing here is used by the
//! production code paths.

use nalgebra::{DMatrix, DVector};

/// Dense ADMM solve of the windowed smoothing objective
///
/// `Σ wᵢ (xᵢ − yᵢ)² + Σ_k lam_k ‖Δᵏ x‖₁` with `x` restricted to
/// `[min y, max y]`.
///
/// Runs until a duality-gap certificate falls below `gap_tol` (absolute) or
/// the iteration budget is exhausted. Returns the solution and the final gap.
pub fn reference_window_solve(y: &[f64], w: &[f64], lam: [f64; 3], gap_tol: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return (y.to_vec(), 0.0);
    }
    let g = difference_matrix(n, lam);
    let m = g.nrows();
    let yv = DVector::from_column_slice(y);
    let wv = DVector::from_column_slice(w);
    if m == 0 {
        return (y.to_vec(), 0.0);
    }

    let mut rho = 1.0 / (hi - lo).max(1e-9);
    let mut x = yv.clone();
    let mut u = &g * &x;
    let mut v = x.clone();
    let mut p = DVector::zeros(m);
    let mut q = DVector::zeros(n);
    let gtg = g.transpose() * &g;
    let mut chol = factor(&wv, &gtg, rho);
    let mut best = (x.as_slice().to_vec(), f64::INFINITY);

    for iter in 0..2_000_000usize {
        let rhs = wv.component_mul(&yv) * 2.0 + g.transpose() * (&u - &p) * rho + (&v - &q) * rho;
        x = chol.solve(&rhs);
        let gx = &g * &x;
        let u_prev = u.clone();
        let v_prev = v.clone();
        u = (&gx + &p).map(|e| soft(e, 1.0 / rho));
        v = (&x + &q).map(|e| e.clamp(lo, hi));
        p += &gx - &u;
        q += &x - &v;

        if iter % 25 == 0 {
            let gap = certificate(&v, &(p.clone() * rho), &g, &yv, &wv, lo, hi);
            if gap < best.1 {
                best = (v.as_slice().to_vec(), gap);
            }
            if gap <= gap_tol {
                break;
            }
            // Residual balancing.
            let r_norm = (&gx - &u).norm() + (&x - &v).norm();
            let s_norm = rho * ((g.transpose() * (&u - &u_prev)).norm() + (&v - &v_prev).norm());
            let scale = if r_norm > 10.0 * s_norm {
                2.0
            } else if s_norm > 10.0 * r_norm {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                p /= scale;
                q /= scale;
                chol = factor(&wv, &gtg, rho);
            }
        }
    }
    best
}

fn factor(w: &DVector<f64>, gtg: &DMatrix<f64>, rho: f64) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
    let n = w.len();
    let mut a = gtg * rho + DMatrix::identity(n, n) * rho;
    for i in 0..n {
        a[(i, i)] += 2.0 * w[i];
    }
    a.cholesky().expect("ADMM system is positive definite")
}

fn soft(v: f64, k: f64) -> f64 {
    v.signum() * (v.abs() - k).max(0.0)
}

/// Stacked `lam_k · Δᵏ` rows.
pub fn difference_matrix(n: usize, lam: [f64; 3]) -> DMatrix<f64> {
    let stencils: [&[f64]; 3] = [&[-1.0, 1.0], &[1.0, -2.0, 1.0], &[-1.0, 3.0, -3.0, 1.0]];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, st) in stencils.iter().enumerate() {
        if lam[k] <= 0.0 || n < st.len() {
            continue;
        }
        for start in 0..=n - st.len() {
            let mut r = vec![0.0; n];
            for (j, c) in st.iter().enumerate() {
                r[start + j] = lam[k] * c;
            }
            rows.push(r);
        }
    }
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// `J(x) − Ψ(z)` with `z` clipped into the dual box.
fn certificate(
    x: &DVector<f64>,
    z: &DVector<f64>,
    g: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &DVector<f64>,
    lo: f64,
    hi: f64,
) -> f64 {
    let primal: f64 = (0..x.len()).map(|i| w[i] * (x[i] - y[i]).powi(2)).sum::<f64>() + (g * x).abs().sum();
    let z = z.map(|e| e.clamp(-1.0, 1.0));
    let gz = g.transpose() * z;
    let dual: f64 = (0..x.len())
        .map(|i| {
            let xi = (y[i] - gz[i] / (2.0 * w[i])).clamp(lo, hi);
            w[i] * (xi - y[i]).powi(2) + gz[i] * xi
        })
        .sum();
    primal - dual
}

/// Minimum-cost objective evaluation used by oracle tests.
pub fn window_objective(x: &[f64], y: &[f64], w: &[f64], lam: [f64; 3]) -> f64 {
    let g = difference_matrix(x.len(), lam);
    let xv = DVector::from_column_slice(x);
    (0..x.len()).map(|i| w[i] * (x[i] - y[i]).powi(2)).sum::<f64>() + (g * xv).abs().sum()
}
