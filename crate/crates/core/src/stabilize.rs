//! Fixed-lag smoothing of scalar camera signals.
//!
//! Each window is solved for
//!
//! ```text
//! J(x) = Σ wᵢ (xᵢ − yᵢ)² + lam1·Σ|Δ¹x| + lam2·Σ|Δ²x| + lam3·Σ|Δ³x|
//! ```
//!
//! where the window is the last `w_past` emitted values (anchors, weight 10)
//! followed by the pending raw samples (weight 1), and `x` is restricted to
//! the range of the window targets. L1 derivative penalties give piecewise
//! static, constant-velocity and constant-acceleration paths.

#![allow(clippy::needless_range_loop)]

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::params::FilterParams;

/// Weight of previously emitted values relative to raw samples.
pub const ANCHOR_WEIGHT: f64 = 10.0;

/// Target duality gap, in units of the normalized objective.
const GAP_TOL: f64 = 1e-11;
const MAX_ITER: usize = 200;

/// Online filter for one scalar signal.
#[derive(Debug, Clone)]
pub struct FilterState {
    params: FilterParams,
    past: VecDeque<f64>,
    future: VecDeque<f64>,
    pushes: usize,
    emitted: usize,
    solver: WindowSolver,
    targets: Vec<f64>,
    weights: Vec<f64>,
}

impl FilterState {
    pub fn new(params: FilterParams) -> Self {
        FilterState {
            params,
            past: VecDeque::with_capacity(params.w_past + 1),
            future: VecDeque::with_capacity(params.w_future + 1),
            pushes: 0,
            emitted: 0,
            solver: WindowSolver::default(),
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn pushes(&self) -> usize {
        self.pushes
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Number of samples waiting for their look-ahead.
    pub fn pending(&self) -> usize {
        self.future.len()
    }

    /// Feeds one raw sample; returns the smoothed value of the sample pushed
    /// `w_future` calls ago once that many later samples are available.
    pub fn push(&mut self, raw: f64) -> Result<Option<f64>> {
        if !raw.is_finite() {
            return Err(Error::invalid(format!("non-finite filter input {raw}")));
        }
        self.pushes += 1;
        self.future.push_back(raw);
        if self.future.len() <= self.params.w_future {
            return Ok(None);
        }
        Ok(Some(self.emit_front()))
    }

    /// Drains the pending samples, re-solving the shrinking final window for
    /// each one.
    pub fn flush(&mut self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.future.len());
        while !self.future.is_empty() {
            out.push(self.emit_front());
        }
        out
    }

    fn emit_front(&mut self) -> f64 {
        self.targets.clear();
        self.weights.clear();
        self.targets.extend(self.past.iter().chain(&self.future));
        self.weights.extend(
            std::iter::repeat_n(ANCHOR_WEIGHT, self.past.len())
                .chain(std::iter::repeat_n(1.0, self.future.len())),
        );
        let lam = [self.params.lam1, self.params.lam2, self.params.lam3];
        let x = self.solver.solve(&self.targets, &self.weights, lam);
        let value = x[self.past.len()];
        self.future.pop_front();
        self.past.push_back(value);
        if self.past.len() > self.params.w_past {
            self.past.pop_front();
        }
        self.emitted += 1;
        value
    }
}

/// Minimizes the window objective; returns the full minimizer.
pub fn solve_window(targets: &[f64], weights: &[f64], lam: [f64; 3]) -> Vec<f64> {
    WindowSolver::default().solve(targets, weights, lam).to_vec()
}

/// Objective value of `x` for the window (no range restriction applied).
pub fn window_objective(x: &[f64], targets: &[f64], weights: &[f64], lam: [f64; 3]) -> f64 {
    let data: f64 = x.iter().zip(targets).zip(weights).map(|((x, y), w)| w * (x - y).powi(2)).sum();
    let mut reg = 0.0;
    for (k, &l) in lam.iter().enumerate() {
        if l > 0.0 {
            reg += l * differences(x, k + 1).map(f64::abs).sum::<f64>();
        }
    }
    data + reg
}

const STENCILS: [&[f64]; 3] = [&[-1.0, 1.0], &[1.0, -2.0, 1.0], &[-1.0, 3.0, -3.0, 1.0]];

fn differences(x: &[f64], order: usize) -> impl Iterator<Item = f64> + '_ {
    let stencil = STENCILS[order - 1];
    x.windows(stencil.len())
        .map(move |w| w.iter().zip(stencil).map(|(a, b)| a * b).sum())
}

/// One row of the stacked, weighted difference operator.
#[derive(Debug, Clone, Copy)]
struct DiffRow {
    start: usize,
    order: usize,
    weight: f64,
}

impl DiffRow {
    fn coeffs(&self) -> &'static [f64] {
        STENCILS[self.order - 1]
    }

    fn apply(&self, x: &[f64]) -> f64 {
        self.weight * self.coeffs().iter().zip(&x[self.start..]).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Primal-dual interior-point solver with reusable buffers.
///
/// Works on the problem rescaled so the targets span `[-1, 1]`, written as a
/// QP with one epigraph variable `u_r ≥ |a_r·x|` per difference row. The
/// Newton system reduces to a band matrix in `x`. Steps follow Mehrotra's
/// predictor-corrector rule and iteration stops on a certified duality gap.
#[derive(Debug, Clone, Default)]
pub struct WindowSolver {
    rows: Vec<DiffRow>,
    y: Vec<f64>,
    x: Vec<f64>,
    u: Vec<f64>,
    ax: Vec<f64>,
    /// Multipliers of `u − a·x ≥ 0`, `u + a·x ≥ 0`, `1 − x ≥ 0`, `1 + x ≥ 0`.
    l: [Vec<f64>; 4],
    s: [Vec<f64>; 4],
    /// Complementarity right-hand side of the current direction.
    c: [Vec<f64>; 4],
    rx: Vec<f64>,
    ru: Vec<f64>,
    dir: Direction,
    aff: Direction,
    scratch: Vec<f64>,
    hess: Band,
    out: Vec<f64>,
    iterations: usize,
}

#[derive(Debug, Clone, Default)]
struct Direction {
    dx: Vec<f64>,
    du: Vec<f64>,
    ds: [Vec<f64>; 4],
    dl: [Vec<f64>; 4],
}

impl Direction {
    fn resize(&mut self, n: usize, m: usize) {
        self.dx.resize(n, 0.0);
        self.du.resize(m, 0.0);
        for (k, v) in self.ds.iter_mut().chain(self.dl.iter_mut()).enumerate() {
            v.resize(if k % 4 < 2 { m } else { n }, 0.0);
        }
    }
}

impl WindowSolver {
    pub fn solve(&mut self, targets: &[f64], weights: &[f64], lam: [f64; 3]) -> &[f64] {
        assert_eq!(targets.len(), weights.len());
        let n = targets.len();
        self.out.clear();
        self.iterations = 0;
        let (lo, hi) = targets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        // x ≡ c zeroes every term.
        if n == 0 || lo == hi {
            self.out.extend_from_slice(targets);
            return &self.out;
        }
        let center = 0.5 * (lo + hi);
        let scale = 0.5 * (hi - lo);

        self.rows.clear();
        for (k, &l) in lam.iter().enumerate() {
            let order = k + 1;
            if l > 0.0 && n > order {
                self.rows
                    .extend((0..n - order).map(|start| DiffRow { start, order, weight: l / scale }));
            }
        }
        self.y.clear();
        self.y.extend(targets.iter().map(|v| ((v - center) / scale).clamp(-1.0, 1.0)));
        if self.rows.is_empty() {
            self.out.extend_from_slice(targets);
            return &self.out;
        }

        self.interior_point(weights);
        self.out
            .extend(self.x.iter().map(|v| (center + scale * v).clamp(lo, hi)));
        &self.out
    }

    /// Iterations used by the last solve.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn interior_point(&mut self, w: &[f64]) {
        let n = self.y.len();
        let m = self.rows.len();
        let band = self.rows.iter().map(|r| r.order).max().unwrap_or(0);
        self.hess.reset(n, band);
        self.dir.resize(n, m);
        self.aff.resize(n, m);
        self.rx.resize(n, 0.0);
        self.ru.resize(m, 0.0);
        self.scratch.resize(n.max(m), 0.0);
        self.ax.resize(m, 0.0);

        self.x.clear();
        self.x.extend(self.y.iter().map(|v| v * (1.0 - 1e-3)));
        self.apply_rows();
        self.u.clear();
        self.u.extend(self.ax.iter().map(|a| a.abs() + 1.0));
        for k in 0..4 {
            self.l[k].clear();
            self.s[k].resize(if k < 2 { m } else { n }, 0.0);
            self.c[k].resize(if k < 2 { m } else { n }, 0.0);
        }
        self.update_slacks();
        self.l[0].resize(m, 0.5);
        self.l[1].resize(m, 0.5);
        for k in 2..4 {
            let l: Vec<f64> = self.s[k].iter().map(|s| 0.1 / s).collect();
            self.l[k].extend(l);
        }
        let total = (2 * m + 2 * n) as f64;

        for _ in 0..MAX_ITER {
            if self.certified_gap(w) <= GAP_TOL {
                return;
            }
            self.iterations += 1;
            let mu = self.complementarity() / total;
            self.residuals(w);
            if !self.factor(w) {
                return;
            }

            // Predictor: pure Newton step towards complementarity zero.
            for k in 0..4 {
                for i in 0..self.c[k].len() {
                    self.c[k][i] = -self.l[k][i] * self.s[k][i];
                }
            }
            let mut aff = std::mem::take(&mut self.aff);
            self.direction(&mut aff);
            let alpha_aff = self.step_length(&aff);
            let mut mu_aff = 0.0;
            for k in 0..4 {
                for i in 0..self.s[k].len() {
                    mu_aff += (self.s[k][i] + alpha_aff * aff.ds[k][i]) * (self.l[k][i] + alpha_aff * aff.dl[k][i]);
                }
            }
            let sigma = (mu_aff / total / mu).powi(3).min(1.0);

            // Corrector with centering.
            let target = sigma * mu;
            for k in 0..4 {
                for i in 0..self.c[k].len() {
                    self.c[k][i] = target - self.l[k][i] * self.s[k][i] - aff.ds[k][i] * aff.dl[k][i];
                }
            }
            let mut dir = std::mem::take(&mut self.dir);
            self.direction(&mut dir);
            let alpha = (0.99 * self.step_length(&dir)).min(1.0);
            for i in 0..n {
                self.x[i] += alpha * dir.dx[i];
            }
            for r in 0..m {
                self.u[r] += alpha * dir.du[r];
            }
            for k in 0..4 {
                for (l, dl) in self.l[k].iter_mut().zip(&dir.dl[k]) {
                    *l += alpha * dl;
                }
            }
            self.aff = aff;
            self.dir = dir;
            self.apply_rows();
            self.update_slacks();
        }
    }

    fn apply_rows(&mut self) {
        for (a, row) in self.ax.iter_mut().zip(&self.rows) {
            *a = row.apply(&self.x);
        }
    }

    fn update_slacks(&mut self) {
        for r in 0..self.rows.len() {
            self.s[0][r] = self.u[r] - self.ax[r];
            self.s[1][r] = self.u[r] + self.ax[r];
        }
        for i in 0..self.x.len() {
            self.s[2][i] = 1.0 - self.x[i];
            self.s[3][i] = 1.0 + self.x[i];
        }
    }

    fn complementarity(&self) -> f64 {
        (0..4)
            .map(|k| self.l[k].iter().zip(&self.s[k]).map(|(l, s)| l * s).sum::<f64>())
            .sum()
    }

    fn residuals(&mut self, w: &[f64]) {
        for i in 0..self.x.len() {
            self.rx[i] = 2.0 * w[i] * (self.x[i] - self.y[i]) + self.l[2][i] - self.l[3][i];
        }
        for (r, row) in self.rows.iter().enumerate() {
            let z = self.l[0][r] - self.l[1][r];
            for (p, c) in row.coeffs().iter().enumerate() {
                self.rx[row.start + p] += z * row.weight * c;
            }
            self.ru[r] = 1.0 - self.l[0][r] - self.l[1][r];
        }
    }

    /// Factors `2W + Aᵀ diag(4 d₀d₁/(d₀+d₁)) A + diag(d₂ + d₃)` with `d = λ/s`.
    fn factor(&mut self, w: &[f64]) -> bool {
        self.hess.clear();
        for i in 0..self.x.len() {
            let d = self.l[2][i] / self.s[2][i] + self.l[3][i] / self.s[3][i];
            self.hess.add(i, i, 2.0 * w[i] + d);
        }
        for (r, row) in self.rows.iter().enumerate() {
            let (d0, d1) = (self.l[0][r] / self.s[0][r], self.l[1][r] / self.s[1][r]);
            let q = 4.0 * d0 * d1 / (d0 + d1) * row.weight * row.weight;
            let c = row.coeffs();
            for (p, &cp) in c.iter().enumerate() {
                for (k, &ck) in c.iter().enumerate().skip(p) {
                    self.hess.add(row.start + k, row.start + p, q * cp * ck);
                }
            }
        }
        self.hess.factor()
    }

    /// Newton direction for the complementarity right-hand side in `self.c`.
    fn direction(&mut self, d: &mut Direction) {
        let (n, m) = (self.x.len(), self.rows.len());
        let cv = &self.c;
        let c = |k: usize, i: usize| cv[k][i];
        // Reduced right-hand side in x.
        let rhs_x = &mut self.scratch;
        for i in 0..n {
            rhs_x[i] = -self.rx[i] - (c(2, i) / self.s[2][i] - c(3, i) / self.s[3][i]);
        }
        // du = (e + D₋·AΔx)/D₊ with e = c₀/s₀ + c₁/s₁ − r_u.
        for (r, row) in self.rows.iter().enumerate() {
            let (s0, s1) = (self.s[0][r], self.s[1][r]);
            let (d0, d1) = (self.l[0][r] / s0, self.l[1][r] / s1);
            let (c0, c1) = (c(0, r), c(1, r));
            let e = c0 / s0 + c1 / s1 - self.ru[r];
            let g = c0 / s0 - c1 / s1 - (d0 - d1) * e / (d0 + d1);
            d.du[r] = e;
            for (p, cp) in row.coeffs().iter().enumerate() {
                rhs_x[row.start + p] -= g * row.weight * cp;
            }
        }
        d.dx[..n].copy_from_slice(&rhs_x[..n]);
        self.hess.solve(&mut d.dx);
        for (r, row) in self.rows.iter().enumerate() {
            let (s0, s1) = (self.s[0][r], self.s[1][r]);
            let (d0, d1) = (self.l[0][r] / s0, self.l[1][r] / s1);
            let adx = row.apply(&d.dx);
            let du = (d.du[r] + (d0 - d1) * adx) / (d0 + d1);
            d.du[r] = du;
            d.ds[0][r] = du - adx;
            d.ds[1][r] = du + adx;
        }
        for i in 0..n {
            d.ds[2][i] = -d.dx[i];
            d.ds[3][i] = d.dx[i];
        }
        for k in 0..4 {
            let len = if k < 2 { m } else { n };
            for i in 0..len {
                d.dl[k][i] = (c(k, i) - self.l[k][i] * d.ds[k][i]) / self.s[k][i];
            }
        }
    }

    /// Largest step in `[0, 1]` keeping slacks and multipliers non-negative.
    fn step_length(&self, d: &Direction) -> f64 {
        let mut alpha = 1.0_f64;
        for k in 0..4 {
            for (v, dv) in self.s[k].iter().zip(&d.ds[k]).chain(self.l[k].iter().zip(&d.dl[k])) {
                if *dv < 0.0 {
                    alpha = alpha.min(-v / dv);
                }
            }
        }
        alpha
    }

    /// Primal objective minus a dual bound built from the row multipliers.
    fn certified_gap(&mut self, w: &[f64]) -> f64 {
        let n = self.x.len();
        let mut primal: f64 = (0..n).map(|i| w[i] * (self.x[i] - self.y[i]).powi(2)).sum();
        // v = Σ_r z_r·row_r with z_r clipped into [−1, 1].
        let v = &mut self.scratch;
        v[..n].iter_mut().for_each(|e| *e = 0.0);
        for (r, row) in self.rows.iter().enumerate() {
            primal += self.ax[r].abs();
            let z = (self.l[0][r] - self.l[1][r]).clamp(-1.0, 1.0);
            for (p, c) in row.coeffs().iter().enumerate() {
                v[row.start + p] += z * row.weight * c;
            }
        }
        // min over the box of w(x − y)² + v·x, coordinatewise.
        let dual: f64 = (0..n)
            .map(|i| {
                let xi = (self.y[i] - v[i] / (2.0 * w[i])).clamp(-1.0, 1.0);
                w[i] * (xi - self.y[i]).powi(2) + v[i] * xi
            })
            .sum();
        primal - dual
    }
}

/// Symmetric positive-definite band matrix (lower storage) with in-place
/// Cholesky.
#[derive(Debug, Clone, Default)]
struct Band {
    n: usize,
    b: usize,
    /// `data[i * (b + 1) + (i - j)]` holds entry `(i, j)` for `i - b <= j <= i`.
    data: Vec<f64>,
}

impl Band {
    fn reset(&mut self, n: usize, b: usize) {
        self.n = n;
        self.b = b;
        self.data.clear();
        self.data.resize(n * (b + 1), 0.0);
    }

    fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.b);
        self.data[i * (self.b + 1) + (i - j)] += v;
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.b + 1) + (i - j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * (self.b + 1) + (i - j)] = v;
    }

    /// Factors in place and solves `A x = rhs`; false if not positive definite.
    #[cfg(test)]
    fn factor_solve(&mut self, rhs: &mut [f64]) -> bool {
        if !self.factor() {
            return false;
        }
        self.solve(rhs);
        true
    }

    /// In-place Cholesky; false if not positive definite.
    fn factor(&mut self) -> bool {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut s = self.at(i, j);
                for k in j0.max(j.saturating_sub(b))..j {
                    s -= self.at(i, k) * self.at(j, k);
                }
                if i == j {
                    if s.is_nan() || s <= 0.0 {
                        return false;
                    }
                    self.set(i, i, s.sqrt());
                } else {
                    let d = self.at(j, j);
                    self.set(i, j, s / d);
                }
            }
        }
        true
    }

    /// Solves with the factor from [`Band::factor`].
    fn solve(&mut self, rhs: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        for i in 0..n {
            let mut s = rhs[i];
            for k in i.saturating_sub(b)..i {
                s -= self.at(i, k) * rhs[k];
            }
            rhs[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..(i + b + 1).min(n) {
                s -= self.at(k, i) * rhs[k];
            }
            rhs[i] = s / self.at(i, i);
        }
    }
}
