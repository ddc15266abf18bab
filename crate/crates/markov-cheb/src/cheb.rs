//! Chebyshev machinery for the uniform approximation of pure powers.
//!
//! The identification estimator weights known Markov parameters with the
//! coefficients of a polynomial approximating `x^(k-1)` on `[-rho, rho]` in
//! the uniform norm. This module holds the shared problem/solution types,
//! the analytic truncation construction (expand `x^(k-1)` in Chebyshev
//! polynomials and drop every term above degree T-1), the verified sup-norm
//! evaluation of a residual, and the closed-form error bounds used by the
//! bench. The exchange solver for the true minimax problem lives in
//! [`crate::remez`].

use crate::error::{Error, Result};

/// Uniform approximation instance: approximate `x^(k-1)` on `[-rho, rho]`
/// by a polynomial of degree at most `t - 1`.
///
/// `k <= t` is allowed and answered exactly (the target is representable);
/// the interesting regime is `k > t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxProblem {
    pub k: usize,
    pub t: usize,
    pub rho: f64,
}

impl ApproxProblem {
    pub fn new(k: usize, t: usize, rho: f64) -> Result<Self> {
        if k < 1 || t < 1 {
            return Err(Error::InvalidArgument(format!(
                "approximation indices must satisfy k >= 1 and t >= 1 (k = {k}, t = {t})"
            )));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval radius must be a positive real, got {rho}"
            )));
        }
        Ok(ApproxProblem { k, t, rho })
    }

    /// Degree of the target power.
    pub fn target_degree(&self) -> usize {
        self.k - 1
    }

    /// Indices t with a coefficient allowed to be nonzero: those sharing the
    /// parity of k-1. The target power is even or odd on a symmetric
    /// interval, and the (unique) best approximation inherits that symmetry.
    pub fn parity_indices(&self) -> Vec<usize> {
        let p = self.target_degree() % 2;
        (0..self.t).filter(|t| t % 2 == p).collect()
    }

    /// Dimension of the parity-reduced coefficient space.
    pub fn parity_dimension(&self) -> usize {
        self.parity_indices().len()
    }
}

/// Coefficients and diagnostics of one approximation solve.
///
/// `alpha` is in the monomial basis over `[-rho, rho]`: the approximant is
/// `sum_t alpha[t] * x^t`, so `alpha[t]` weights `H_(t+1)` in the estimator.
/// Wrong-parity entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSolution {
    pub alpha: Vec<f64>,
    pub sup_error: f64,
    pub iterations: usize,
    pub equioscillation_residual: f64,
}

/// Chebyshev polynomial of the first kind, `T_j(x)`, by the three-term
/// recurrence. `|T_j(x)| <= 1` on `[-1, 1]`.
pub fn chebyshev_eval(j: usize, x: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for _ in 2..=j {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Chebyshev coefficients of the pure power: `x^n = sum_j b[j] T_j(x)` with
/// `b[j]` nonzero only for `j` of the same parity as `n`.
///
/// The values are `2^(1-n) binom(n, (n-j)/2)` for `j >= 1` and half that at
/// `j = 0`. They are computed by an exact-ratio downward recurrence from
/// `b[n] = 2^(1-n)`, which keeps every intermediate within f64 range for any
/// n below ~1000.
pub fn power_to_chebyshev(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![1.0];
    }
    let mut b = vec![0.0; n + 1];
    let mut val = (2.0_f64).powi(1 - (n as i32));
    let mut j = n;
    loop {
        b[j] = val;
        if j < 2 {
            break;
        }
        // b[j-2] / b[j] = binom(n, m+1) / binom(n, m) with m = (n - j) / 2.
        let m = (n - j) / 2;
        val *= (n - m) as f64 / (m + 1) as f64;
        j -= 2;
    }
    if n % 2 == 0 {
        b[0] *= 0.5;
    }
    b
}

/// Monomial coefficients of `T_j(x)`, j = 0..=deg, as rows.
fn chebyshev_monomial_rows(deg: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(deg + 1);
    rows.push(vec![1.0]);
    if deg == 0 {
        return rows;
    }
    rows.push(vec![0.0, 1.0]);
    for j in 2..=deg {
        let mut next = vec![0.0; j + 1];
        for (i, &c) in rows[j - 1].iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, &c) in rows[j - 2].iter().enumerate() {
            next[i] -= c;
        }
        rows.push(next);
    }
    rows
}

/// Degree-(t-1) approximant of `x^(k-1)` on `[-rho, rho]` obtained by
/// truncating the Chebyshev expansion of the normalized power, converting
/// to the monomial basis and rescaling coefficient t by `rho^(k-1-t)`.
///
/// The returned `sup_error` is the exact tail sum of the dropped Chebyshev
/// coefficients times `rho^(k-1)`; all dropped coefficients are positive and
/// every `T_j` reaches 1 at x = 1, so the tail sum is attained. It satisfies
/// the Hoeffding envelope `sup_error <= 2 rho^(k-1) exp(-(t-1)^2 / (2(k-1)))`.
pub fn chebyshev_truncation(prob: &ApproxProblem) -> ApproxSolution {
    let n = prob.target_degree();
    let mut alpha = vec![0.0; prob.t];
    if prob.k <= prob.t {
        // The target is representable; answer exactly.
        alpha[n] = 1.0;
        return ApproxSolution {
            alpha,
            sup_error: 0.0,
            iterations: 0,
            equioscillation_residual: 0.0,
        };
    }

    let b = power_to_chebyshev(n);
    let keep_deg = prob.t - 1;
    let rows = chebyshev_monomial_rows(keep_deg.min(n));
    let mut mono = vec![0.0; prob.t];
    let mut tail = 0.0;
    for (j, &bj) in b.iter().enumerate() {
        if bj == 0.0 {
            continue;
        }
        if j <= keep_deg {
            for (i, &c) in rows[j].iter().enumerate() {
                mono[i] += bj * c;
            }
        } else {
            tail += bj;
        }
    }

    let scale = prob.rho.powi(n as i32);
    for (t, a) in mono.iter().enumerate() {
        alpha[t] = a * prob.rho.powi((n - t) as i32);
    }
    let sup_error = tail * scale;
    let equioscillation_residual = certify_equioscillation(&alpha, prob).1;
    ApproxSolution {
        alpha,
        sup_error,
        iterations: 0,
        equioscillation_residual,
    }
}

/// Residual `x^(k-1) - sum_t alpha[t] x^t` at a point.
pub(crate) fn residual(alpha: &[f64], prob: &ApproxProblem, x: f64) -> f64 {
    let mut p = 0.0;
    for &a in alpha.iter().rev() {
        p = p * x + a;
    }
    x.powi(prob.target_degree() as i32) - p
}

/// Chebyshev-extrema grid `rho * cos(pi i / (size - 1))`, i = 0..size-1.
/// Descending in x, endpoints included. Built from the half range and
/// mirrored so the symmetry about 0 is exact in floating point.
pub(crate) fn cheb_extrema_grid(rho: f64, size: usize) -> Vec<f64> {
    assert!(size >= 2, "grid needs at least the two endpoints");
    let last = size - 1;
    let mut grid = vec![0.0; size];
    for i in 0..=last / 2 {
        let v = rho * (std::f64::consts::PI * i as f64 / last as f64).cos();
        grid[i] = v;
        grid[last - i] = -v;
    }
    if last % 2 == 0 {
        grid[last / 2] = 0.0;
    }
    grid
}

const GOLDEN_INV: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`. The endpoints are
/// evaluated too, so maxima attained exactly at a bracket edge are not
/// undershot.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    let mut x1 = b - GOLDEN_INV * (b - a);
    let mut x2 = a + GOLDEN_INV * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN_INV * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN_INV * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > best.1 {
        best = (x1, f1);
    }
    if f2 > best.1 {
        best = (x2, f2);
    }
    best
}

/// Signed local extrema of the residual on `[-rho, rho]`: grid scan plus
/// golden-section refinement of every bracketed maximizer of |r|.
/// Returned sorted by x ascending.
pub(crate) fn residual_extrema(
    alpha: &[f64],
    prob: &ApproxProblem,
    grid_size: usize,
) -> Vec<(f64, f64)> {
    let grid = cheb_extrema_grid(prob.rho, grid_size.max(2));
    let vals: Vec<f64> = grid.iter().map(|&x| residual(alpha, prob, x)).collect();
    let n = grid.len();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let abs = |i: usize| vals[i].abs();
    for i in 0..n {
        let left_ok = i == 0 || abs(i) >= abs(i - 1);
        let right_ok = i + 1 == n || abs(i) >= abs(i + 1);
        if !(left_ok && right_ok) {
            continue;
        }
        // Skip plateau duplicates: only take the first index of an equal run.
        if i > 0 && abs(i) == abs(i - 1) && abs(i) > 0.0 {
            continue;
        }
        let lo = if i + 1 < n { grid[i + 1] } else { grid[i] };
        let hi = if i > 0 { grid[i - 1] } else { grid[i] };
        let (x, _) = golden_max(|x| residual(alpha, prob, x).abs(), lo, hi);
        out.push((x, residual(alpha, prob, x)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-13 * (1.0 + prob.rho));
    out
}

fn auto_grid(prob: &ApproxProblem) -> usize {
    (32 * prob.k).max(4001)
}

/// Verified uniform norm of the residual for a coefficient vector:
/// the maximum of `|x^(k-1) - sum alpha[t] x^t|` over a Chebyshev-spaced
/// grid of the given size, sharpened by golden-section refinement around
/// every local maximizer. The result is within `1e-12 * (1 + value)` of the
/// true supremum for grids resolving the residual's oscillation.
pub fn sup_norm_residual(alpha: &[f64], prob: &ApproxProblem, grid_size: usize) -> f64 {
    assert!(grid_size >= 2, "grid_size must be at least 2");
    residual_extrema(alpha, prob, grid_size)
        .iter()
        .fold(0.0_f64, |m, &(_, r)| m.max(r.abs()))
}

/// [`sup_norm_residual`] with a grid automatically sized for the problem.
pub fn verified_sup_error(alpha: &[f64], prob: &ApproxProblem) -> f64 {
    sup_norm_residual(alpha, prob, auto_grid(prob))
}

/// Equioscillation certificate: locates the residual's extrema, merges
/// consecutive same-sign ones (keeping the largest magnitude) and looks for
/// a window of `parity_dimension() + 1` alternating points all attaining the
/// sup. Returns `(alternation_length, deviation)` where deviation is the
/// smallest achievable `(sup - min |r| over the window) / sup`; 0 means a
/// perfect certificate, 1 means no window of the required length exists.
pub fn certify_equioscillation(alpha: &[f64], prob: &ApproxProblem) -> (usize, f64) {
    let needed = prob.parity_dimension() + 1;
    let pts = residual_extrema(alpha, prob, auto_grid(prob));
    let sup = pts.iter().fold(0.0_f64, |m, &(_, r)| m.max(r.abs()));
    if sup == 0.0 {
        // Zero residual: the approximation is exact and the certificate is
        // vacuous.
        return (needed, 0.0);
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for &(x, r) in &pts {
        if r == 0.0 {
            continue;
        }
        match merged.last_mut() {
            Some(last) if last.1.signum() == r.signum() => {
                if r.abs() > last.1.abs() {
                    *last = (x, r);
                }
            }
            _ => merged.push((x, r)),
        }
    }
    if merged.len() < needed {
        return (merged.len(), 1.0);
    }
    let mut best = f64::INFINITY;
    for w in merged.windows(needed) {
        let min_mag = w.iter().fold(f64::INFINITY, |m, &(_, r)| m.min(r.abs()));
        best = best.min((sup - min_mag) / sup);
    }
    (merged.len(), best.max(0.0))
}

/// Upper bound on the squared identification error of H_k when the first t
/// Markov parameters are exact and the minimax coefficients are used:
/// `C_m^2 rho^(2k-2) min(4 exp(-(t-1)^2/(k-1)), 1/4)`.
///
/// The exponential branch is the square of the Hoeffding tail bound on the
/// dropped Chebyshev coefficients, `2 exp(-(t-1)^2 / (2(k-1)))`, which is
/// sharp up to polynomial factors (the one-degree-gap minimax value is
/// exactly `2^(2-k)`, so any faster claimed exponent is falsified there).
///
/// Defined for k > t. The 1/4 branch relies on a degree-1 witness, so for
/// t = 1 it only covers odd k.
pub fn bias_bound(prob: &ApproxProblem, c_m: f64) -> f64 {
    assert!(prob.k > prob.t, "the bias bound is defined for k > t");
    assert!(c_m >= 0.0);
    let k1 = (prob.k - 1) as f64;
    let t1 = (prob.t - 1) as f64;
    let exp_branch = 4.0 * (-t1 * t1 / k1).exp();
    c_m * c_m * prob.rho.powi(2 * prob.k as i32 - 2) * exp_branch.min(0.25)
}

/// Supremum over all k > t of the squared identification bias for a
/// strictly stable spectral bound: `4 C_m^2 exp(-4(t-1) sqrt(log(1/rho)))`.
pub fn bias_sup_bound(t: usize, rho: f64, c_m: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "the supremum bound requires 0 < rho < 1, got {rho}"
        )));
    }
    let t1 = (t.max(1) - 1) as f64;
    Ok(4.0 * c_m * c_m * (-4.0 * t1 * (1.0 / rho).ln().sqrt()).exp())
}

/// Smallest horizon t such that [`bias_sup_bound`] is at most `delta^2`,
/// i.e. the number of known Markov parameters needed for accuracy delta.
/// Grows like `log(1/delta)`.
pub fn required_horizon(delta: f64, rho: f64, c_m: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "accuracy target must be positive, got {delta}"
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "required horizon needs 0 < rho < 1, got {rho}"
        )));
    }
    if !(c_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "system energy must be positive, got {c_m}"
        )));
    }
    let s = (1.0 / rho).ln().sqrt();
    let guess = 1.0 + ((2.0 * c_m / delta).ln() / (2.0 * s)).ceil();
    let mut t = if guess.is_finite() && guess >= 1.0 {
        guess as usize
    } else {
        1
    };
    let d2 = delta * delta;
    // Guard the closed form against floating-point boundary effects.
    while bias_sup_bound(t, rho, c_m)? > d2 {
        t += 1;
    }
    while t > 1 && bias_sup_bound(t - 1, rho, c_m)? <= d2 {
        t -= 1;
    }
    Ok(t)
}

/// L2 error over all k of estimating every unknown Markov parameter as
/// zero: `C_m rho^t / sqrt(1 - rho^2)`.
pub fn truncation_l2_bound(t: usize, rho: f64, c_m: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "the truncation bound requires 0 < rho < 1, got {rho}"
        )));
    }
    Ok(c_m * rho.powi(t as i32) / (1.0 - rho * rho).sqrt())
}
