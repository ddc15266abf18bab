//! Remez exchange solver for the uniform approximation of `x^(k-1)`.
//!
//! The target power is even or odd, so the solve is done in the reduced
//! space of matching parity. Substituting `y = x^2` maps the problem onto
//! `[0, 1]` (the radius is normalized out and restored at the end):
//!
//! * even target: minimize `max_y |y^m0 - q(y)|`,
//! * odd target:  minimize `max_y sqrt(y) |y^m0 - q(y)|`,
//!
//! where `q` ranges over polynomials with one coefficient per allowed
//! parity index. Both weights keep a Haar system on the half-open interval,
//! so the classical alternation characterization applies with
//! `parity_dimension + 1` points and the exchange iteration carries over
//! unchanged. `q` is represented in the shifted Chebyshev basis
//! `T_j(2y - 1)` for conditioning and converted to monomial coefficients
//! only once, at the boundary; that conversion is the one step whose
//! conditioning degrades for large horizons.
//!
//! The reference set is seeded with the extrema of the dominant dropped
//! term of the truncation construction, which is already the exact answer
//! for degree gaps of one or two.

use crate::cheb::{self, ApproxProblem, ApproxSolution};
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, Mat};

const MAX_ITERATIONS: usize = 100;
const GAP_TOL: f64 = 1e-10;

/// Best uniform approximation of `x^(k-1)` on `[-rho, rho]` by a polynomial
/// of degree below t, via Remez exchange. The residual of the returned
/// solution equioscillates on at least `parity_dimension + 1` points and
/// its sup never exceeds the truncation construction's.
///
/// `k <= t` is answered exactly. Non-convergence after 100 exchanges is an
/// error carrying the best iterate.
pub fn remez_minimax(prob: &ApproxProblem) -> Result<ApproxSolution> {
    if prob.k <= prob.t {
        let mut alpha = vec![0.0; prob.t];
        alpha[prob.k - 1] = 1.0;
        return Ok(ApproxSolution {
            alpha,
            sup_error: 0.0,
            iterations: 0,
            equioscillation_residual: 0.0,
        });
    }

    let parity = (prob.k - 1) % 2;
    let md = prob.parity_dimension();
    if md == 0 {
        // No admissible coefficient (t = 1 with an odd target): the zero
        // polynomial is the symmetric minimizer.
        let alpha = vec![0.0; prob.t];
        let sup_error = prob.rho.powi(prob.k as i32 - 1);
        return Ok(ApproxSolution {
            alpha,
            sup_error,
            iterations: 0,
            equioscillation_residual: 0.0,
        });
    }

    // Reduced target y^m0 with y = x^2 on the normalized interval.
    let m0 = (prob.k - 1 - parity) / 2;
    let weight = move |y: f64| if parity == 0 { 1.0 } else { y.sqrt() };
    let target = move |y: f64| y.powi(m0 as i32);

    // Seed: extrema of the leading dropped Chebyshev term T_(2 md + parity).
    let lead = 2 * md + parity;
    let mut reference: Vec<f64> = (0..=md)
        .rev()
        .map(|j| {
            let c = (std::f64::consts::PI * j as f64 / lead as f64).cos();
            c * c
        })
        .collect();

    let grid = extrema_grid(prob.k);
    let mut coeffs = vec![0.0; md];
    let mut leveled = 0.0;
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut gap = f64::INFINITY;

    for iter in 1..=MAX_ITERATIONS {
        solve_reference(&reference, md, weight, target, &mut coeffs, &mut leveled)?;

        let err = |y: f64| weight(y) * (target(y) - eval_shifted_chebyshev(&coeffs, y));
        let extrema = scan_extrema(err, &grid);
        let e_max = extrema.iter().fold(0.0_f64, |m, &(_, e)| m.max(e.abs()));
        if e_max == 0.0 {
            return Ok(finish(prob, parity, &coeffs, iter));
        }
        gap = (e_max - leveled.abs()).max(0.0) / e_max;
        if best.as_ref().is_none_or(|(b, _, _)| e_max < *b) {
            best = Some((e_max, coeffs.clone(), iter));
        }
        if gap <= GAP_TOL {
            return Ok(finish(prob, parity, &coeffs, iter));
        }

        reference = exchange(&extrema, md + 1).ok_or_else(|| {
            stall_error(prob, parity, best.as_ref().unwrap(), gap)
        })?;
        if parity == 1 && reference[0] <= 0.0 {
            // The weighted error vanishes at 0, so a zero reference point
            // can only come from a degenerate scan.
            return Err(stall_error(prob, parity, best.as_ref().unwrap(), gap));
        }
    }

    Err(stall_error(prob, parity, best.as_ref().unwrap(), gap))
}

fn stall_error(
    prob: &ApproxProblem,
    parity: usize,
    best: &(f64, Vec<f64>, usize),
    gap: f64,
) -> Error {
    let (_, coeffs, iter) = best;
    Error::ExchangeStalled {
        iterations: MAX_ITERATIONS,
        gap,
        best: Box::new(finish(prob, parity, coeffs, *iter)),
    }
}

/// Chebyshev-spaced scan grid on [0, 1] in y, which is uniform in the
/// x-domain angle and therefore resolves every oscillation of the residual.
fn extrema_grid(k: usize) -> Vec<f64> {
    let m = (16 * k).max(2048);
    (0..=m)
        .map(|i| {
            let c = (std::f64::consts::PI * i as f64 / m as f64).cos();
            ((1.0 + c) / 2.0).clamp(0.0, 1.0)
        })
        .rev()
        .collect()
}

/// Solve the leveled interpolation system on the reference:
/// `q(y_i) + (-1)^i h / w(y_i) = F(y_i)`.
fn solve_reference(
    reference: &[f64],
    md: usize,
    weight: impl Fn(f64) -> f64,
    target: impl Fn(f64) -> f64,
    coeffs: &mut Vec<f64>,
    leveled: &mut f64,
) -> Result<()> {
    let n = md + 1;
    debug_assert_eq!(reference.len(), n);
    let a = Mat::from_fn(n, n, |i, j| {
        if j < md {
            shifted_chebyshev(j, reference[i])
        } else {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s / weight(reference[i])
        }
    });
    let rhs: Vec<f64> = reference.iter().map(|&y| target(y)).collect();
    let sol = solve_dense(&a, &rhs).ok_or_else(|| {
        Error::InvalidArgument("degenerate exchange reference (singular leveling system)".into())
    })?;
    coeffs.clear();
    coeffs.extend_from_slice(&sol[..md]);
    *leveled = sol[md];
    Ok(())
}

/// `T_j(2y - 1)`.
fn shifted_chebyshev(j: usize, y: f64) -> f64 {
    cheb::chebyshev_eval(j, 2.0 * y - 1.0)
}

/// Clenshaw evaluation of `sum_j c_j T_j(2y - 1)`.
fn eval_shifted_chebyshev(coeffs: &[f64], y: f64) -> f64 {
    let u = 2.0 * y - 1.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let next = 2.0 * u * b1 - b2 + c;
        b2 = b1;
        b1 = next;
    }
    u * b1 - b2 + coeffs.first().copied().unwrap_or(0.0)
}

/// Locate the signed local extrema of `f` over the grid and sharpen each by
/// golden-section on |f|. Sorted ascending.
fn scan_extrema(f: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<(f64, f64)> {
    let vals: Vec<f64> = grid.iter().map(|&y| f(y)).collect();
    let n = grid.len();
    let mut out = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || vals[i].abs() >= vals[i - 1].abs();
        let right_ok = i + 1 == n || vals[i].abs() >= vals[i + 1].abs();
        if !(left_ok && right_ok) {
            continue;
        }
        if i > 0 && vals[i].abs() == vals[i - 1].abs() && vals[i].abs() > 0.0 {
            continue;
        }
        let lo = if i > 0 { grid[i - 1] } else { grid[i] };
        let hi = if i + 1 < n { grid[i + 1] } else { grid[i] };
        let (y, _) = cheb::golden_max(|y| f(y).abs(), lo, hi);
        out.push((y, f(y)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-14);
    out
}

/// Multi-point exchange: merge consecutive same-sign extrema keeping the
/// largest magnitude, then trim ends (always the smaller one, so the global
/// maximizer stays) until exactly `want` points remain.
fn exchange(extrema: &[(f64, f64)], want: usize) -> Option<Vec<f64>> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for &(y, e) in extrema {
        if e == 0.0 {
            continue;
        }
        match merged.last_mut() {
            Some(last) if last.1.signum() == e.signum() => {
                if e.abs() > last.1.abs() {
                    *last = (y, e);
                }
            }
            _ => merged.push((y, e)),
        }
    }
    if merged.len() < want {
        return None;
    }
    while merged.len() > want {
        if merged.first().unwrap().1.abs() <= merged.last().unwrap().1.abs() {
            merged.remove(0);
        } else {
            merged.pop();
        }
    }
    Some(merged.iter().map(|&(y, _)| y).collect())
}

/// Expand the reduced Chebyshev solve into monomial coefficients on the
/// original interval and verify the sup on the full residual.
fn finish(prob: &ApproxProblem, parity: usize, coeffs: &[f64], iterations: usize) -> ApproxSolution {
    let md = coeffs.len();
    let mut alpha = vec![0.0; prob.t];
    if md > 0 {
        // Shifted-Chebyshev rows in monomial y powers:
        // S_{j+1} = (4y - 2) S_j - S_{j-1}.
        let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
        if md > 1 {
            rows.push(vec![-1.0, 2.0]);
        }
        for j in 2..md {
            let mut next = vec![0.0; j + 1];
            for (i, &c) in rows[j - 1].iter().enumerate() {
                next[i + 1] += 4.0 * c;
                next[i] -= 2.0 * c;
            }
            for (i, &c) in rows[j - 2].iter().enumerate() {
                next[i] -= c;
            }
            rows.push(next);
        }
        let mut d = vec![0.0; md];
        for (j, &c) in coeffs.iter().enumerate() {
            for (i, &r) in rows[j].iter().enumerate() {
                d[i] += c * r;
            }
        }
        let n = prob.target_degree();
        for (i, &di) in d.iter().enumerate() {
            let t = 2 * i + parity;
            if t < prob.t {
                alpha[t] = di * prob.rho.powi((n - t) as i32);
            }
        }
    }
    let sup_error = cheb::verified_sup_error(&alpha, prob);
    let (_, equioscillation_residual) = cheb::certify_equioscillation(&alpha, prob);
    ApproxSolution {
        alpha,
        sup_error,
        iterations,
        equioscillation_residual,
    }
}
