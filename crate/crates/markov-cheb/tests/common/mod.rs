//! Shared helpers for the integration and acceptance suites.
//!
//! The LP solver here is deliberately independent of the crate's
//! interior-point path: a textbook two-phase revised simplex working on the
//! dual of `min c.z s.t. G z <= h`, whose basis stays at the (tiny) number
//! of primal variables. It backs the scalarization-path oracle.

#![allow(dead_code)]

pub mod oracles;

use markov_cheb::linalg::{solve_dense, Mat};
use markov_cheb::lti::StateSpace;

/// The stable six-mode benchmark system.
pub fn six_mode_system() -> StateSpace {
    StateSpace::new(
        vec![0.94, 0.75, -0.75, -0.69, 0.46, 0.42],
        vec![1.0; 6],
        0.95,
    )
    .unwrap()
}

const LP_TOL: f64 = 1e-11;
const LP_MAX_ITERS: usize = 20_000;

/// Minimize `c.z` subject to `rows[i] . z <= h[i]` with free variables,
/// via primal simplex on the standard-form dual
/// `min h.y  s.t.  G' y = -c, y >= 0`.
///
/// Returns the optimal primal point recovered from the final active set,
/// or None when the solve degenerates (never expected on the oracle
/// instances, which would then fail loudly).
pub fn solve_inequality_lp(rows: &[Vec<f64>], h: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let p = c.len();
    let m = rows.len();
    assert!(m >= p, "need at least as many constraints as variables");
    assert!(rows.iter().all(|r| r.len() == p));
    assert_eq!(h.len(), m);

    // Dual standard form: columns 0..m are the constraint multipliers,
    // columns m..m+p are Phase-1 artificials. Row r of the equality system
    // is sum_j rows[j][r] y_j = -c[r], sign-flipped so the rhs is >= 0.
    let flip: Vec<f64> = (0..p).map(|r| if -c[r] < 0.0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = (0..p).map(|r| flip[r] * -c[r]).collect();
    let column = |j: usize, r: usize| -> f64 {
        if j < m {
            flip[r] * rows[j][r]
        } else {
            // Artificial for row j - m.
            if j - m == r {
                1.0
            } else {
                0.0
            }
        }
    };

    let mut basis: Vec<usize> = (m..m + p).collect();

    // One simplex phase: minimize `cost` over the current basis until no
    // column prices out. Returns false when the basis matrix goes singular.
    let run_phase = |basis: &mut Vec<usize>,
                         cost: &dyn Fn(usize) -> f64,
                         allow: &dyn Fn(usize) -> bool|
     -> Option<()> {
        let mut stall = 0usize;
        for _ in 0..LP_MAX_ITERS {
            let bmat = Mat::from_fn(p, p, |r, i| column(basis[i], r));
            let xb = solve_dense(&bmat, &b)?;
            let cb: Vec<f64> = basis.iter().map(|&j| cost(j)).collect();
            // Simplex multipliers: B' pi = c_B.
            let pi = solve_dense(&bmat.transpose(), &cb)?;

            // Price: most negative reduced cost (Bland's rule once
            // degeneracy stalls progress).
            let bland = stall > 4 * (p + 2);
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..m {
                if !allow(j) || basis.contains(&j) {
                    continue;
                }
                let mut red = cost(j);
                for r in 0..p {
                    red -= pi[r] * column(j, r);
                }
                if red < -LP_TOL {
                    if bland {
                        enter = Some((j, red));
                        break;
                    }
                    if enter.as_ref().is_none_or(|&(_, best)| red < best) {
                        enter = Some((j, red));
                    }
                }
            }
            let Some((enter_j, _)) = enter else {
                return Some(());
            };

            // Ratio test on B^-1 A_j.
            let aj: Vec<f64> = (0..p).map(|r| column(enter_j, r)).collect();
            let dir = solve_dense(&bmat, &aj)?;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..p {
                if dir[i] > 1e-11 {
                    let ratio = xb[i] / dir[i];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && bland && basis[i] < basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((leave_i, step)) = leave else {
                // Unbounded phase; cannot happen for a feasible bounded
                // primal, so treat as failure.
                return None;
            };
            if step <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            basis[leave_i] = enter_j;
        }
        None
    };

    // Phase 1: drive the artificials to zero.
    run_phase(
        &mut basis,
        &|j| if j >= m { 1.0 } else { 0.0 },
        &|_| true,
    )?;
    {
        let bmat = Mat::from_fn(p, p, |r, i| column(basis[i], r));
        let xb = solve_dense(&bmat, &b)?;
        let infeas: f64 = basis
            .iter()
            .zip(&xb)
            .filter(|(j, _)| **j >= m)
            .map(|(_, v)| v.abs())
            .sum();
        if infeas > 1e-9 {
            return None;
        }
    }

    // Pivot any zero-level artificial out of the basis (the equality rows
    // are independent, so a real replacement column always exists).
    for i in 0..p {
        if basis[i] < m {
            continue;
        }
        let bmat = Mat::from_fn(p, p, |r, bi| column(basis[bi], r));
        let replacement = (0..m).find(|j| {
            if basis.contains(j) {
                return false;
            }
            let aj: Vec<f64> = (0..p).map(|r| column(*j, r)).collect();
            match solve_dense(&bmat, &aj) {
                Some(dir) => dir[i].abs() > 1e-9,
                None => false,
            }
        })?;
        basis[i] = replacement;
    }

    // Phase 2 on the real objective, artificials barred.
    run_phase(&mut basis, &|j| if j < m { h[j] } else { 0.0 }, &|j| j < m)?;

    // Primal recovery: the final basis names p active constraints.
    if basis.iter().any(|&j| j >= m) {
        return None;
    }
    let active = Mat::from_fn(p, p, |r, i| rows[basis[r]][i]);
    let rhs: Vec<f64> = basis.iter().map(|&j| h[j]).collect();
    solve_dense(&active, &rhs)
}

#[cfg(test)]
mod lp_tests {
    use super::*;

    #[test]
    fn simplex_solves_small_lp() {
        // min -x - 2y s.t. x <= 3, y <= 4, x + y <= 5, -x <= 0, -y <= 0.
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ];
        let h = vec![3.0, 4.0, 5.0, 0.0, 0.0];
        let z = solve_inequality_lp(&rows, &h, &[-1.0, -2.0]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-9);
        assert!((z[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn simplex_chebyshev_center_style() {
        // min s s.t. |a - c_i| <= s over c = {0, 1, 5}: a* = 2.5, s* = 2.5.
        let mut rows = Vec::new();
        let mut h = Vec::new();
        for &ci in &[0.0, 1.0, 5.0] {
            rows.push(vec![1.0, -1.0]);
            h.push(ci);
            rows.push(vec![-1.0, -1.0]);
            h.push(-ci);
        }
        let z = solve_inequality_lp(&rows, &h, &[0.0, 1.0]).unwrap();
        assert!((z[0] - 2.5).abs() < 1e-9);
        assert!((z[1] - 2.5).abs() < 1e-9);
    }
}
