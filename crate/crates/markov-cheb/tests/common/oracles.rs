//! Oracles for the penalized solver, shared by the oracle-equivalence and
//! acceptance suites. See `solver_oracles.rs` for the methodology.

use super::solve_inequality_lp;
use markov_cheb::cheb::{verified_sup_error, ApproxProblem};
use markov_cheb::regularized::{build_constraint_grid, solve_regularized, RegProblem};
use rayon::prelude::*;

pub struct Instance {
    pub k: usize,
    pub t: usize,
    pub rho: f64,
    pub gamma: f64,
}

pub fn lattice() -> Vec<Instance> {
    let mut out = Vec::new();
    for &t in &[2usize, 3, 4] {
        for &k in &[t + 1, t + 3] {
            for &rho in &[0.5, 0.95] {
                for &gamma in &[0.0, 1e-3, 0.1] {
                    out.push(Instance { k, t, rho, gamma });
                }
            }
        }
    }
    // Single-coefficient edge: constants approximating an even power.
    out.push(Instance {
        k: 3,
        t: 1,
        rho: 0.9,
        gamma: 1e-2,
    });
    out
}

pub fn tol(f: f64) -> f64 {
    (1e-6 * f.abs()).max(1e-5)
}

/// Constraint rows shared by the QP and the LP oracle: variables
/// (a_0..a_{m-1}, v_0..v_{m-1}, s, u).
pub fn constraint_rows(prob: &RegProblem) -> (Vec<Vec<f64>>, Vec<f64>, Vec<usize>) {
    let base = &prob.base;
    let idx = base.parity_indices();
    let m = idx.len();
    let grid = build_constraint_grid(prob);
    let p = 2 * m + 2;
    let mut rows = Vec::new();
    let mut h = Vec::new();
    for &x in &grid {
        let f = x.powi(base.target_degree() as i32);
        for sign in [-1.0, 1.0] {
            let mut row = vec![0.0; p];
            for (j, &ti) in idx.iter().enumerate() {
                row[j] = sign * x.powi(ti as i32);
            }
            row[2 * m] = -1.0;
            rows.push(row);
            h.push(sign * f);
        }
    }
    for t in 0..m {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; p];
            row[t] = sign;
            row[m + t] = -1.0;
            rows.push(row);
            h.push(0.0);
        }
    }
    let mut row = vec![0.0; p];
    for v in row.iter_mut().take(2 * m).skip(m) {
        *v = 1.0;
    }
    row[2 * m + 1] = -1.0;
    rows.push(row);
    h.push(0.0);
    (rows, h, idx)
}

/// True penalized objective of a reduced coefficient vector.
pub fn true_objective(prob: &RegProblem, idx: &[usize], reduced: &[f64]) -> f64 {
    let mut alpha = vec![0.0; prob.base.t];
    for (j, &t) in idx.iter().enumerate() {
        alpha[t] = reduced[j];
    }
    let sup = verified_sup_error(&alpha, &prob.base);
    let l1: f64 = reduced.iter().map(|a| a.abs()).sum();
    sup * sup + prob.gamma * l1 * l1
}

/// Best objective along the scalarization path: LP vertices for a sweep of
/// weights, plus the segments between consecutive vertices (at a frontier
/// breakpoint the whole edge is optimal, and the penalized optimum can sit
/// strictly inside one; the objective is convex along a segment, so a
/// golden-section scan finds its minimum).
pub fn scalarization_oracle(prob: &RegProblem, qp_sup: f64, qp_l1: f64) -> f64 {
    let (rows, h, idx) = constraint_rows(prob);
    let m = idx.len();
    let p = 2 * m + 2;

    let mut mus = vec![0.0];
    if prob.gamma > 0.0 {
        let mu_hat = (prob.gamma * qp_l1.max(1e-9) / qp_sup.max(1e-12)).max(1e-12);
        let lo = mu_hat * 1e-2;
        let hi = mu_hat * 1e2;
        let steps = 80;
        for i in 0..=steps {
            mus.push(lo * (hi / lo).powf(i as f64 / steps as f64));
        }
        // Coarse wings in case the balance estimate is off.
        for e in [-6, -4, 3, 5] {
            mus.push(mu_hat * 10f64.powi(e));
        }
    }
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let vertices: Vec<Vec<f64>> = mus
        .par_iter()
        .map(|&mu| {
            let mut c = vec![0.0; p];
            c[2 * m] = 1.0;
            c[2 * m + 1] = mu;
            let z = solve_inequality_lp(&rows, &h, &c)
                .unwrap_or_else(|| panic!("LP oracle failed at mu = {mu}"));
            z[..m].to_vec()
        })
        .collect();

    let mut best = vertices
        .iter()
        .map(|v| true_objective(prob, &idx, v))
        .fold(f64::INFINITY, f64::min);

    let golden: f64 = 0.618_033_988_749_894_9;
    for pair in vertices.windows(2) {
        let (v0, v1) = (&pair[0], &pair[1]);
        if v0.iter().zip(v1).all(|(a, b)| (a - b).abs() < 1e-12) {
            continue;
        }
        let eval = |lam: f64| {
            let mix: Vec<f64> = v0
                .iter()
                .zip(v1)
                .map(|(a, b)| a + lam * (b - a))
                .collect();
            true_objective(prob, &idx, &mix)
        };
        let (mut a, mut b) = (0.0_f64, 1.0_f64);
        let mut x1 = b - golden * (b - a);
        let mut x2 = a + golden * (b - a);
        let (mut f1, mut f2) = (eval(x1), eval(x2));
        for _ in 0..60 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - golden * (b - a);
                f1 = eval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + golden * (b - a);
                f2 = eval(x2);
            }
        }
        best = best.min(f1.min(f2));
    }
    best
}

/// Exhaustive lattice search (grid-surrogate objective with pruning).
/// Returns the best objective found, evaluated with the same grid max as
/// the box scan so pruning stays exact, then re-evaluated with the
/// verified sup at the winner.
pub fn lattice_oracle(prob: &RegProblem, center: &[f64]) -> f64 {
    let base = &prob.base;
    let idx = base.parity_indices();
    let m = idx.len();
    assert!(m >= 1 && m <= 2, "lattice oracle expects tiny instances");
    let grid = build_constraint_grid(prob);
    let f: Vec<f64> = grid
        .iter()
        .map(|&x| x.powi(base.target_degree() as i32))
        .collect();
    let powers: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| idx.iter().map(|&t| x.powi(t as i32)).collect())
        .collect();

    let step = 1e-3_f64;
    let half = 1.0_f64;
    let n_steps = (2.0 * half / step).round() as usize;
    let axis = |c: f64| -> Vec<f64> { (0..=n_steps).map(|i| c - half + i as f64 * step).collect() };

    let eval = |a: &[f64], prune_at: f64| -> f64 {
        let u: f64 = a.iter().map(|x| x.abs()).sum();
        let pen = prob.gamma * u * u;
        if pen > prune_at {
            return f64::INFINITY;
        }
        let mut s = 0.0_f64;
        for i in 0..grid.len() {
            let mut r = f[i];
            for j in 0..a.len() {
                r -= a[j] * powers[i][j];
            }
            let r = r.abs();
            if r > s {
                s = r;
                if s * s + pen > prune_at {
                    return f64::INFINITY;
                }
            }
        }
        s * s + pen
    };

    let a0 = axis(center[0]);
    let best = if m == 1 {
        let mut best = f64::INFINITY;
        for &a in &a0 {
            let prune = best + 2.0 * tol(best.min(1e6));
            best = best.min(eval(&[a], prune));
        }
        best
    } else {
        let a1 = axis(center[1]);
        // Seed the prune threshold with the center to keep early rows cheap.
        let seed = eval(center, f64::INFINITY);
        a0.par_iter()
            .map(|&x| {
                let mut best = seed;
                for &y in &a1 {
                    let prune = best + 2.0 * tol(best.min(1e6));
                    best = best.min(eval(&[x, y], prune));
                }
                best
            })
            .reduce(|| f64::INFINITY, f64::min)
    };
    best
}

/// Run the full T <= 4 lattice against both oracles; panics with a
/// diagnostic on the first mismatch. Returns the instance count.
pub fn check_full_lattice() -> usize {
    let instances = lattice();
    for inst in &instances {
        let base = ApproxProblem::new(inst.k, inst.t, inst.rho).unwrap();
        let prob = RegProblem::with_default_grid(base, inst.gamma).unwrap();
        let qp = solve_regularized(&prob);
        let label = format!(
            "k={} t={} rho={} gamma={}",
            inst.k, inst.t, inst.rho, inst.gamma
        );
        if base.parity_dimension() == 0 {
            continue;
        }

        let path_best = scalarization_oracle(&prob, qp.sup_error, qp.l1_norm);
        assert!(
            qp.objective <= path_best + tol(path_best),
            "{label}: QP {} worse than scalarization path {path_best}",
            qp.objective
        );
        assert!(
            path_best <= qp.objective + tol(qp.objective),
            "{label}: path best {path_best} cannot reach QP {}",
            qp.objective
        );

        let zero = solve_regularized(&RegProblem::with_default_grid(base, 0.0).unwrap());
        let idx = base.parity_indices();
        let center: Vec<f64> = idx.iter().map(|&t| zero.alpha[t]).collect();
        let lattice_best = lattice_oracle(&prob, &center);
        assert!(
            qp.objective <= lattice_best + tol(lattice_best),
            "{label}: lattice point beats QP by more than tolerance: {lattice_best} vs {}",
            qp.objective
        );
    }
    instances.len()
}
