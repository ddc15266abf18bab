//! Primal-dual interior-point solver for small dense convex QPs
//!
//! ```text
//!     minimize    1/2 x' diag(p) x + q' x
//!     subject to  G x <= h
//! ```
//!
//! with a (possibly singular) diagonal quadratic term, which is all the
//! epigraph reformulation of the penalized approximation problem needs:
//! a handful of variables against a few thousand inequality rows. Each
//! Newton step eliminates the slack/multiplier block and solves the
//! condensed system `(diag(p) + G' D G) dx = rhs` by Cholesky; a Mehrotra
//! predictor-corrector picks the centering weight.

use crate::linalg::{cholesky_factor, cholesky_solve, Mat};

const MAX_ITERATIONS: usize = 100;
// The multipliers accumulate roundoff through the scaled Newton steps, so
// the dual residual has a floating-point floor that grows with the row
// count (a few 1e-9 at 8000 rows even with iterative refinement). 1e-8 is
// reliably attainable; the induced objective error is second order
// (~1e-13), far below every behavioral tolerance downstream.
const FEAS_TOL: f64 = 1e-8;
const GAP_TOL: f64 = 1e-11;
const STEP_BACKOFF: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct QpResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub status: QpStatus,
    /// Final complementarity gap (mean of w_i lambda_i).
    pub gap: f64,
}

/// Solve the QP from a strictly feasible starting point (`G x0 < h`
/// componentwise, which the caller must guarantee).
pub fn solve_qp_diag(p_diag: &[f64], q: &[f64], g: &Mat, h: &[f64], x0: &[f64]) -> QpResult {
    let n = q.len();
    let m = h.len();
    assert_eq!(p_diag.len(), n);
    assert_eq!(g.cols(), n);
    assert_eq!(g.rows(), m);
    assert_eq!(x0.len(), n);

    let mut x = x0.to_vec();
    let mut w: Vec<f64> = {
        let gx = g.matvec(&x);
        h.iter().zip(&gx).map(|(hi, gi)| hi - gi).collect()
    };
    assert!(
        w.iter().all(|&wi| wi > 0.0),
        "interior-point start must be strictly feasible"
    );
    let mut lambda = vec![1.0_f64; m];

    let q_scale = 1.0 + q.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let h_scale = 1.0 + h.iter().fold(0.0_f64, |s, v| s.max(v.abs()));

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stall_count = 0usize;
    let mut prev_metric = f64::INFINITY;

    for iter in 1..=MAX_ITERATIONS {
        // Residuals.
        let gx = g.matvec(&x);
        let r_p: Vec<f64> = (0..m).map(|i| gx[i] + w[i] - h[i]).collect();
        let gt_lambda = mat_t_vec(g, &lambda);
        let r_d: Vec<f64> = (0..n)
            .map(|j| p_diag[j] * x[j] + q[j] + gt_lambda[j])
            .collect();
        let mu = w.iter().zip(&lambda).map(|(a, b)| a * b).sum::<f64>() / m as f64;

        let rd_norm = r_d.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let rp_norm = r_p.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let obj = objective(p_diag, q, &x);
        if std::env::var_os("MARKOV_CHEB_QP_TRACE").is_some() {
            eprintln!("iter {iter}: rd {rd_norm:.3e} rp {rp_norm:.3e} mu {mu:.3e} obj {obj:.9e}");
        }
        let metric = rd_norm / q_scale + rp_norm / h_scale + mu;
        if best.as_ref().is_none_or(|(b, _)| metric < *b) {
            best = Some((metric, x.clone()));
        }

        if rd_norm <= FEAS_TOL * q_scale
            && rp_norm <= FEAS_TOL * h_scale
            && mu <= GAP_TOL * (1.0 + obj.abs())
        {
            return QpResult {
                x,
                iterations: iter,
                status: QpStatus::Converged,
                gap: mu,
            };
        }

        if metric > prev_metric * 0.999 {
            stall_count += 1;
        } else {
            stall_count = 0;
        }
        prev_metric = metric;
        if stall_count >= 15 {
            return QpResult {
                x: best.unwrap().1,
                iterations: iter,
                status: QpStatus::Stalled,
                gap: mu,
            };
        }

        // Condensed Newton matrix P + G' D G with D = lambda / w.
        let d: Vec<f64> = (0..m).map(|i| lambda[i] / w[i]).collect();
        let mut hmat = Mat::zeros(n, n);
        for j in 0..n {
            hmat[(j, j)] = p_diag[j];
        }
        for i in 0..m {
            let di = d[i];
            if di == 0.0 {
                continue;
            }
            for a in 0..n {
                let ga = g[(i, a)];
                if ga == 0.0 {
                    continue;
                }
                let gda = di * ga;
                for b in a..n {
                    hmat[(a, b)] += gda * g[(i, b)];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                hmat[(a, b)] = hmat[(b, a)];
            }
        }
        let factor = match factor_with_jitter(&hmat) {
            Some(f) => f,
            None => {
                return QpResult {
                    x: best.unwrap().1,
                    iterations: iter,
                    status: QpStatus::Stalled,
                    gap: mu,
                }
            }
        };

        // Solve the condensed system with one round of iterative
        // refinement; the endgame matrix is ill-conditioned and the raw
        // Cholesky solve alone leaves a dual-residual floor.
        let solve_condensed = |rhs: &[f64]| {
            let mut dx = cholesky_solve(&factor, rhs);
            let hdx = hmat.matvec(&dx);
            let resid: Vec<f64> = (0..n).map(|j| rhs[j] - hdx[j]).collect();
            let corr = cholesky_solve(&factor, &resid);
            for j in 0..n {
                dx[j] += corr[j];
            }
            dx
        };

        // Predictor (sigma = 0, r_c = w .* lambda).
        let solve_step = |r_c: &[f64], r_p: &[f64], r_d: &[f64]| {
            let mut rhs = vec![0.0; n];
            // rhs = -r_d - G'(d .* r_p) + G'(r_c ./ w)
            let mix: Vec<f64> = (0..m).map(|i| -d[i] * r_p[i] + r_c[i] / w[i]).collect();
            let gt_mix = mat_t_vec(g, &mix);
            for j in 0..n {
                rhs[j] = -r_d[j] + gt_mix[j];
            }
            let dx = solve_condensed(&rhs);
            let g_dx = g.matvec(&dx);
            let dlambda: Vec<f64> = (0..m)
                .map(|i| d[i] * (g_dx[i] + r_p[i]) - r_c[i] / w[i])
                .collect();
            let dw: Vec<f64> = (0..m).map(|i| -r_p[i] - g_dx[i]).collect();
            (dx, dw, dlambda)
        };

        let r_c_aff: Vec<f64> = (0..m).map(|i| w[i] * lambda[i]).collect();
        let (_dx_aff, dw_aff, dl_aff) = solve_step(&r_c_aff, &r_p, &r_d);
        let alpha_aff = step_to_boundary(&w, &dw_aff).min(step_to_boundary(&lambda, &dl_aff));
        let mu_aff = (0..m)
            .map(|i| (w[i] + alpha_aff * dw_aff[i]) * (lambda[i] + alpha_aff * dl_aff[i]))
            .sum::<f64>()
            / m as f64;
        let mut sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // Keep the gap from collapsing orders of magnitude below what the
        // unconverged residuals support: past that point the scaling matrix
        // spread only destroys the accuracy of the Newton direction.
        if rd_norm > FEAS_TOL * q_scale || rp_norm > FEAS_TOL * h_scale {
            let gap_floor = 0.01 * GAP_TOL * (1.0 + obj.abs());
            if sigma * mu < gap_floor {
                sigma = (gap_floor / mu).clamp(sigma, 1.0);
            }
        }

        // Corrector.
        let r_c: Vec<f64> = (0..m)
            .map(|i| w[i] * lambda[i] - sigma * mu + dw_aff[i] * dl_aff[i])
            .collect();
        let (dx, dw, dlambda) = solve_step(&r_c, &r_p, &r_d);
        let alpha = (STEP_BACKOFF
            * step_to_boundary(&w, &dw).min(step_to_boundary(&lambda, &dlambda)))
        .min(1.0);

        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for i in 0..m {
            w[i] += alpha * dw[i];
            lambda[i] += alpha * dlambda[i];
        }
    }

    let gap = w.iter().zip(&lambda).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    QpResult {
        x: best.unwrap().1,
        iterations: MAX_ITERATIONS,
        status: QpStatus::MaxIterations,
        gap,
    }
}

fn objective(p_diag: &[f64], q: &[f64], x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(j, &xj)| 0.5 * p_diag[j] * xj * xj + q[j] * xj)
        .sum()
}

fn mat_t_vec(g: &Mat, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.cols()];
    for i in 0..g.rows() {
        let vi = v[i];
        if vi == 0.0 {
            continue;
        }
        for j in 0..g.cols() {
            out[j] += g[(i, j)] * vi;
        }
    }
    out
}

/// Largest step keeping every component of `v + alpha dv` nonnegative,
/// capped at 1.
fn step_to_boundary(v: &[f64], dv: &[f64]) -> f64 {
    let mut alpha = 1.0_f64;
    for (vi, dvi) in v.iter().zip(dv) {
        if *dvi < 0.0 {
            alpha = alpha.min(-vi / dvi);
        }
    }
    alpha
}

fn factor_with_jitter(h: &Mat) -> Option<Mat> {
    let n = h.rows();
    let scale = (0..n).fold(0.0_f64, |s, i| s.max(h[(i, i)].abs())) + 1.0;
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut trial = h.clone();
        if jitter > 0.0 {
            for i in 0..n {
                trial[(i, i)] += jitter;
            }
        }
        if cholesky_factor(&mut trial) {
            return Some(trial);
        }
        jitter = if jitter == 0.0 { 1e-13 * scale } else { jitter * 100.0 };
    }
    None
}
