//! Comparison methods: finite-time Ho-Kalman realization and truncation.
//!
//! Ho-Kalman assembles the Hankel matrix of the known Markov parameters,
//! takes a rank-limited SVD and reads a balanced realization off the
//! observability/controllability factors; unknown parameters are then
//! extrapolated through the realized state matrix. With noisy data the
//! realized matrix routinely picks up spurious unstable poles and the
//! extrapolation diverges with k — that failure mode is part of what the
//! bench measures, so no stabilizing projection is applied.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, Mat};
use crate::lti::MarkovSequence;

/// Floor applied to singular values before inversion, relative to the
/// largest one. Keeps near-rank-deficient Hankel matrices from amplifying
/// numerical nullspace while letting the ill-conditioning show up in the
/// result.
const SV_FLOOR: f64 = 1e-12;

/// Realized state-space triple with SVD diagnostics.
#[derive(Debug, Clone)]
pub struct Realization {
    pub a_hat: Mat,
    pub b_hat: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub n_hat: usize,
    pub singular_values: Vec<f64>,
    /// Set when the retained spectrum reaches the singular-value floor.
    pub ill_conditioned: bool,
}

/// Hankel matrix with entry (i, j) = H_(i+j-1) (1-based indices).
pub fn hankel(markov: &MarkovSequence, d1: usize, d2: usize) -> Result<Mat> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Dimension("Hankel dimensions must be positive".into()));
    }
    if d1 + d2 - 1 > markov.len() {
        return Err(Error::Dimension(format!(
            "a {d1}x{d2} Hankel matrix needs {} parameters, got {}",
            d1 + d2 - 1,
            markov.len()
        )));
    }
    Ok(Mat::from_fn(d1, d2, |i, j| markov.values()[i + j]))
}

/// Default Hankel split for a horizon of t known parameters: d1 = floor(t/2)
/// and d2 = t - d1, so the shifted matrix consumes exactly H_t.
pub fn default_hankel_dims(t: usize) -> (usize, usize) {
    let d1 = (t / 2).max(1);
    (d1, t - d1)
}

/// Pick a realization order from the largest relative gap in the singular
/// value sequence.
pub fn order_by_gap(sigma: &[f64]) -> usize {
    if sigma.is_empty() || sigma[0] == 0.0 {
        return 1;
    }
    let mut best = (1usize, 0.0_f64);
    for j in 1..sigma.len() {
        let denom = sigma[j].max(SV_FLOOR * sigma[0]);
        let ratio = sigma[j - 1] / denom;
        if ratio > best.1 {
            best = (j, ratio);
        }
    }
    best.0
}

/// Finite-time Ho-Kalman: rank-`order` truncated SVD of the Hankel matrix,
/// observability factor `U sqrt(S)`, controllability factor `sqrt(S) V'`,
/// and the state matrix from the shifted Hankel matrix.
///
/// Needs `d1 + d2 <= markov.len()` (the shift consumes one extra parameter)
/// and `order <= min(d1, d2)`. Rank deficiency at the requested order is
/// not an error; it is reported through `ill_conditioned`.
pub fn ho_kalman(
    markov: &MarkovSequence,
    order: usize,
    d1: usize,
    d2: usize,
) -> Result<Realization> {
    if d1 + d2 > markov.len() {
        return Err(Error::Dimension(format!(
            "Ho-Kalman with a {d1}x{d2} Hankel matrix needs {} parameters, got {}",
            d1 + d2,
            markov.len()
        )));
    }
    if order == 0 || order > d1.min(d2) {
        return Err(Error::InvalidArgument(format!(
            "realization order {order} must lie in 1..={}",
            d1.min(d2)
        )));
    }

    let h = hankel(markov, d1, d2)?;
    // Shifted Hankel: entry (i, j) = H_(i+j) (1-based).
    let h_plus = Mat::from_fn(d1, d2, |i, j| markov.values()[i + j + 1]);
    let svd = jacobi_svd(&h);
    let sigma_max = svd.sigma[0];
    let ill_conditioned = sigma_max == 0.0 || svd.sigma[order - 1] < SV_FLOOR * sigma_max;

    if sigma_max == 0.0 {
        return Ok(Realization {
            a_hat: Mat::zeros(order, order),
            b_hat: vec![0.0; order],
            c_hat: vec![0.0; order],
            n_hat: order,
            singular_values: svd.sigma,
            ill_conditioned,
        });
    }

    let sqrt_s: Vec<f64> = (0..order).map(|j| svd.sigma[j].sqrt()).collect();
    let inv_sqrt_s: Vec<f64> = (0..order)
        .map(|j| 1.0 / svd.sigma[j].max(SV_FLOOR * sigma_max).sqrt())
        .collect();

    // c = first row of U sqrt(S); b = first column of sqrt(S) V'.
    let c_hat: Vec<f64> = (0..order).map(|j| svd.u[(0, j)] * sqrt_s[j]).collect();
    let b_hat: Vec<f64> = (0..order).map(|j| sqrt_s[j] * svd.v[(0, j)]).collect();

    // a = S^(-1/2) U' H+ V S^(-1/2).
    let mut a_hat = Mat::zeros(order, order);
    for p in 0..order {
        for q in 0..order {
            let mut acc = 0.0;
            for i in 0..d1 {
                let up = svd.u[(i, p)];
                if up == 0.0 {
                    continue;
                }
                for j in 0..d2 {
                    acc += up * h_plus[(i, j)] * svd.v[(j, q)];
                }
            }
            a_hat[(p, q)] = inv_sqrt_s[p] * acc * inv_sqrt_s[q];
        }
    }

    Ok(Realization {
        a_hat,
        b_hat,
        c_hat,
        n_hat: order,
        singular_values: svd.sigma,
        ill_conditioned,
    })
}

/// `c A^(k-1) b` by repeated matrix-vector products. Divergence of an
/// unstable realization saturates to IEEE infinity rather than failing.
pub fn extrapolate(real: &Realization, k: usize) -> f64 {
    assert!(k >= 1, "Markov parameters are indexed from 1");
    let mut v = real.b_hat.clone();
    for _ in 1..k {
        v = real.a_hat.matvec(&v);
    }
    real.c_hat.iter().zip(&v).map(|(c, x)| c * x).sum()
}

/// Spectral radius estimate of the realized state matrix via power
/// iteration on A'A paired with value growth; used by the bench to flag
/// diverging extrapolations.
pub fn spectral_radius_estimate(a: &Mat) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    // Power iteration on A directly; restart from a couple of axes in case
    // the first start is orthogonal to the dominant eigenvector.
    let mut best = 0.0_f64;
    for start in 0..n.min(3) {
        let mut v = vec![0.0; n];
        v[start] = 1.0;
        let mut lambda = 0.0;
        for _ in 0..200 {
            let w = a.matvec(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            lambda = norm;
            v = w.into_iter().map(|x| x / lambda).collect();
        }
        best = best.max(lambda);
    }
    best
}

/// Truncation baseline: keep known parameters, estimate every later one as
/// zero.
pub fn truncation_estimate(markov: &MarkovSequence, k: usize) -> f64 {
    assert!(k >= 1, "Markov parameters are indexed from 1");
    markov.get(k).unwrap_or(0.0)
}
