//! Diagonalizable SISO LTI systems and episodic impulse experiments.
//!
//! Systems are stored in diagonal canonical form: the state matrix is
//! `diag(lambda_1..lambda_n)`, the input column is all ones and the output
//! row carries the weights `c_1..c_n`. The k-th Markov parameter is then
//!
//! ```text
//! H_k = sum_j c_j * lambda_j^(k-1)
//! ```
//!
//! Process noise is restricted to a diagonal covariance, which gives the
//! steady-state covariance in closed form and keeps episode sampling to an
//! elementwise square root.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Diagonalizable SISO system with a known spectral bound.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    eigenvalues: Vec<f64>,
    output_weights: Vec<f64>,
    rho: f64,
}

impl StateSpace {
    /// Validates the spectral bound and dimension invariants.
    pub fn new(eigenvalues: Vec<f64>, output_weights: Vec<f64>, rho: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Dimension("state dimension must be at least 1".into()));
        }
        if eigenvalues.len() != output_weights.len() {
            return Err(Error::Dimension(format!(
                "eigenvalues ({}) and output weights ({}) differ in length",
                eigenvalues.len(),
                output_weights.len()
            )));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spectral bound must be a positive real, got {rho}"
            )));
        }
        for (i, l) in eigenvalues.iter().enumerate() {
            if !l.is_finite() || l.abs() > rho {
                return Err(Error::InvalidArgument(format!(
                    "eigenvalue {i} ({l}) lies outside [-{rho}, {rho}]"
                )));
            }
        }
        if output_weights.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("output weights must be finite".into()));
        }
        Ok(StateSpace {
            eigenvalues,
            output_weights,
            rho,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Modified system energy: the L1 norm of the output row.
    pub fn energy(&self) -> f64 {
        self.output_weights.iter().map(|c| c.abs()).sum()
    }

    /// True whenever all eigenvalue magnitudes are strictly below one.
    pub fn is_strictly_stable(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.abs() < 1.0)
    }

    fn require_strict_stability(&self) -> Result<()> {
        for (i, l) in self.eigenvalues.iter().enumerate() {
            if l.abs() >= 1.0 {
                return Err(Error::Unstable {
                    index: i,
                    magnitude: l.abs(),
                });
            }
        }
        Ok(())
    }
}

/// Diagonal process covariance, output-noise variance and the RNG seed for
/// episode simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    q_diag: Vec<f64>,
    r: f64,
    seed: u64,
}

impl NoiseModel {
    pub fn new(q_diag: Vec<f64>, r: f64, seed: u64) -> Result<Self> {
        if q_diag.iter().any(|q| !q.is_finite() || *q < 0.0) || !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidArgument(
                "noise variances must be nonnegative reals".into(),
            ));
        }
        Ok(NoiseModel { q_diag, r, seed })
    }

    /// A scalar q replicated over every mode.
    pub fn uniform(q: f64, n: usize, r: f64, seed: u64) -> Result<Self> {
        NoiseModel::new(vec![q; n], r, seed)
    }

    /// The all-zero noise model (deterministic episodes).
    pub fn none(n: usize) -> Self {
        NoiseModel {
            q_diag: vec![0.0; n],
            r: 0.0,
            seed: 0,
        }
    }

    pub fn q_diag(&self) -> &[f64] {
        &self.q_diag
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_zero(&self) -> bool {
        self.r == 0.0 && self.q_diag.iter().all(|&q| q == 0.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Outputs of a single impulse episode (y_1..y_T).
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub outputs: Vec<f64>,
    pub episode_index: usize,
}

/// How the state is initialized at the start of each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpisodeInit {
    /// Draw x_0 from the stationary distribution N(0, P).
    #[default]
    SteadyState,
    /// Start from the origin. No variance statement is made for this mode;
    /// it is exposed for experimentation only.
    Zero,
}

/// Where a Markov sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Closed-form values from a known system.
    Exact,
    /// Episode means.
    Estimated,
    /// Produced by an identification pipeline (estimates extended past T).
    Identified,
}

/// Ordered sequence H_1..H_T with a provenance marker.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSequence {
    values: Vec<f64>,
    provenance: Provenance,
}

impl MarkovSequence {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        MarkovSequence { values, provenance }
    }

    /// The exact sequence H_1..H_len of a known system.
    pub fn exact(sys: &StateSpace, len: usize) -> Self {
        let values = (1..=len).map(|k| true_markov(sys, k)).collect();
        MarkovSequence::new(values, Provenance::Exact)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 1-based access: `get(k)` is H_k.
    pub fn get(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.values.get(k - 1).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// The k-th Markov parameter `H_k = sum_j c_j lambda_j^(k-1)`, k >= 1.
pub fn true_markov(sys: &StateSpace, k: usize) -> f64 {
    assert!(k >= 1, "Markov parameters are indexed from 1");
    sys.eigenvalues
        .iter()
        .zip(&sys.output_weights)
        .map(|(l, c)| c * l.powi(k as i32 - 1))
        .sum()
}

/// Steady-state covariance solving `P = A P A^T + Q`.
///
/// With a diagonal state matrix and diagonal Q the solution is diagonal,
/// `P_ii = q_i / (1 - lambda_i^2)`; the diagonal is returned. Requires
/// every |lambda_i| < 1.
pub fn lyapunov_steady_state(sys: &StateSpace, noise: &NoiseModel) -> Result<Vec<f64>> {
    sys.require_strict_stability()?;
    if noise.q_diag.len() != sys.dim() {
        return Err(Error::Dimension(format!(
            "q has {} entries for a {}-dimensional system",
            noise.q_diag.len(),
            sys.dim()
        )));
    }
    Ok(sys
        .eigenvalues
        .iter()
        .zip(&noise.q_diag)
        .map(|(l, q)| q / (1.0 - l * l))
        .collect())
}

/// Stationary variance of the output noise, `Sigma = C P C^T + R`.
pub fn output_variance(sys: &StateSpace, noise: &NoiseModel) -> Result<f64> {
    let p = lyapunov_steady_state(sys, noise)?;
    let cpc: f64 = sys
        .output_weights
        .iter()
        .zip(&p)
        .map(|(c, pi)| c * c * pi)
        .sum();
    Ok(cpc + noise.r)
}

/// Simulate one impulse episode: x_0 is drawn per `init`, the input is a
/// unit impulse at t = 0 and the outputs y_1..y_horizon are returned.
/// E[y_t] = H_t under either initialization.
///
/// The episode owns an RNG stream derived from (seed, episode_index), so
/// episodes can be generated in any order or in parallel.
pub fn simulate_impulse_episode(
    sys: &StateSpace,
    noise: &NoiseModel,
    horizon: usize,
    episode_index: usize,
    init: EpisodeInit,
) -> Result<EpisodeRecord> {
    assert!(horizon >= 1, "horizon must be at least 1");
    assert!(episode_index >= 1, "episodes are indexed from 1");
    let n = sys.dim();
    if noise.q_diag.len() != n {
        return Err(Error::Dimension(format!(
            "q has {} entries for a {}-dimensional system",
            noise.q_diag.len(),
            n
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(episode_index as u64);

    let q_sd: Vec<f64> = noise.q_diag.iter().map(|q| q.sqrt()).collect();
    let r_sd = noise.r.sqrt();

    let mut x = vec![0.0_f64; n];
    if !noise.is_zero() && init == EpisodeInit::SteadyState {
        let p = lyapunov_steady_state(sys, noise)?;
        for (xi, pi) in x.iter_mut().zip(&p) {
            let z: f64 = rng.sample(StandardNormal);
            *xi = pi.sqrt() * z;
        }
    }

    let mut outputs = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let u = if t == 0 { 1.0 } else { 0.0 };
        for i in 0..n {
            let w = if q_sd[i] > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                q_sd[i] * z
            } else {
                0.0
            };
            x[i] = sys.eigenvalues[i] * x[i] + u + w;
        }
        let v = if r_sd > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            r_sd * z
        } else {
            0.0
        };
        let y: f64 = sys
            .output_weights
            .iter()
            .zip(&x)
            .map(|(c, xi)| c * xi)
            .sum::<f64>()
            + v;
        outputs.push(y);
    }
    Ok(EpisodeRecord {
        outputs,
        episode_index,
    })
}

/// The stable six-mode system used throughout the bench configs and tests.
#[cfg(test)]
pub(crate) fn six_mode_system() -> StateSpace {
    StateSpace::new(
        vec![0.94, 0.75, -0.75, -0.69, 0.46, 0.42],
        vec![1.0; 6],
        0.95,
    )
    .unwrap()
}
