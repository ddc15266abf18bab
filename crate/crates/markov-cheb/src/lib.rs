//! Markov-parameter identification for SISO LTI systems.
//!
//! Given the first T Markov parameters of a diagonalizable system whose
//! eigenvalues lie in `[-rho, rho]`, every later parameter H_k is estimated
//! by a linear combination of the known ones. The combination weights come
//! from approximating `x^(k-1)` on `[-rho, rho]` by a polynomial of degree
//! below T — exactly minimax when the data are exact, or with a squared-L1
//! penalty balancing approximation bias against estimation variance when
//! the data are episode means.
//!
//! Modules:
//!
//! * [`lti`] — diagonal state-space systems, Markov parameters, episodic
//!   impulse simulation and the steady-state covariance.
//! * [`cheb`] — Chebyshev basis, the truncation construction, verified
//!   sup norms and closed-form error bounds.
//! * [`remez`] — exchange solver for the unregularized minimax problem.
//! * [`regularized`] — the penalized problem as an epigraph QP over a
//!   discretized sup norm.
//! * [`estimate`] — streaming episode-mean estimator, pooled output
//!   variance and the end-to-end identification pipeline.
//! * [`baseline`] — Hankel realization (Ho-Kalman) and truncation
//!   comparison methods.
//! * [`bench`] — seeded experiment orchestration and CSV emission.
//! * [`config`] — TOML experiment configuration.

pub mod baseline;
pub mod bench;
pub mod cheb;
pub mod config;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod lti;
pub mod qp;
pub mod regularized;
pub mod remez;

pub use error::{Error, Result};
