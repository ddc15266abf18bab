//! TOML experiment configuration.
//!
//! ```toml
//! [system]
//! eigenvalues = [0.94, 0.75, -0.75, -0.69, 0.46, 0.42]
//! c = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
//! rho = 0.95
//!
//! [noise]
//! q = 0.01          # scalar, or one entry per mode
//! r = 0.01
//! seed = 42
//!
//! [experiment]
//! t = 12
//! n = 1000
//! k_targets = [13, 22]
//! seeds = [1, 2, 3]
//! methods = ["proposed", "ho-kalman", "truncation"]
//! gamma_mode = "data-driven"      # or "zero", or { fixed = 1e-5 }
//! ```
//!
//! Every field past the system definition has a default; see the field
//! docs. Unknown keys are rejected so that typos fail loudly.

use crate::error::{Error, Result};
use crate::estimate::GammaMode;
use crate::lti::{EpisodeInit, NoiseModel, StateSpace};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub ho_kalman: HoKalmanSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub eigenvalues: Vec<f64>,
    pub c: Vec<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Process-noise variance: scalar (replicated) or one entry per mode.
    #[serde(default = "default_q")]
    pub q: QSpec,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            q: default_q(),
            r: default_r(),
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Scalar(f64),
    PerMode(Vec<f64>),
}

fn default_q() -> QSpec {
    QSpec::Scalar(0.01)
}

fn default_r() -> f64 {
    0.01
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Number of known (estimated) Markov parameters.
    #[serde(default = "default_t")]
    pub t: usize,
    /// Episodes per seed.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Target indices for the per-episode error curves.
    #[serde(default = "default_k_targets")]
    pub k_targets: Vec<usize>,
    /// Sweep range `[lo, hi]` for the per-index error curves.
    #[serde(default = "default_k_range")]
    pub k_range: [usize; 2],
    #[serde(default = "default_exp_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default)]
    pub gamma_mode: GammaModeConfig,
    /// Explicit modified system energy. Defaults to the true value of the
    /// configured system.
    #[serde(default)]
    pub c_m: Option<f64>,
    /// Conservative overestimate factor applied to the energy.
    #[serde(default = "default_one")]
    pub c_m_factor: f64,
    /// Sup-norm discretization for the penalized solver.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub reset: ResetMode,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        toml::from_str("").expect("empty experiment section must deserialize")
    }
}

fn default_t() -> usize {
    12
}

fn default_n() -> usize {
    1000
}

fn default_k_targets() -> Vec<usize> {
    vec![13, 22]
}

fn default_k_range() -> [usize; 2] {
    [13, 50]
}

fn default_exp_seeds() -> Vec<u64> {
    (1..=20).collect()
}

fn default_methods() -> Vec<MethodName> {
    vec![
        MethodName::Proposed,
        MethodName::HoKalman,
        MethodName::Truncation,
    ]
}

fn default_one() -> f64 {
    1.0
}

fn default_grid() -> usize {
    crate::regularized::DEFAULT_GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Proposed,
    HoKalman,
    Truncation,
}

impl MethodName {
    pub fn label(&self) -> &'static str {
        match self {
            MethodName::Proposed => "proposed",
            MethodName::HoKalman => "ho-kalman",
            MethodName::Truncation => "truncation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GammaModeConfig {
    Named(NamedGammaMode),
    Fixed { fixed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedGammaMode {
    DataDriven,
    Zero,
}

impl Default for GammaModeConfig {
    fn default() -> Self {
        GammaModeConfig::Named(NamedGammaMode::DataDriven)
    }
}

impl GammaModeConfig {
    pub fn to_mode(self) -> GammaMode {
        match self {
            GammaModeConfig::Named(NamedGammaMode::DataDriven) => GammaMode::DataDriven,
            GammaModeConfig::Named(NamedGammaMode::Zero) => GammaMode::Zero,
            GammaModeConfig::Fixed { fixed } => GammaMode::Fixed(fixed),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GammaModeConfig::Named(NamedGammaMode::DataDriven) => "data-driven".into(),
            GammaModeConfig::Named(NamedGammaMode::Zero) => "zero".into(),
            GammaModeConfig::Fixed { fixed } => format!("fixed({fixed})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ResetMode {
    #[default]
    SteadyState,
    Zero,
}

impl ResetMode {
    pub fn to_init(self) -> EpisodeInit {
        match self {
            ResetMode::SteadyState => EpisodeInit::SteadyState,
            ResetMode::Zero => EpisodeInit::Zero,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ResetMode::SteadyState => "steady-state",
            ResetMode::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HoKalmanSection {
    /// Hankel rows; defaults to floor(t/2).
    #[serde(default)]
    pub d1: Option<usize>,
    /// Hankel columns; defaults to t - d1.
    #[serde(default)]
    pub d2: Option<usize>,
    /// Realization order; defaults to the largest singular-value gap.
    #[serde(default)]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "default_bound_systems")]
    pub systems: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_bound_rho")]
    pub rho: f64,
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_bound_seed")]
    pub seed: u64,
    /// Monte Carlo side of the suite (noisy-bound validation).
    #[serde(default = "default_mc_systems")]
    pub mc_systems: usize,
    #[serde(default = "default_mc_replicas")]
    pub mc_replicas: usize,
    #[serde(default = "default_mc_episodes")]
    pub mc_episodes: usize,
    #[serde(default = "default_mc_k")]
    pub mc_k: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        toml::from_str("").expect("empty bounds section must deserialize")
    }
}

fn default_bound_systems() -> usize {
    100
}

fn default_max_dim() -> usize {
    8
}

fn default_bound_rho() -> f64 {
    0.95
}

fn default_k_max() -> usize {
    60
}

fn default_bound_seed() -> u64 {
    2207
}

fn default_mc_systems() -> usize {
    3
}

fn default_mc_replicas() -> usize {
    50
}

fn default_mc_episodes() -> usize {
    100
}

fn default_mc_k() -> usize {
    13
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::from_str(&text)
    }

    pub fn system(&self) -> Result<StateSpace> {
        StateSpace::new(
            self.system.eigenvalues.clone(),
            self.system.c.clone(),
            self.system.rho,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        let n = self.system.eigenvalues.len();
        let q = match &self.noise.q {
            QSpec::Scalar(q) => vec![*q; n],
            QSpec::PerMode(v) => v.clone(),
        };
        if q.len() != n {
            return Err(Error::Config(format!(
                "noise.q has {} entries for a {n}-dimensional system",
                q.len()
            )));
        }
        NoiseModel::new(q, self.noise.r, self.noise.seed).map_err(|e| Error::Config(e.to_string()))
    }

    /// Modified system energy the pipeline should use (explicit value or
    /// true energy, times the conservative factor).
    pub fn energy(&self) -> Result<f64> {
        let sys = self.system()?;
        let base = self.experiment.c_m.unwrap_or_else(|| sys.energy());
        let value = base * self.experiment.c_m_factor;
        if !(value > 0.0) {
            return Err(Error::Config(format!(
                "modified system energy must be positive, got {value}"
            )));
        }
        Ok(value)
    }

    /// Hankel split and order for the Ho-Kalman baseline.
    pub fn hankel_dims(&self) -> (usize, usize) {
        let t = self.experiment.t;
        let d1 = self
            .ho_kalman
            .d1
            .unwrap_or_else(|| crate::baseline::default_hankel_dims(t).0);
        let d2 = self.ho_kalman.d2.unwrap_or_else(|| t.saturating_sub(d1));
        (d1, d2)
    }

    fn validate(&self) -> Result<()> {
        self.system()?;
        self.noise()?;
        let e = &self.experiment;
        if e.t < 1 {
            return Err(Error::Config("experiment.t must be at least 1".into()));
        }
        if e.n < 1 {
            return Err(Error::Config("experiment.n must be at least 1".into()));
        }
        if e.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must be non-empty".into()));
        }
        if e.k_targets.iter().any(|&k| k < 1) {
            return Err(Error::Config("every k target must be at least 1".into()));
        }
        if e.k_range[0] < 1 || e.k_range[0] > e.k_range[1] {
            return Err(Error::Config(format!(
                "k_range [{}, {}] is not a valid 1-based range",
                e.k_range[0], e.k_range[1]
            )));
        }
        if e.methods.is_empty() {
            return Err(Error::Config("experiment.methods must be non-empty".into()));
        }
        if e.grid < 2 * e.t {
            return Err(Error::Config(format!(
                "experiment.grid = {} cannot resolve t = {}",
                e.grid, e.t
            )));
        }
        if !(e.c_m_factor > 0.0) {
            return Err(Error::Config("c_m_factor must be positive".into()));
        }
        if let GammaModeConfig::Fixed { fixed } = e.gamma_mode {
            if !(fixed >= 0.0) || !fixed.is_finite() {
                return Err(Error::Config(format!(
                    "fixed gamma must be a nonnegative real, got {fixed}"
                )));
            }
        }
        let (d1, d2) = self.hankel_dims();
        if d1 + d2 > e.t {
            return Err(Error::Config(format!(
                "Hankel split {d1}+{d2} exceeds t = {} (the shifted matrix needs one spare)",
                e.t
            )));
        }
        if let Some(order) = self.ho_kalman.order {
            if order == 0 || order > d1.min(d2) {
                return Err(Error::Config(format!(
                    "ho_kalman.order = {order} must lie in 1..={}",
                    d1.min(d2)
                )));
            }
        }
        let b = &self.bounds;
        if b.max_dim < 1 || b.t < 1 || b.k_max <= b.t {
            return Err(Error::Config(
                "bounds section needs max_dim >= 1 and k_max > t".into(),
            ));
        }
        if !(b.rho > 0.0 && b.rho < 1.0) {
            return Err(Error::Config(format!(
                "bounds.rho must lie in (0, 1), got {}",
                b.rho
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [system]
        eigenvalues = [0.94, 0.75, -0.75, -0.69, 0.46, 0.42]
        c = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        rho = 0.95
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = Config::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.t, 12);
        assert_eq!(cfg.experiment.n, 1000);
        assert_eq!(cfg.experiment.k_targets, vec![13, 22]);
        assert_eq!(cfg.experiment.seeds.len(), 20);
        assert_eq!(cfg.experiment.methods.len(), 3);
        assert_eq!(cfg.noise.r, 0.01);
        assert_eq!(cfg.hankel_dims(), (6, 6));
        let noise = cfg.noise().unwrap();
        assert_eq!(noise.q_diag(), &[0.01; 6]);
        assert_eq!(cfg.energy().unwrap(), 6.0);
        assert_eq!(
            cfg.experiment.gamma_mode.to_mode(),
            crate::estimate::GammaMode::DataDriven
        );
    }

    #[test]
    fn full_config_round_trip() {
        let text = r#"
            [system]
            eigenvalues = [0.5, -0.25]
            c = [2.0, -1.0]
            rho = 0.6

            [noise]
            q = [0.1, 0.2]
            r = 0.05
            seed = 7

            [experiment]
            t = 6
            n = 250
            k_targets = [7]
            k_range = [7, 20]
            seeds = [3, 4]
            methods = ["proposed", "truncation"]
            gamma_mode = { fixed = 1e-4 }
            c_m_factor = 2.0
            grid = 1001
            reset = "zero"
            output_path = "rows.csv"

            [ho_kalman]
            d1 = 3
            d2 = 3
            order = 2

            [bounds]
            systems = 10
            max_dim = 4
            rho = 0.9
            t = 6
            k_max = 20
        "#;
        let cfg = Config::from_str(text).unwrap();
        assert_eq!(cfg.experiment.t, 6);
        assert_eq!(cfg.energy().unwrap(), 6.0); // (2 + 1) * 2
        assert_eq!(
            cfg.experiment.gamma_mode.to_mode(),
            crate::estimate::GammaMode::Fixed(1e-4)
        );
        assert_eq!(cfg.experiment.reset, ResetMode::Zero);
        assert_eq!(cfg.hankel_dims(), (3, 3));
        assert_eq!(cfg.ho_kalman.order, Some(2));
    }

    #[test]
    fn rejects_eigenvalue_outside_rho() {
        let text = r#"
            [system]
            eigenvalues = [0.99]
            c = [1.0]
            rho = 0.95
        "#;
        assert!(matches!(Config::from_str(text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_mismatched_q_length() {
        let text = r#"
            [system]
            eigenvalues = [0.5, 0.2]
            c = [1.0, 1.0]
            rho = 0.6

            [noise]
            q = [0.1]
        "#;
        assert!(matches!(Config::from_str(text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
            [system]
            eigenvalues = [0.5]
            c = [1.0]
            rho = 0.6
            spectral = 2.0
        "#;
        assert!(matches!(Config::from_str(text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_empty_seeds() {
        let text = format!("{MINIMAL}\n[experiment]\nseeds = []\n");
        assert!(matches!(Config::from_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_oversized_hankel_split() {
        let text = format!("{MINIMAL}\n[ho_kalman]\nd1 = 8\nd2 = 8\n");
        assert!(matches!(Config::from_str(&text), Err(Error::Config(_))));
    }
}
