//! Command-line driver.
//!
//! Exit codes: 0 success, 1 violated bound assertion, 2 configuration or
//! usage error, 3 solver non-convergence.

use clap::{Parser, Subcommand, ValueEnum};
use markov_cheb::baseline::{extrapolate, hankel, ho_kalman, order_by_gap, truncation_estimate};
use markov_cheb::bench::{run_bound_suite, run_error_curves, run_index_sweep, write_csv, BenchOutput};
use markov_cheb::cheb::{
    bias_bound, chebyshev_truncation, sup_norm_residual, ApproxProblem, ApproxSolution,
};
use markov_cheb::config::{Config, GammaModeConfig, NamedGammaMode};
use markov_cheb::error::Error;
use markov_cheb::estimate::{combine, solve_coefficients, EstimatorState};
use markov_cheb::linalg::jacobi_svd;
use markov_cheb::lti::{output_variance, simulate_impulse_episode, true_markov, MarkovSequence, Provenance};
use markov_cheb::regularized::{gamma_from_data, solve_regularized, RegProblem, SolverStatus};
use markov_cheb::remez::remez_minimax;
use markov_cheb::Result;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "markov-cheb",
    about = "Markov-parameter identification via uniform polynomial approximation",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-episode identification error curves for fixed target indices.
    Fig1 {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (stdout when omitted); metadata goes to
        /// <out>.meta.toml or stderr.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Error of every method across a k range after one estimation pass.
    Fig2 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Randomized validation of the error bounds; exits 1 on any violation.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the uniform approximation problem and print coefficients.
    Approx {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum, default_value_t = ApproxMethod::Remez)]
        method: ApproxMethod,
        /// Verification grid size for the reported sup error.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the penalized approximation problem and print the solution.
    Regapprox {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// Derive gamma from "sigma_hat,c_m,n".
        #[arg(long, value_name = "SIGMA,CM,N")]
        gamma_from: Option<String>,
        #[arg(long, default_value_t = markov_cheb::regularized::DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate from simulated episodes, then identify the requested
    /// indices.
    Identify {
        #[arg(long)]
        config: PathBuf,
        /// Single index ("13") or inclusive range ("13..50").
        #[arg(long)]
        k: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a comparison method over the requested indices.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ApproxMethod {
    Remez,
    ChebTrunc,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    HoKalman,
    Truncation,
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(violations) if violations > 0 => {
            eprintln!("{violations} bound assertion(s) violated");
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("MARKOV_CHEB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NoConvergence(_) | Error::ExchangeStalled { .. } => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<usize> {
    match cli.cmd {
        Cmd::Fig1 { config, out, seeds } => {
            let cfg = load_config(&config, seeds)?;
            emit_bench(run_error_curves(&cfg)?, out.as_deref())
        }
        Cmd::Fig2 { config, out, seeds } => {
            let cfg = load_config(&config, seeds)?;
            emit_bench(run_index_sweep(&cfg)?, out.as_deref())
        }
        Cmd::Bounds { config, out } => {
            let cfg = load_config(&config, None)?;
            emit_bench(run_bound_suite(&cfg)?, out.as_deref())
        }
        Cmd::Approx {
            k,
            t,
            rho,
            method,
            grid,
            out,
        } => approx_cmd(k, t, rho, method, grid, out.as_deref()),
        Cmd::Regapprox {
            k,
            t,
            rho,
            gamma,
            gamma_from,
            grid,
            out,
        } => regapprox_cmd(k, t, rho, gamma, gamma_from, grid, out.as_deref()),
        Cmd::Identify { config, k, out } => {
            let cfg = load_config(&config, None)?;
            pipeline_cmd(&cfg, &k, PipelineMethod::Proposed, out.as_deref())
        }
        Cmd::Baseline {
            method,
            config,
            k,
            out,
        } => {
            let cfg = load_config(&config, None)?;
            let m = match method {
                BaselineMethod::HoKalman => PipelineMethod::HoKalman,
                BaselineMethod::Truncation => PipelineMethod::Truncation,
            };
            pipeline_cmd(&cfg, &k, m, out.as_deref())
        }
    }
}

fn load_config(path: &Path, seeds: Option<Vec<u64>>) -> Result<Config> {
    let mut cfg = Config::from_path(path)?;
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err(Error::Config("--seeds override must be non-empty".into()));
        }
        cfg.experiment.seeds = seeds;
    }
    Ok(cfg)
}

fn emit_bench(out: BenchOutput, path: Option<&Path>) -> Result<usize> {
    let meta =
        toml::to_string(&out.meta).map_err(|e| Error::Config(format!("metadata: {e}")))?;
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)?;
            write_csv(&out.rows, file)?;
            std::fs::write(p.with_extension("meta.toml"), meta)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_csv(&out.rows, stdout.lock())?;
            eprint!("{meta}");
        }
    }
    Ok(out.violations)
}

fn writer_for(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.14e}")
    }
}

fn approx_cmd(
    k: usize,
    t: usize,
    rho: f64,
    method: ApproxMethod,
    grid: Option<usize>,
    out: Option<&Path>,
) -> Result<usize> {
    let prob = ApproxProblem::new(k, t, rho)?;
    let (label, sol): (&str, ApproxSolution) = match method {
        ApproxMethod::Remez => ("remez", remez_minimax(&prob)?),
        ApproxMethod::ChebTrunc => ("cheb-trunc", chebyshev_truncation(&prob)),
    };
    let sup = match grid {
        Some(g) => sup_norm_residual(&sol.alpha, &prob, g),
        None => sol.sup_error,
    };
    let bound = if k > t {
        fmt(bias_bound(&prob, 1.0))
    } else {
        String::new()
    };

    let mut w = csv::Writer::from_writer(writer_for(out)?);
    w.write_record([
        "k",
        "t",
        "rho",
        "method",
        "sup_error",
        "unit_energy_bound",
        "iterations",
        "equioscillation_residual",
        "alpha_index",
        "alpha_value",
    ])?;
    for (i, a) in sol.alpha.iter().enumerate() {
        w.write_record([
            k.to_string(),
            t.to_string(),
            fmt(rho),
            label.to_string(),
            fmt(sup),
            bound.clone(),
            sol.iterations.to_string(),
            fmt(sol.equioscillation_residual),
            i.to_string(),
            fmt(*a),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn regapprox_cmd(
    k: usize,
    t: usize,
    rho: f64,
    gamma: Option<f64>,
    gamma_from: Option<String>,
    grid: usize,
    out: Option<&Path>,
) -> Result<usize> {
    let gamma = match (gamma, gamma_from) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "--gamma and --gamma-from are mutually exclusive".into(),
            ))
        }
        (Some(g), None) => g,
        (None, Some(spec)) => {
            let parts: Vec<&str> = spec.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Config(
                    "--gamma-from expects sigma_hat,c_m,n".into(),
                ));
            }
            let sigma: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::Config("bad sigma_hat".into()))?;
            let c_m: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::Config("bad c_m".into()))?;
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::Config("bad n".into()))?;
            gamma_from_data(sigma, c_m, n)?
        }
        (None, None) => {
            return Err(Error::Config("provide --gamma or --gamma-from".into()))
        }
    };

    let prob = RegProblem::new(ApproxProblem::new(k, t, rho)?, gamma, grid)?;
    let sol = solve_regularized(&prob);
    if sol.solver_status != SolverStatus::Converged {
        return Err(Error::NoConvergence(format!(
            "penalized solve ended as {:?}",
            sol.solver_status
        )));
    }
    let status = match sol.solver_status {
        SolverStatus::Converged => "converged",
        SolverStatus::MaxIter => "max-iter",
        SolverStatus::InfeasibleTolerance => "infeasible-tolerance",
    };

    let mut w = csv::Writer::from_writer(writer_for(out)?);
    w.write_record([
        "k",
        "t",
        "rho",
        "gamma",
        "grid",
        "sup_error",
        "l1_norm",
        "objective",
        "status",
        "alpha_index",
        "alpha_value",
    ])?;
    for (i, a) in sol.alpha.iter().enumerate() {
        w.write_record([
            k.to_string(),
            t.to_string(),
            fmt(rho),
            fmt(gamma),
            grid.to_string(),
            fmt(sol.sup_error),
            fmt(sol.l1_norm),
            fmt(sol.objective),
            status.to_string(),
            i.to_string(),
            fmt(*a),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

enum PipelineMethod {
    Proposed,
    HoKalman,
    Truncation,
}

fn parse_k_range(spec: &str) -> Result<(usize, usize)> {
    let parse_one = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("bad index '{s}'")))
    };
    let (lo, hi) = match spec.split_once("..") {
        Some((a, b)) => (parse_one(a)?, parse_one(b)?),
        None => {
            let k = parse_one(spec)?;
            (k, k)
        }
    };
    if lo < 1 || lo > hi {
        return Err(Error::Config(format!("bad index range '{spec}'")));
    }
    Ok((lo, hi))
}

/// Shared flow for `identify` and `baseline`: simulate the configured
/// number of episodes with the configured seed, estimate, then answer each
/// requested index with the chosen method. Rows share one schema so the
/// outputs are directly comparable.
fn pipeline_cmd(
    cfg: &Config,
    k_spec: &str,
    method: PipelineMethod,
    out: Option<&Path>,
) -> Result<usize> {
    let (k_lo, k_hi) = parse_k_range(k_spec)?;
    let sys = cfg.system()?;
    let noise = cfg.noise()?;
    let c_m = cfg.energy()?;
    let exp = &cfg.experiment;
    let sigma_true = if noise.is_zero() {
        0.0
    } else {
        output_variance(&sys, &noise)?
    };

    let mut state = EstimatorState::new(exp.t);
    let init = exp.reset.to_init();
    for ell in 1..=exp.n {
        let ep = simulate_impulse_episode(&sys, &noise, exp.t, ell, init)?;
        state.update(&ep)?;
    }
    let markov = MarkovSequence::new(state.estimates().to_vec(), Provenance::Estimated);

    let gamma = match exp.gamma_mode {
        GammaModeConfig::Named(NamedGammaMode::Zero) => 0.0,
        GammaModeConfig::Fixed { fixed } => fixed,
        GammaModeConfig::Named(NamedGammaMode::DataDriven) => {
            if exp.t * exp.n < 2 {
                0.0
            } else {
                gamma_from_data(state.sigma_hat()?, c_m, exp.n)?
            }
        }
    };

    let realization = match method {
        PipelineMethod::HoKalman => {
            let (d1, d2) = cfg.hankel_dims();
            let cap = d1.min(d2);
            let order = match cfg.ho_kalman.order {
                Some(o) => o,
                None if sys.dim() <= cap => sys.dim(),
                None => order_by_gap(&jacobi_svd(&hankel(&markov, d1, d2)?).sigma).min(cap),
            };
            Some(ho_kalman(&markov, order, d1, d2)?)
        }
        _ => None,
    };

    let mut w = csv::Writer::from_writer(writer_for(out)?);
    w.write_record(["k", "h_true", "h_hat", "abs_error", "bound"])?;
    for k in k_lo..=k_hi {
        let h_true = true_markov(&sys, k);
        let (h_hat, bound) = match &method {
            PipelineMethod::Proposed => {
                if k <= exp.t {
                    (state.estimates()[k - 1], Some(sigma_true / exp.n as f64))
                } else {
                    let coeffs = solve_coefficients(k, exp.t, sys.rho(), gamma, exp.grid)?;
                    let bound = c_m * c_m * coeffs.sup_error * coeffs.sup_error
                        + sigma_true / exp.n as f64 * coeffs.l1_norm * coeffs.l1_norm;
                    (combine(&coeffs.alpha, state.estimates()), Some(bound))
                }
            }
            PipelineMethod::HoKalman => {
                let real = realization.as_ref().expect("realization built above");
                (extrapolate(real, k), None)
            }
            PipelineMethod::Truncation => {
                let h_hat = truncation_estimate(&markov, k);
                let bound = if k <= exp.t {
                    Some(sigma_true / exp.n as f64)
                } else {
                    Some(c_m * c_m * sys.rho().powi(2 * k as i32 - 2))
                };
                (h_hat, bound)
            }
        };
        w.write_record([
            k.to_string(),
            fmt(h_true),
            fmt(h_hat),
            fmt((h_true - h_hat).abs()),
            bound.map(fmt).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(0)
}
