//! Library side of the `escape-rate` command: configuration parsing, the
//! three commands and their reports.

pub mod config;
pub mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use escape_rate::drift::{analyze_unchecked, check_agreement, AGREEMENT_TOL};
use escape_rate::oracle::{check_lemma_identities, drift_trend, MAX_IDENTITY_ORDER};
use escape_rate::simulate::{simulate as run_simulation, SimulationConfig};
use escape_rate::{analyze, Error, SolverOptions};

use config::{ConfigError, LoadedConfig};
use report::*;

/// Environment variable capping the number of simulation threads.
pub const THREADS_ENV: &str = "ESCAPE_RATE_THREADS";
pub const DEFAULT_MAX_WORDS: usize = 2_000_000;

/// Why a command did not produce a passing report.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Usage(String),
    Model(Error),
    /// The verify report was produced but some check failed.
    Verify(Box<VerifyReport>),
}

impl Failure {
    /// 2 config or usage, 3 non-transient, 4 no convergence, 5 bad
    /// simulation parameters, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Usage(_) => 2,
            Failure::Model(e) => match e {
                Error::InvalidFactor(_) | Error::InvalidModel(_) | Error::Domain(_) => 2,
                Error::NonTransient(_) | Error::NearCritical(_) => 3,
                Error::Convergence { .. } => 4,
                Error::InvalidSimulation(_) => 5,
                _ => 1,
            },
            Failure::Verify(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error at {e}"),
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Verify(r) => write!(f, "verification failed: {}", r.failures.join("; ")),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

pub fn solver_options(tol: f64, max_iter: usize) -> Result<SolverOptions, Failure> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Failure::Usage("--max-iter must be positive".into()));
    }
    Ok(SolverOptions { tol, max_iter })
}

/// Thread cap from the environment; unset means no cap.
pub fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Model(Error::InvalidSimulation(format!(
                "{THREADS_ENV} must be a positive integer, got \"{s}\""
            )))),
        },
    }
}

fn config_info(cfg: &LoadedConfig) -> ConfigInfo {
    ConfigInfo {
        name: cfg.name.clone(),
        sha256: cfg.sha256.clone(),
    }
}

pub fn compute(cfg: &LoadedConfig, opts: SolverOptions) -> Result<ComputeReport, Failure> {
    let start = Instant::now();
    let drift = analyze(&cfg.model, opts)?;
    let analyze_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(ComputeReport {
        command: "compute".into(),
        report_version: REPORT_VERSION,
        tool: ToolInfo::current(),
        config: config_info(cfg),
        model: ModelInfo::of(&cfg.model),
        solver: SolverInfo {
            tol: opts.tol,
            max_iter: opts.max_iter,
        },
        ell: drift.ell(),
        drift,
        timings: Timings {
            analyze_ms,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// The simulate report carries no timings or thread counts, so identical
/// inputs give identical bytes.
pub fn simulate(
    cfg: &LoadedConfig,
    opts: SolverOptions,
    sim: SimulationConfig,
) -> Result<SimulateReport, Failure> {
    sim.check()?;
    let drift = analyze(&cfg.model, opts)?;
    let est = run_simulation(&cfg.model, &sim)?;
    let mut z = BTreeMap::new();
    z.insert("ell".to_string(), est.drift.z_score(drift.ell()));
    for (i, (e, nu)) in est.partial_share.iter().zip(&drift.type_chain.nu).enumerate() {
        z.insert(format!("nu_{}", i + 1), e.z_score(*nu));
    }
    if let Some(lambda) = drift.markovian {
        z.insert("markovian".to_string(), est.markovian.z_score(lambda));
    }
    Ok(SimulateReport {
        command: "simulate".into(),
        report_version: REPORT_VERSION,
        tool: ToolInfo::current(),
        config: config_info(cfg),
        model: ModelInfo::of(&cfg.model),
        parameters: SimulationParameters {
            steps: sim.steps,
            trials: sim.trials,
            seed: sim.seed,
        },
        estimates: est,
        reference: Reference {
            ell: drift.ell(),
            nu: drift.type_chain.nu.clone(),
            partial: drift.partial.clone(),
            markovian: drift.markovian,
        },
        z_scores: z,
    })
}

/// Residual gates checked by `verify` besides the formula agreement.
const RESIDUAL_GATES: [(&str, f64); 5] = [
    ("normalization", 1e-9),
    ("nu_stationarity", 1e-10),
    ("nu_formula_vs_solve", 1e-8),
    ("partial_sum", 1e-10),
    ("return_decomposition", 1e-9),
];

/// Oracle identities, the enumeration trend and formula agreement. Returns
/// `Failure::Verify` with the full report when any check fails.
pub fn verify(
    cfg: &LoadedConfig,
    opts: SolverOptions,
    order: usize,
    max_words: usize,
) -> Result<VerifyReport, Failure> {
    if order > MAX_IDENTITY_ORDER {
        return Err(Failure::Usage(format!("--order is at most {MAX_IDENTITY_ORDER}, got {order}")));
    }
    let model = &cfg.model;
    let drift = analyze_unchecked(model, opts)?;
    let mut notices = Vec::new();
    let mut failures = Vec::new();

    let mut agreement_ok = true;
    if let Err(e) = check_agreement(&drift) {
        agreement_ok = false;
        failures.push(e.to_string());
    }
    for (name, tol) in RESIDUAL_GATES {
        let v = drift.residuals.get(name).copied().unwrap_or(0.0);
        if !(v < tol) {
            agreement_ok = false;
            failures.push(format!("residual {name} = {v:e} exceeds {tol:e}"));
        }
    }
    let agreement = Agreement {
        ell_exit_time: drift.ell_exit_time,
        ell_dgf: drift.ell_dgf,
        ell_group: drift.ell_group,
        tolerance: AGREEMENT_TOL,
        residuals: drift.residuals.clone(),
        passed: agreement_ok,
    };

    let (identities, trend) = if let Some(i) = model.factors().iter().position(|f| f.as_finite().is_none()) {
        notices.push(format!(
            "factor {} is a builtin lattice walk; series identities and enumeration skipped",
            i + 1
        ));
        (None, None)
    } else {
        let ids = check_lemma_identities(model, order)?;
        for c in ids.failures() {
            failures.push(format!(
                "identity {} off by {:e} at {}",
                c.name, c.max_discrepancy, c.worst_case
            ));
        }
        let t = drift_trend(model, order, drift.ell(), max_words)?;
        if let Some(step) = t.stopped_at {
            notices.push(format!(
                "enumeration stopped before step {step}: more than {max_words} words"
            ));
        }
        let passed = t.conserves_mass() && t.approaches();
        if !t.conserves_mass() {
            failures.push(format!("enumerated laws lose mass: {:e}", t.max_mass_error));
        }
        if !t.approaches() {
            failures.push(format!(
                "expected length increments move away from ell (gap {} -> {})",
                t.initial_gap, t.final_gap
            ));
        }
        let section = TrendSection {
            horizon: order,
            max_words,
            ell: drift.ell(),
            result: t,
            passed,
        };
        (Some(ids), Some(section))
    };

    let report = VerifyReport {
        command: "verify".into(),
        report_version: REPORT_VERSION,
        tool: ToolInfo::current(),
        config: config_info(cfg),
        model: ModelInfo::of(model),
        order,
        identities,
        trend,
        agreement,
        notices,
        passed: failures.is_empty(),
        failures,
    };
    if report.passed {
        Ok(report)
    } else {
        Err(Failure::Verify(Box::new(report)))
    }
}
