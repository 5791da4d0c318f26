//! Config-driven runner for the exact and Monte Carlo check suites.

pub mod config;
pub mod exact;
pub mod registry;
pub mod report;
pub mod stochastic;

use std::path::Path;

use thiserror::Error;

pub use config::{Engine, Outcome, ScenarioConfig};
pub use registry::{describe_suite, list_suites, registry, SuiteInfo, SuiteKind};
pub use report::{CheckRecord, RunReport, REPORT_SCHEMA};

pub const SEED_ENV: &str = "FLAB_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("report: {0}")]
    Report(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for anything wrong with the input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) | CliError::UnknownSuite(_) => 2,
            CliError::Io { .. } | CliError::Report(_) => 1,
        }
    }
}

/// `--seed` beats `FLAB_SEED`, which beats the config; 0 when none is given.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(e) = env {
        return e.trim().parse().map_err(|_| CliError::ConfigInvalid(format!("{SEED_ENV}={e:?} is not a u64")));
    }
    Ok(config.unwrap_or(0))
}

/// Validates and runs `config` with `seed`; suites run in declared order.
pub fn run_config(config: &ScenarioConfig, seed: u64) -> Result<RunReport, CliError> {
    let plan = config.validate(seed)?;
    let mut checks = Vec::new();
    match plan.engine {
        Engine::Exact => {
            let scenario = plan.scenario.as_ref().expect("exact plan has a scenario");
            let bundle = scenario.bundle().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
            let cx = exact::ExactContext {
                scenario,
                bundle,
                tol: plan.exact_tol,
                samples: plan.exact.samples,
                seed: plan.seed,
            };
            for (info, polarity) in &plan.suites {
                for f in exact::run_exact(info.kind, &cx) {
                    checks.push(CheckRecord::new(&info.name, &info.anchor, *polarity, f));
                }
            }
        }
        Engine::Mc => {
            for (i, (info, polarity)) in plan.suites.iter().enumerate() {
                let suite_seed = flab_mc::derive_seed(plan.seed, i as u64);
                for f in stochastic::run_mc(info.kind, &plan.mc, suite_seed, plan.z_max) {
                    checks.push(CheckRecord::new(&info.name, &info.anchor, *polarity, f));
                }
            }
        }
    }
    let mut echo = config.clone();
    echo.seed = Some(seed);
    Ok(RunReport::new(echo, checks))
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    ScenarioConfig::parse(&text)
}

/// Runs `config` on a pool of `threads` workers (the global pool when `None`).
pub fn run_with_threads(config: &ScenarioConfig, seed: u64, threads: Option<usize>) -> Result<RunReport, CliError> {
    match threads {
        None => run_config(config, seed),
        Some(0) => Err(CliError::ConfigInvalid("--parallel must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?
            .install(|| run_config(config, seed)),
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some("2"), Some(3)).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(" 2 "), Some(3)).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some(3)).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), 0);
        assert_eq!(resolve_seed(None, Some("x"), None).unwrap_err().exit_code(), 2);
    }
}
