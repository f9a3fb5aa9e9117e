//! Independent oracles and the acceptance battery.
//!
//! The oracles share no solver code with the modules they check: the
//! reference Riccati flow has its own integrator, the Hamiltonian oracle
//! searches a lattice of the defining formula, and the policy oracle runs its
//! own Euler loop.

mod battery;
mod criteria;
pub mod instances;
mod oracle;
mod reference;

use std::fmt;

use rayon::prelude::*;

pub use battery::{hamiltonian_battery, BatteryOutcome, HamiltonianInput, HamiltonianKind};
pub use criteria::{criterion, golden_section_max, CRITERIA};
pub use oracle::{policy_grid_oracle, GridOracleOutcome};
pub use reference::classical_riccati_reference;

use crate::meanvariance::{MarketSpec, MeanVariance};
use crate::model::LQProblem;
use crate::riccati::assemble;

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// The quantity compared against `tolerance`; its meaning is spelled out
    /// in `detail`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckResult::new(name, false, f64::NAN, f64::NAN, detail)
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.6e}, tolerance {:.1e} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    /// True iff every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// What the suite runs and with how much Monte Carlo effort.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Criterion numbers from 1 to 10.
    pub criteria: Vec<usize>,
    /// Paths for the value and frontier consistency checks.
    pub mc_paths: usize,
    /// Paths per perturbed policy in the dominance check.
    pub perturbed_paths: usize,
    /// Paths for the policy grid search.
    pub oracle_paths: usize,
    pub seed: u64,
    /// A user problem validated and solved as an extra check.
    pub problem: Option<LQProblem>,
    /// A user market whose frontier is built as an extra check.
    pub market: Option<MarketSpec>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            criteria: CRITERIA.to_vec(),
            mc_paths: 100_000,
            perturbed_paths: 20_000,
            oracle_paths: 2_000,
            seed: 42,
            problem: None,
            market: None,
        }
    }
}

fn problem_check(problem: &LQProblem) -> CheckResult {
    let name = "configured problem";
    match problem.validate().and_then(|class| assemble(problem).map(|s| (class, s))) {
        Ok((class, sol)) => CheckResult::new(
            name,
            true,
            sol.min_value(),
            0.0,
            format!("{:?} case solved, minimum Riccati value", class.case),
        ),
        Err(e) => CheckResult::failed(name, format!("{}: {e}", e.kind())),
    }
}

fn market_check(market: &MarketSpec) -> CheckResult {
    let name = "configured market";
    match MeanVariance::new(market) {
        Ok(mv) => {
            let ratio = mv.pair.ratio();
            CheckResult::new(name, ratio < 1.0, ratio, 1.0, "N0 exp(-2 int r) below 1")
        }
        Err(e) => CheckResult::failed(name, format!("{}: {e}", e.kind())),
    }
}

/// Runs the selected criteria in parallel, then the configured problem and
/// market checks. The report lists checks in criterion order.
pub fn run_suite(config: &SuiteConfig) -> VerificationReport {
    let mut checks: Vec<CheckResult> = config.criteria.par_iter().map(|id| criterion(*id, config)).collect();
    if let Some(p) = &config.problem {
        checks.push(problem_check(p));
    }
    if let Some(m) = &config.market {
        checks.push(market_check(m));
    }
    VerificationReport { checks }
}
