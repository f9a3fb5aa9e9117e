//! Acceptance battery: one PASS/FAIL line per criterion at the default
//! Monte Carlo effort. Exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use jumplq::verify::{run_suite, SuiteConfig};

fn main() -> ExitCode {
    let start = Instant::now();
    let report = run_suite(&SuiteConfig::default());
    for check in &report.checks {
        println!("{check}");
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        report.checks.len() - failed,
        report.checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
