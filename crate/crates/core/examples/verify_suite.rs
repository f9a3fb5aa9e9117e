//! Runs a fast subset of the acceptance battery. Pass criterion numbers as
//! arguments to choose others, e.g. `cargo run --example verify_suite -- 7 9`.

use jumplq::verify::{run_suite, SuiteConfig};

fn main() {
    let criteria: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let config = SuiteConfig {
        criteria: if criteria.is_empty() { vec![1, 2, 3, 4, 5, 10] } else { criteria },
        ..SuiteConfig::default()
    };
    let report = run_suite(&config);
    for check in &report.checks {
        println!("{check}");
    }
    println!("overall: {}", if report.passed() { "PASS" } else { "FAIL" });
}
