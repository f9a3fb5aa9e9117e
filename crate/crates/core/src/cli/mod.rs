//! Batch driver: configuration, dispatch and CSV artifacts.
//!
//! Numbers are written with 17 significant digits in scientific notation,
//! which reads back to the same `f64`.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{
    parse_config, parse_config_str, FrontierSettings, McSettings, Mode, Overrides, RunConfig, VerifySettings,
    DEFAULT_PATHS, DEFAULT_SEED, DEFAULT_STEPS,
};

use crate::error::{Error, Result};
use crate::hamiltonian::Side;
use crate::meanvariance::MeanVariance;
use crate::model::Phase;
use crate::riccati::{assemble, extract_policy};
use crate::simulate::{path_rng, Simulator};
use crate::verify::{run_suite, SuiteConfig, VerificationReport};

/// Full-precision decimal form of `x`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn missing(section: &str) -> Error {
    Error::Schema {
        key: section.into(),
        detail: "missing required section".into(),
    }
}

fn solve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let problem = cfg.problem.as_ref().ok_or_else(|| missing("problem"))?;
    let sol = assemble(problem)?;
    let policy = extract_policy(problem, &sol)?;
    let grid = problem.grid;
    let m = problem.control_dim();

    let riccati: Vec<Vec<String>> = (0..=grid.steps())
        .map(|i| {
            [grid.node(i), sol.p0()[i], sol.n0()[i], sol.diag_p()[i], sol.diag_n()[i], sol.zbar()[i], sol.lambdabar()[i]]
                .iter()
                .map(|v| num(*v))
                .collect()
        })
        .collect();
    let header = names(&["t", "P0", "N0", "diagP", "diagN", "Zbar", "Lambdabar"]);
    let a = write_csv(&cfg.output_dir, "riccati.csv", &header, &riccati)?;

    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|j| format!("xi0_plus_{j}")));
    header.extend((1..=m).map(|j| format!("xi0_minus_{j}")));
    let rows: Vec<Vec<String>> = (0..=grid.steps())
        .map(|i| {
            let mut row = vec![num(grid.node(i))];
            row.extend(policy.pre_gain(Side::Plus, i).iter().map(|v| num(*v)));
            row.extend(policy.pre_gain(Side::Minus, i).iter().map(|v| num(*v)));
            row
        })
        .collect();
    let b = write_csv(&cfg.output_dir, "policy.csv", &header, &rows)?;
    Ok(vec![a, b])
}

fn simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let problem = cfg.problem.as_ref().ok_or_else(|| missing("problem"))?;
    let sol = assemble(problem)?;
    let policy = extract_policy(problem, &sol)?;
    let sim = Simulator::new(problem, &policy)?;
    let mc = &cfg.mc;
    let est = sim.cost(mc.x0, mc.paths, mc.seed)?;
    let value = sol.value_at(0.0, mc.x0, Phase::PreDefault)?;
    let header = names(&["estimate", "SE", "paths", "seed", "value_at", "z_score"]);
    let row = vec![
        num(est.mean),
        num(est.std_error),
        est.paths.to_string(),
        est.seed.to_string(),
        num(value),
        num(est.z_score(value)),
    ];
    let mut written = vec![write_csv(&cfg.output_dir, "mc.csv", &header, &[row])?];

    if mc.save_paths > 0 {
        let grid = problem.grid;
        let mut rows = Vec::new();
        for p in 0..mc.save_paths.min(mc.paths) {
            let rec = sim.path(mc.x0, &mut path_rng(mc.seed, p as u64))?;
            for (i, x) in rec.x.iter().enumerate() {
                let t = grid.node(i);
                let defaulted = rec.tau.is_some_and(|tau| t >= tau);
                rows.push(vec![p.to_string(), num(t), num(*x), u8::from(defaulted).to_string()]);
            }
        }
        let header = names(&["path", "t", "x", "defaulted"]);
        written.push(write_csv(&cfg.output_dir, "paths.csv", &header, &rows)?);
    }
    Ok(written)
}

fn frontier(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let market = cfg.market.as_ref().ok_or_else(|| missing("market"))?;
    let settings = cfg.frontier.as_ref().ok_or_else(|| missing("frontier.z"))?;
    let mv = MeanVariance::new(market)?;
    let points = mv.frontier(&settings.z)?;
    let policy = if settings.mc_check { Some(mv.policy()?) } else { None };

    let mut header = names(&["z", "eta_star", "J_star", "N0", "P0"]);
    if settings.mc_check {
        header.extend(names(&["mc_mean", "mc_mean_se", "mc_variance", "mc_variance_se"]));
    }
    let mut rows = Vec::with_capacity(points.len());
    for pt in &points {
        let mut row: Vec<String> = [pt.z, pt.eta_star, pt.j_star, pt.n0, pt.p0].iter().map(|v| num(*v)).collect();
        if let Some(policy) = &policy {
            let m = mv.simulate_target(pt.z, policy, cfg.mc.paths, cfg.mc.seed)?;
            row.extend([m.mean, m.mean_se, m.variance, m.variance_se].iter().map(|v| num(*v)));
        }
        rows.push(row);
    }
    Ok(vec![write_csv(&cfg.output_dir, "frontier.csv", &header, &rows)?])
}

/// Suite configuration implied by a run configuration.
pub fn suite_config(cfg: &RunConfig) -> SuiteConfig {
    SuiteConfig {
        criteria: cfg.verify.criteria.clone(),
        mc_paths: cfg.mc.paths,
        perturbed_paths: cfg.verify.perturbed_paths,
        oracle_paths: cfg.verify.oracle_paths,
        seed: cfg.mc.seed,
        problem: cfg.problem.clone(),
        market: cfg.market.clone(),
    }
}

pub fn write_report(dir: &Path, report: &VerificationReport) -> Result<PathBuf> {
    let header = names(&["check", "status", "measured", "tolerance", "detail"]);
    let rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                quote(&c.name),
                if c.passed { "PASS" } else { "FAIL" }.to_string(),
                num(c.measured),
                num(c.tolerance),
                quote(&c.detail),
            ]
        })
        .collect();
    write_csv(dir, "report.csv", &header, &rows)
}

/// Outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Human-readable lines for the standard output.
    pub summary: String,
}

/// Dispatches on the mode and writes the artifacts. A failed verification
/// still writes `report.csv` before returning `VerificationFailed`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    let mut summary = String::new();
    let files = match cfg.mode {
        Mode::Solve => solve(cfg)?,
        Mode::Simulate => simulate(cfg)?,
        Mode::Frontier => frontier(cfg)?,
        Mode::Verify => {
            let report = run_suite(&suite_config(cfg));
            for c in &report.checks {
                let _ = writeln!(summary, "{c}");
            }
            let path = write_report(&cfg.output_dir, &report)?;
            if !report.passed() {
                let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
                return Err(Error::VerificationFailed(format!(
                    "report written to {}\n{}",
                    path.display(),
                    failed.join("\n")
                )));
            }
            vec![path]
        }
    };
    for f in &files {
        let _ = writeln!(summary, "wrote {}", f.display());
    }
    Ok(RunOutput { files, summary })
}
