//! Monte Carlo cost of the optimal feedback law against the Riccati value,
//! and the cost of scaled versions of the same law under common random
//! numbers.

use jumplq::model::{ConeSpec, LQProblem, PostValues, PreValues, TimeGrid};
use jumplq::riccati::{assemble, extract_policy};
use jumplq::simulate::Simulator;

fn main() -> jumplq::Result<()> {
    let problem = LQProblem::constant(
        TimeGrid::new(1.0, 500)?,
        ConeSpec::nonneg(1),
        1,
        PreValues::scalar(0.1, -0.5, 0.2, 0.4, -0.4, 0.3, 1.0, 1.0, 0.3),
        PostValues::scalar(0.05, -0.3, 0.2, 0.5, 1.0, 1.0),
        1.0,
        1.5,
    )?;
    let sol = assemble(&problem)?;
    let policy = extract_policy(&problem, &sol)?;
    let value = 0.5 * sol.p0()[0];
    let (paths, seed) = (20_000, 42);

    let est = Simulator::new(&problem, &policy)?.cost(1.0, paths, seed)?;
    println!("value {value:.5}, optimal law {:.5} +- {:.5} (z = {:+.2})", est.mean, est.std_error, est.z_score(value));
    for factor in [0.0, 0.5, 1.5, 2.0] {
        let scaled = policy.scaled(factor)?;
        let est = Simulator::new(&problem, &scaled)?.cost(1.0, paths, seed)?;
        println!("gains x{factor:<4} cost {:.5} +- {:.5}", est.mean, est.std_error);
    }

    let rec = Simulator::new(&problem, &policy)?.path(1.0, &mut jumplq::simulate::path_rng(seed, 3))?;
    match rec.jump {
        Some(j) => println!("path 3 defaults at {:.4}: {:.4} -> {:.4}", rec.tau.unwrap(), j.x_before, j.x_after),
        None => println!("path 3 survives, X_T = {:.4}", rec.x[problem.grid.steps()]),
    }
    Ok(())
}
