//! Solves the coupled Riccati system for a jump instance on the orthant and
//! prints the value function and feedback gains at a few times.

use jumplq::hamiltonian::Side;
use jumplq::model::{ConeSpec, LQProblem, Phase, PostValues, PreValues, TimeGrid};
use jumplq::riccati::{assemble, extract_policy};

fn main() -> jumplq::Result<()> {
    let problem = LQProblem::constant(
        TimeGrid::new(1.0, 1000)?,
        ConeSpec::nonneg(1),
        1,
        PreValues::scalar(0.1, -0.5, 0.2, 0.4, -0.4, 0.3, 1.0, 1.0, 0.3),
        PostValues::scalar(0.05, -0.3, 0.2, 0.5, 1.0, 1.0),
        1.0,
        1.5,
    )?;
    let class = problem.validate()?;
    let sol = assemble(&problem)?;
    let policy = extract_policy(&problem, &sol)?;
    println!("case {:?}, post-default curve shared: {}", class.case, sol.post_is_shared());
    println!("{:>5} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "P0", "N0", "Zbar", "xi+", "xi-");
    for i in (0..=1000).step_by(200) {
        let t = problem.grid.node(i);
        println!(
            "{t:>5.2} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            sol.p0()[i],
            sol.n0()[i],
            sol.zbar()[i],
            policy.pre_gain(Side::Plus, i)[0],
            policy.pre_gain(Side::Minus, i)[0],
        );
    }
    for x in [1.0, -1.0] {
        println!("V(0, {x:+}) = {:.8}", sol.value_at(0.0, x, Phase::PreDefault)?);
    }
    println!("V(0.5, 1) after default at 0.25 = {:.8}", sol.value_at(0.5, 1.0, Phase::PostDefault { theta: 0.25 })?);
    Ok(())
}
