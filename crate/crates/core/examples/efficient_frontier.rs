//! Efficient frontier of a market with a default jump and no short selling,
//! with a Monte Carlo check of one point.

use jumplq::meanvariance::{MarketSpec, MeanVariance};
use jumplq::model::{ConeSpec, TimeGrid};

fn main() -> jumplq::Result<()> {
    let market = MarketSpec::constant(TimeGrid::new(1.0, 1000)?, 0.02, 0.08, 0.2, 0.3, 0.3, 0.05, 0.25, 1.0, ConeSpec::nonneg(1));
    let mv = MeanVariance::new(&market)?;
    let base = mv.riskless_target();
    println!("riskless target {base:.6}, N0 exp(-2 int r) = {:.6}", mv.pair.ratio());
    println!("{:>8} {:>12} {:>12}", "z", "eta*", "Var X_T");
    for p in mv.frontier(&[base, 1.05, 1.1, 1.2, 1.3])? {
        println!("{:>8.4} {:>12.4} {:>12.6}", p.z, p.eta_star, p.j_star);
    }

    let policy = mv.policy()?;
    let m = mv.simulate_target(1.1, &policy, 20_000, 42)?;
    let target = mv.point(1.1)?;
    println!(
        "z = 1.1: simulated mean {:.4} +- {:.4}, variance {:.4} +- {:.4} (frontier {:.4})",
        m.mean, m.mean_se, m.variance, m.variance_se, target.j_star
    );
    Ok(())
}
