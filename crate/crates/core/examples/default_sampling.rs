//! Samples default times from a time-varying intensity and compares the
//! empirical survival curve with exp(-int lambda).

use jumplq::model::TimeGrid;
use jumplq::simulate::{path_rng, sample_default};

fn main() -> jumplq::Result<()> {
    let grid = TimeGrid::new(2.0, 400)?;
    let lambda: Vec<f64> = grid.nodes().iter().map(|t| 0.2 + 0.3 * t).collect();
    let paths = 200_000;
    let taus: Vec<Option<f64>> = (0..paths).map(|p| sample_default(&lambda, &grid, &mut path_rng(7, p))).collect();

    println!("{:>5} {:>10} {:>10}", "t", "empirical", "exact");
    for t in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let alive = taus.iter().filter(|tau| tau.is_none_or(|s| s > t)).count();
        let exact = (-(0.2 * t + 0.15 * t * t)).exp();
        println!("{t:>5.2} {:>10.5} {:>10.5}", alive as f64 / paths as f64, exact);
    }
    Ok(())
}
