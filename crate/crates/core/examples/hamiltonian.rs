//! Minimizes the four Hamiltonians at one coefficient slice and compares each
//! minimum with the exhaustive grid oracle.

use jumplq::hamiltonian::{direct_objective, grid_oracle_min, minimize_h_post, minimize_h_pre, Side};
use jumplq::model::{CoefficientSlice, ConeSpec, PostValues, PreValues};
use nalgebra::DVector;

fn main() -> jumplq::Result<()> {
    let pre = CoefficientSlice::from_pre(PreValues::scalar(0.1, -0.5, 0.2, 0.4, -0.4, 0.3, 1.0, 1.0, 0.3));
    let post = CoefficientSlice::from_post(PostValues::scalar(0.05, -0.3, 0.2, 0.5, 1.0, 1.0));
    let cone = ConeSpec::nonneg(1);
    let (p, l1, l2) = (1.2, 0.4, 0.3);
    let q = DVector::from_element(1, 0.1);

    for side in [Side::Plus, Side::Minus] {
        let post_min = minimize_h_post(side, &post, p, &q, &cone)?;
        let pre_min = minimize_h_pre(side, &pre, p, &q, l1, l2, &cone)?;
        let oracle = grid_oracle_min(|u| direct_objective(side, &pre, p, &q, l1, l2, u), &cone, 5.0, 1e-3);
        println!("{side:?}:");
        println!("  post-default  min {:+.10} at u = {:+.6}", post_min.value, post_min.argmin[0]);
        println!("  pre-default   min {:+.10} at u = {:+.6}", pre_min.value, pre_min.argmin[0]);
        println!("  grid oracle   min {:+.10} at u = {:+.6}", oracle.value, oracle.argmin[0]);
    }
    Ok(())
}
