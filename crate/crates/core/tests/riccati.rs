use jumplq::model::{ConeSpec, LQProblem, PostDefaultCoeffs, PostValues, PreValues, TerminalWeights, TimeGrid};
use jumplq::riccati::assemble;
use jumplq::verify::instances::jump_instance;

fn p0_at_zero(steps: usize) -> f64 {
    let sol = assemble(&jump_instance(steps)).unwrap();
    sol.p0()[0]
}

#[test]
fn fourth_order_convergence_on_jump_instance() {
    let reference = p0_at_zero(1600);
    let errs: Vec<f64> = [20, 40, 80].iter().map(|n| (p0_at_zero(*n) - reference).abs()).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.5, "observed order {order} from errors {errs:?}");
    }
}

#[test]
fn orthant_values_dominate_full_space() {
    let orthant = jump_instance(200);
    let mut full = orthant.clone();
    full.cone = ConeSpec::full_space(1);
    let (so, sf) = (assemble(&orthant).unwrap(), assemble(&full).unwrap());
    for i in 0..=200 {
        assert!(so.p0()[i] >= sf.p0()[i] - 1e-10);
        assert!(so.n0()[i] >= sf.n0()[i] - 1e-10);
    }
    // the constraint binds on the negative side
    assert!(so.n0()[0] > sf.n0()[0] + 1e-3);
}

#[test]
fn full_space_solution_is_symmetric() {
    let mut p = jump_instance(200);
    p.cone = ConeSpec::full_space(1);
    let sol = assemble(&p).unwrap();
    for i in 0..=200 {
        assert!((sol.p0()[i] - sol.n0()[i]).abs() <= 1e-12);
        assert!((sol.diag_p()[i] - sol.diag_n()[i]).abs() <= 1e-12);
    }
}

#[test]
fn zero_intensity_ignores_post_default_data() {
    let grid = TimeGrid::new(1.0, 300).unwrap();
    let pre = PreValues::scalar(0.1, -0.5, 0.2, 0.4, -0.4, 0.3, 1.0, 1.0, 0.0);
    let make = |post: PostValues, g1: f64| {
        LQProblem::new(
            grid,
            ConeSpec::nonneg(1),
            1,
            jumplq::model::PreDefaultCoeffs::constant(pre.clone()),
            PostDefaultCoeffs::constant(post),
            TerminalWeights::constant(1.0, g1),
        )
        .unwrap()
    };
    let a = assemble(&make(PostValues::scalar(0.05, -0.3, 0.2, 0.5, 1.0, 1.0), 1.5)).unwrap();
    let b = assemble(&make(PostValues::scalar(-0.7, 2.0, 0.0, 1.5, 3.0, 0.2), 0.1)).unwrap();
    assert_eq!(a.p0(), b.p0());
    assert_eq!(a.n0(), b.n0());
}

#[test]
fn terminal_conditions_hold() {
    let sol = assemble(&jump_instance(100)).unwrap();
    assert_eq!(sol.p0()[100], 1.0);
    assert_eq!(sol.n0()[100], 1.0);
    assert_eq!(sol.diag_p()[100], 1.5);
    assert_eq!(sol.zbar()[100], 0.5);
    sol.check_invariants().unwrap();
}
