use jumplq::model::{ConeSpec, LQProblem, PostValues, PreValues, TimeGrid};
use jumplq::riccati::{assemble, extract_policy, FeedbackPolicy};
use jumplq::simulate::{mc_terminal_moments, path_rng, Simulator};
use jumplq::verify::instances::{jump_instance, oracle_instance};

#[test]
fn survival_frequency_matches_intensity() {
    let problem = jump_instance(200);
    let policy = extract_policy(&problem, &assemble(&problem).unwrap()).unwrap();
    let sim = Simulator::new(&problem, &policy).unwrap();
    let n = 20_000;
    let survived = (0..n).filter(|p| sim.path(1.0, &mut path_rng(5, *p)).unwrap().tau.is_none()).count();
    let s = (-0.3f64).exp();
    let se = (s * (1.0 - s) / n as f64).sqrt();
    let freq = survived as f64 / n as f64;
    assert!((freq - s).abs() <= 4.0 * se, "survival {freq} vs {s}");
}

#[test]
fn uncontrolled_mean_matches_discrete_expectation() {
    // without control or jump the Euler mean is exactly (1 + a h)^n
    let steps = 100;
    let problem = LQProblem::constant(
        TimeGrid::new(1.0, steps).unwrap(),
        ConeSpec::full_space(1),
        1,
        PreValues::scalar(0.3, 1.0, 0.4, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0),
        PostValues::scalar(0.3, 1.0, 0.4, 1.0, 1.0, 1.0),
        1.0,
        1.0,
    )
    .unwrap();
    let policy = FeedbackPolicy::zero(problem.grid, problem.cone);
    let m = mc_terminal_moments(&problem, &policy, 1.0, 40_000, 11).unwrap();
    let expected = (1.0 + 0.3 / steps as f64).powi(steps as i32);
    assert!((m.mean - expected).abs() <= 4.0 * m.mean_se, "{} vs {expected}", m.mean);
}

#[test]
fn jump_records_are_consistent() {
    // F = 0, so the jump is E times the left limit
    let problem = oracle_instance(200);
    let policy = extract_policy(&problem, &assemble(&problem).unwrap()).unwrap();
    let sim = Simulator::new(&problem, &policy).unwrap();
    let mut seen = 0;
    for p in 0..500 {
        let rec = sim.path(1.0, &mut path_rng(9, p)).unwrap();
        if let Some(j) = rec.jump {
            seen += 1;
            let tau = rec.tau.unwrap();
            assert!(problem.grid.node(j.node) >= tau && (j.node == 0 || problem.grid.node(j.node - 1) < tau));
            assert_eq!(rec.x[j.node], j.x_after);
            assert!((j.x_after - j.x_before - j.size).abs() <= 1e-15);
            assert!((j.size + 0.3 * j.x_before).abs() <= 1e-14);
        } else {
            assert!(rec.tau.is_none());
        }
    }
    assert!(seen > 100);
}

#[test]
fn costs_are_nonnegative() {
    let problem = jump_instance(200);
    let policy = extract_policy(&problem, &assemble(&problem).unwrap()).unwrap();
    let sim = Simulator::new(&problem, &policy).unwrap();
    for p in 0..300 {
        for x0 in [1.0, -0.5] {
            assert!(sim.path(x0, &mut path_rng(1, p)).unwrap().cost >= 0.0);
        }
    }
}

#[test]
fn estimates_are_reproducible() {
    let problem = jump_instance(100);
    let policy = extract_policy(&problem, &assemble(&problem).unwrap()).unwrap();
    let sim = Simulator::new(&problem, &policy).unwrap();
    assert_eq!(sim.cost(1.0, 2000, 3).unwrap(), sim.cost(1.0, 2000, 3).unwrap());
    assert_ne!(sim.cost(1.0, 2000, 3).unwrap().mean, sim.cost(1.0, 2000, 4).unwrap().mean);
}
