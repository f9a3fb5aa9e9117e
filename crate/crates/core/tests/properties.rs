use jumplq::hamiltonian::{direct_objective, minimize_h_pre, Side};
use jumplq::model::{CoefficientSlice, ConeSpec, LQProblem, Phase, PostValues, PreValues, Profile, TimeGrid};
use jumplq::riccati::assemble;
use nalgebra::DVector;
use proptest::prelude::*;

#[allow(clippy::too_many_arguments)]
fn slice(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64, r: f64, lambda: f64) -> CoefficientSlice {
    CoefficientSlice::from_pre(PreValues::scalar(a, b, c, d, e, f, 1.0, r, lambda))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hamiltonian_minimum_is_a_lower_bound(
        b in -1.0..1.0f64, c in -0.5..0.5f64, d in -1.0..1.0f64, e in -0.9..0.5f64, f in -0.5..0.5f64,
        r in 0.1..2.0f64, lambda in 0.0..1.5f64, p in 0.0..3.0f64, l2 in 0.0..2.0f64,
        nonneg in any::<bool>(), plus in any::<bool>(), probe in -5.0..5.0f64,
    ) {
        let s = slice(0.0, b, c, d, e, f, r, lambda);
        let cone = if nonneg { ConeSpec::nonneg(1) } else { ConeSpec::full_space(1) };
        let side = if plus { Side::Plus } else { Side::Minus };
        let (l1, l2) = if plus { (0.5, l2) } else { (l2, 0.5) };
        let q = DVector::from_element(1, 0.1);
        let res = minimize_h_pre(side, &s, p, &q, l1, l2, &cone).unwrap();
        prop_assert!(cone.contains(res.argmin.as_slice()));
        let u = if nonneg { probe.abs() } else { probe };
        let at = |u: f64| direct_objective(side, &s, p, &q, l1, l2, &[u]);
        prop_assert!(res.value <= at(u) + 1e-10);
        prop_assert!(res.value <= at(0.0) + 1e-12);
        prop_assert!((res.value - at(res.argmin[0])).abs() <= 1e-10 * (1.0 + res.value.abs()));
    }

    #[test]
    fn projection_is_idempotent(v in prop::collection::vec(-10.0..10.0f64, 1..4)) {
        let cone = ConeSpec::nonneg(v.len());
        let mut once = v.clone();
        cone.project(&mut once);
        let mut twice = once.clone();
        cone.project(&mut twice);
        prop_assert_eq!(&once, &twice);
        prop_assert!(cone.contains(&once));
    }

    #[test]
    fn profile_interpolation_stays_within_knots(y0 in -5.0..5.0f64, y1 in -5.0..5.0f64, t in 0.0..1.0f64) {
        let p = Profile::from_knots(vec![(0.0, y0), (1.0, y1)]).unwrap();
        let v = p.at(t);
        prop_assert!(v >= y0.min(y1) - 1e-15 && v <= y0.max(y1) + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn value_is_positively_homogeneous_of_degree_two(
        a in -0.5..0.5f64, b in -1.0..1.0f64, e in -0.9..0.5f64, lambda in 0.0..1.0f64,
        x in -3.0..3.0f64, scale in 0.1..4.0f64, t in 0.0..1.0f64,
    ) {
        let problem = LQProblem::constant(
            TimeGrid::new(1.0, 50).unwrap(),
            ConeSpec::nonneg(1),
            1,
            PreValues::scalar(a, b, 0.2, 0.4, e, 0.3, 1.0, 1.0, lambda),
            PostValues::scalar(a, b, 0.2, 0.4, 1.0, 1.0),
            1.0,
            1.2,
        ).unwrap();
        let sol = assemble(&problem).unwrap();
        let v = sol.value_at(t, x, Phase::PreDefault).unwrap();
        let vs = sol.value_at(t, scale * x, Phase::PreDefault).unwrap();
        prop_assert!((vs - scale * scale * v).abs() <= 1e-12 * (1.0 + vs.abs()));
        prop_assert!(v >= 0.0);
    }
}
