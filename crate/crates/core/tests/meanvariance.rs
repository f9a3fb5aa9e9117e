use jumplq::meanvariance::{MarketSpec, MeanVariance};
use jumplq::verify::golden_section_max;
use jumplq::verify::instances::default_market;

#[test]
fn frontier_scales_with_initial_wealth() {
    let base = default_market(400);
    let doubled = MarketSpec { x0: 2.0, ..base.clone() };
    let (a, b) = (MeanVariance::new(&base).unwrap(), MeanVariance::new(&doubled).unwrap());
    for scale in [1.05, 1.2] {
        let z = scale * a.riskless_target();
        let (pa, pb) = (a.point(z).unwrap(), b.point(2.0 * z).unwrap());
        assert!((pb.j_star - 4.0 * pa.j_star).abs() <= 1e-9 * pb.j_star);
        assert!((pb.eta_star - 2.0 * pa.eta_star).abs() <= 1e-9 * pb.eta_star);
    }
}

#[test]
fn dual_is_concave_in_eta() {
    let mv = MeanVariance::new(&default_market(400)).unwrap();
    let z = 1.15;
    let h = 0.5;
    let mut eta = mv.riskless_target() - 5.0;
    while eta < 200.0 {
        let second = mv.dual_value(eta + h, z) - 2.0 * mv.dual_value(eta, z) + mv.dual_value(eta - h, z);
        assert!(second <= 1e-9, "convex at eta = {eta}: {second}");
        eta += 1.7;
    }
}

#[test]
fn closed_form_eta_maximizes_the_dual() {
    let mv = MeanVariance::new(&default_market(400)).unwrap();
    let z = 1.2;
    let star = mv.optimal_eta(z).unwrap();
    let gs = golden_section_max(|e| mv.dual_value(e, z), mv.riskless_target(), 1000.0, 1e-7);
    assert!((gs - star).abs() <= 1e-6 * star, "{gs} vs {star}");
}

#[test]
fn frontier_is_increasing_and_convex_in_target() {
    let mv = MeanVariance::new(&default_market(400)).unwrap();
    let zs: Vec<f64> = (0..6).map(|i| mv.riskless_target() + 0.05 * i as f64).collect();
    let js: Vec<f64> = mv.frontier(&zs).unwrap().iter().map(|p| p.j_star).collect();
    assert_eq!(js[0], 0.0);
    for w in js.windows(3) {
        assert!(w[1] > w[0] && w[2] - w[1] > w[1] - w[0]);
    }
}
