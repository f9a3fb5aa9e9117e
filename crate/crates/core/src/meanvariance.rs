//! Mean-variance portfolio selection with one risky asset exposed to
//! counterparty default.
//!
//! The target-tracking problem `min E|X_T - eta|^2` is embedded into the
//! singular LQ problem (`Q = R = 0`, `G = 1`) for `y_t = X_t - eta e^{-int_t^T r}`.
//! Its Riccati pair gives `E|y_T|^2 = P_0 y_0^{+,2} + N_0 y_0^{-,2}`, since
//! the value function carries a factor 1/2 that cancels against the doubled
//! quadratic form. The frontier then follows from the dual over `eta`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    ConeSpec, LQProblem, PostDefaultCoeffs, PostFields, PreDefaultCoeffs, Profile, TerminalWeights, TimeGrid,
};
use crate::riccati::{assemble, extract_policy, FeedbackPolicy, RiccatiSolution};
use crate::simulate::{mc_terminal_moments, Simulator, TerminalMoments};

/// Tolerance of the feasibility integral.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Market primitives. The risky asset has drift `b0`, volatility `sigma0`
/// and loses the fraction `gamma` of its value at default; afterwards it
/// has drift `b1` and volatility `sigma1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    pub grid: TimeGrid,
    pub r: Profile<f64>,
    pub b0: Profile<f64>,
    pub sigma0: Profile<DVector<f64>>,
    pub gamma: Profile<f64>,
    pub lambda: Profile<f64>,
    pub b1: Profile<f64>,
    pub sigma1: Profile<DVector<f64>>,
    pub x0: f64,
    /// One-dimensional; the orthant forbids short selling.
    pub cone: ConeSpec,
}

impl MarketSpec {
    /// Constant coefficients with one Brownian motion.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(
        grid: TimeGrid,
        r: f64,
        b0: f64,
        sigma0: f64,
        gamma: f64,
        lambda: f64,
        b1: f64,
        sigma1: f64,
        x0: f64,
        cone: ConeSpec,
    ) -> Self {
        MarketSpec {
            grid,
            r: Profile::constant(r),
            b0: Profile::constant(b0),
            sigma0: Profile::constant(DVector::from_element(1, sigma0)),
            gamma: Profile::constant(gamma),
            lambda: Profile::constant(lambda),
            b1: Profile::constant(b1),
            sigma1: Profile::constant(DVector::from_element(1, sigma1)),
            x0,
            cone,
        }
    }

    fn check(&self) -> Result<()> {
        if self.cone.dim != 1 {
            return Err(Error::InvalidInput("the market has a single risky asset (cone dimension 1)".into()));
        }
        let k = self.sigma0.knots()[0].1.len();
        if self.sigma0.knots().iter().chain(self.sigma1.knots()).any(|(_, s)| s.len() != k) {
            return Err(Error::InvalidInput("volatility vectors must share one length".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidInput("x0 must be finite".into()));
        }
        Ok(())
    }

    fn brownian_dim(&self) -> usize {
        self.sigma0.knots()[0].1.len()
    }

    fn all_constant(&self) -> bool {
        self.r.is_constant()
            && self.b0.is_constant()
            && self.sigma0.is_constant()
            && self.gamma.is_constant()
            && self.lambda.is_constant()
            && self.b1.is_constant()
            && self.sigma1.is_constant()
    }

    /// Times where some coefficient has a kink, plus the grid nodes.
    fn sample_times(&self) -> Vec<f64> {
        let horizon = self.grid.horizon();
        let mut ts = self.grid.nodes();
        let mut add = |k: Vec<f64>| ts.extend(k.into_iter().filter(|t| *t > 0.0 && *t < horizon));
        add(self.r.knots().iter().map(|k| k.0).collect());
        add(self.b0.knots().iter().map(|k| k.0).collect());
        add(self.sigma0.knots().iter().map(|k| k.0).collect());
        add(self.gamma.knots().iter().map(|k| k.0).collect());
        add(self.lambda.knots().iter().map(|k| k.0).collect());
        add(self.b1.knots().iter().map(|k| k.0).collect());
        add(self.sigma1.knots().iter().map(|k| k.0).collect());
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }

    /// `int_0^T r`, exact for piecewise-linear rates.
    pub fn integrated_rate(&self) -> f64 {
        let ts = self.sample_times();
        ts.windows(2)
            .map(|w| 0.5 * (self.r.at(w[0]) + self.r.at(w[1])) * (w[1] - w[0]))
            .sum()
    }

    /// `e^{int_0^T r}`.
    pub fn growth(&self) -> f64 {
        self.integrated_rate().exp()
    }

    /// Riskless terminal wealth `x0 e^{int r}`.
    pub fn riskless_target(&self) -> f64 {
        self.x0 * self.growth()
    }
}

fn derived<T: crate::model::Lerp>(constant: bool, ts: &[f64], f: impl Fn(f64) -> T) -> Profile<T> {
    if constant {
        Profile::constant(f(0.0))
    } else {
        Profile::from_knots(ts.iter().map(|t| (*t, f(*t))).collect()).expect("sample times are increasing")
    }
}

/// Outcome of the feasibility test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Expected integrated positive excess return.
    pub integral: f64,
}

/// Evaluates `E int_0^T (b - r - lambda gamma)^+ dt` for deterministic
/// coefficients: the survival-weighted pre-default excess plus the
/// post-default excess weighted by the default-time density. Composite
/// Simpson on a fine uniform grid.
pub fn feasibility_check(market: &MarketSpec) -> Feasibility {
    let horizon = market.grid.horizon();
    let m = 20_000usize;
    let h = horizon / m as f64;
    let t = |i: usize| if i == m { horizon } else { i as f64 * h };
    // survival S(t) = exp(-int_0^t lambda), trapezoid on the fine grid
    let mut cum = vec![0.0; m + 1];
    for i in 0..m {
        cum[i + 1] = cum[i] + 0.5 * (market.lambda.at(t(i)) + market.lambda.at(t(i + 1))) * h;
    }
    let integrand = |i: usize| {
        let s = t(i);
        let surv = (-cum[i]).exp();
        let pre = (market.b0.at(s) - market.r.at(s) - market.lambda.at(s) * market.gamma.at(s)).max(0.0);
        // int_0^t lambda(theta) S(theta) d theta = 1 - S(t)
        let post = (market.b1.at(s) - market.r.at(s)).max(0.0);
        surv * pre + (1.0 - surv) * post
    };
    let mut sum = integrand(0) + integrand(m);
    for i in 1..m {
        sum += integrand(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = sum * h / 3.0;
    Feasibility {
        feasible: integral > FEASIBILITY_TOL,
        integral,
    }
}

/// The singular LQ problem tracked by `y = X - eta e^{-int_t^T r}` and the
/// initial value `y_0`.
pub fn embed(market: &MarketSpec, eta: f64) -> Result<(LQProblem, f64)> {
    market.check()?;
    let c = market.all_constant();
    let ts = market.sample_times();
    let k = market.brownian_dim();
    let col = |s: DVector<f64>| DMatrix::from_column_slice(k, 1, s.as_slice());
    let scalar = |v: f64| DVector::from_element(1, v);
    let pre = PreDefaultCoeffs {
        a: derived(c, &ts, |t| market.r.at(t)),
        b: derived(c, &ts, |t| {
            scalar(market.b0.at(t) - market.lambda.at(t) * market.gamma.at(t) - market.r.at(t))
        }),
        c: Profile::constant(DVector::zeros(k)),
        d: derived(c, &ts, |t| col(market.sigma0.at(t))),
        e: Profile::constant(0.0),
        f: derived(c, &ts, |t| scalar(-market.gamma.at(t))),
        q: Profile::constant(0.0),
        r: Profile::constant(DMatrix::zeros(1, 1)),
        lambda: derived(c, &ts, |t| market.lambda.at(t)),
    };
    let post = PostDefaultCoeffs::ThetaFree(PostFields {
        a: derived(c, &ts, |t| market.r.at(t)),
        b: derived(c, &ts, |t| scalar(market.b1.at(t) - market.r.at(t))),
        c: Profile::constant(DVector::zeros(k)),
        d: derived(c, &ts, |t| col(market.sigma1.at(t))),
        q: Profile::constant(0.0),
        r: Profile::constant(DMatrix::zeros(1, 1)),
    });
    let problem = LQProblem::new(market.grid, market.cone, k, pre, post, TerminalWeights::constant(1.0, 1.0))?;
    let y0 = (market.riskless_target() - eta) / market.growth();
    Ok((problem, y0))
}

/// Riccati pair of the embedded problem with unit terminal weight.
#[derive(Debug, Clone)]
pub struct NormalizedPair {
    pub p0: f64,
    pub n0: f64,
    /// `e^{-int_0^T r}`.
    pub discount: f64,
    pub problem: LQProblem,
    pub solution: RiccatiSolution,
}

impl NormalizedPair {
    /// `N0 e^{-2 int r}`; strictly below 1 on feasible markets.
    pub fn ratio(&self) -> f64 {
        self.n0 * self.discount * self.discount
    }
}

pub fn normalized_pair(market: &MarketSpec) -> Result<NormalizedPair> {
    let (problem, _) = embed(market, 0.0)?;
    let solution = assemble(&problem)?;
    Ok(NormalizedPair {
        p0: solution.p0()[0],
        n0: solution.n0()[0],
        discount: (-market.integrated_rate()).exp(),
        problem,
        solution,
    })
}

/// A point on the efficient frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierPoint {
    pub z: f64,
    pub eta_star: f64,
    /// Minimal variance of terminal wealth with mean `z`.
    pub j_star: f64,
    pub n0: f64,
    pub p0: f64,
}

/// Dual and frontier computations sharing one Riccati solve.
#[derive(Debug, Clone)]
pub struct MeanVariance {
    pub market: MarketSpec,
    pub pair: NormalizedPair,
    pub feasibility: Feasibility,
}

impl MeanVariance {
    /// Solves the normalized pair and the feasibility integral. Fails with
    /// `DegenerateDual` when `N0 e^{-2 int r}` is not below 1, then with
    /// `InfeasibleMarket` when the excess-return integral vanishes.
    pub fn new(market: &MarketSpec) -> Result<Self> {
        let pair = normalized_pair(market)?;
        let ratio = pair.ratio();
        if ratio >= 1.0 - 1e-12 {
            return Err(Error::DegenerateDual { ratio });
        }
        let feasibility = feasibility_check(market);
        if !feasibility.feasible {
            return Err(Error::InfeasibleMarket {
                integral: feasibility.integral,
            });
        }
        Ok(MeanVariance {
            market: market.clone(),
            pair,
            feasibility,
        })
    }

    pub fn riskless_target(&self) -> f64 {
        self.market.riskless_target()
    }

    fn check_target(&self, z: f64) -> Result<()> {
        let minimum = self.riskless_target();
        if !(z >= minimum - 1e-12 * minimum.abs().max(1.0)) {
            return Err(Error::InfeasibleTarget { z, minimum });
        }
        Ok(())
    }

    /// `P0 y0^{+,2} + N0 y0^{-,2} - (eta - z)^2`.
    pub fn dual_value(&self, eta: f64, z: f64) -> f64 {
        let y0 = (self.riskless_target() - eta) * self.pair.discount;
        self.pair.p0 * y0.max(0.0).powi(2) + self.pair.n0 * (-y0).max(0.0).powi(2) - (eta - z).powi(2)
    }

    /// Maximizer of the dual over `eta >= x0 e^{int r}`.
    pub fn optimal_eta(&self, z: f64) -> Result<f64> {
        self.check_target(z)?;
        let base = self.riskless_target();
        if z <= base {
            return Ok(base);
        }
        let d = self.pair.discount;
        Ok((z - self.pair.n0 * d * self.market.x0) / (1.0 - self.pair.ratio()))
    }

    pub fn point(&self, z: f64) -> Result<FrontierPoint> {
        let eta_star = self.optimal_eta(z)?;
        let ratio = self.pair.ratio();
        let excess = (z - self.riskless_target()).max(0.0);
        Ok(FrontierPoint {
            z,
            eta_star,
            j_star: ratio / (1.0 - ratio) * excess * excess,
            n0: self.pair.n0,
            p0: self.pair.p0,
        })
    }

    pub fn frontier(&self, zs: &[f64]) -> Result<Vec<FrontierPoint>> {
        zs.iter().map(|z| self.point(*z)).collect()
    }

    /// Feedback law `pi = xi^+ y^+ + xi^- y^-` of the embedded problem; it
    /// does not depend on `eta`.
    pub fn policy(&self) -> Result<FeedbackPolicy> {
        extract_policy(&self.pair.problem, &self.pair.solution)
    }

    /// Simulated mean and variance of `X_T` under the optimal portfolio for
    /// target `z`.
    pub fn simulate_target(&self, z: f64, policy: &FeedbackPolicy, paths: usize, seed: u64) -> Result<TerminalMoments> {
        let eta = self.optimal_eta(z)?;
        let (problem, y0) = embed(&self.market, eta)?;
        let mut m = mc_terminal_moments(&problem, policy, y0, paths, seed)?;
        m.mean += eta;
        Ok(m)
    }

    /// Largest absolute control along `paths` simulated paths for target `z`.
    pub fn max_abs_control(&self, z: f64, policy: &FeedbackPolicy, paths: usize, seed: u64) -> Result<f64> {
        let eta = self.optimal_eta(z)?;
        let (problem, y0) = embed(&self.market, eta)?;
        let sim = Simulator::new(&problem, policy)?;
        let mut worst = 0.0f64;
        for p in 0..paths {
            let rec = sim.path(y0, &mut crate::simulate::path_rng(seed, p as u64))?;
            worst = rec.u.iter().fold(worst, |a, b| a.max(b.abs()));
        }
        Ok(worst)
    }
}

/// Free-function form of [`MeanVariance::optimal_eta`].
pub fn optimal_eta(market: &MarketSpec, z: f64) -> Result<f64> {
    MeanVariance::new(market)?.optimal_eta(z)
}

/// Free-function form of [`MeanVariance::dual_value`]; solves the pair on
/// every call.
pub fn dual_value(market: &MarketSpec, eta: f64, z: f64) -> Result<f64> {
    Ok(MeanVariance::new(market)?.dual_value(eta, z))
}

/// Efficient frontier at the targets `zs`.
pub fn frontier(market: &MarketSpec, zs: &[f64]) -> Result<Vec<FrontierPoint>> {
    MeanVariance::new(market)?.frontier(zs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 200).unwrap()
    }

    #[test]
    fn flat_market_is_infeasible() {
        let m = MarketSpec::constant(grid(), 0.03, 0.03, 0.2, 0.0, 0.5, 0.03, 0.2, 1.0, ConeSpec::nonneg(1));
        let f = feasibility_check(&m);
        assert!(!f.feasible);
        assert_eq!(f.integral, 0.0);
    }

    #[test]
    fn positive_excess_is_feasible() {
        let m = MarketSpec::constant(grid(), 0.0, 0.1, 0.2, 0.0, 0.0, 0.0, 0.2, 1.0, ConeSpec::nonneg(1));
        assert!(feasibility_check(&m).feasible);
    }

    #[test]
    fn post_default_branch_carries_mass() {
        let m = MarketSpec::constant(grid(), 0.0, 1.0, 0.2, 1.0, 1.0, 0.05, 0.2, 1.0, ConeSpec::nonneg(1));
        let f = feasibility_check(&m);
        let expect = 0.05 * (1.0 - (1.0 - (-1.0f64).exp()));
        assert!((f.integral - expect).abs() < 1e-10, "{} vs {expect}", f.integral);
    }

    #[test]
    fn embedding_bookkeeping() {
        let m = MarketSpec::constant(grid(), 0.0, 0.1, 0.2, 0.0, 0.0, 0.0, 0.2, 2.0, ConeSpec::nonneg(1));
        let (p, y0) = embed(&m, 2.0).unwrap();
        assert_eq!(y0, 0.0);
        let pre = p.pre.at(0.3);
        assert_eq!(pre.f[0], 0.0);
        assert_eq!(pre.b[0], 0.1);
        assert_eq!(p.case_class().unwrap(), crate::model::CaseClass::Singular);
    }

    #[test]
    fn riskless_target_has_zero_variance() {
        let m = MarketSpec::constant(grid(), 0.02, 0.1, 0.2, 0.1, 0.2, 0.06, 0.25, 1.0, ConeSpec::nonneg(1));
        let mv = MeanVariance::new(&m).unwrap();
        let z = mv.riskless_target();
        let pt = mv.point(z).unwrap();
        assert_eq!(pt.eta_star, z);
        assert_eq!(pt.j_star, 0.0);
        assert!(matches!(mv.point(0.5 * z), Err(Error::InfeasibleTarget { .. })));
    }
}
