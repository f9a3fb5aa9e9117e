//! The decomposed Riccati cascade: post-default pairs per default time, their
//! diagonals, the coupled pre-default pair, and the assembled solution.
//!
//! With deterministic coefficients the martingale integrands vanish and each
//! equation is a backward ODE, integrated with classical RK4 at the grid step.
//! Diagonal values needed at stage midpoints are interpolated by cubics so
//! the scheme keeps its fourth order.

mod integrate;
mod policy;

use nalgebra::DVector;
use rayon::prelude::*;

pub use policy::{extract_policy, FeedbackPolicy};

use crate::error::{Error, Result};
use crate::hamiltonian::{minimize_h_post, minimize_h_pre, Side};
use crate::model::{CaseClass, Classification, CoefficientSlice, LQProblem, Phase, PostDefaultCoeffs, TimeGrid};
use integrate::{midpoint, rk4_backward, Stage};

/// Slack on every solution invariant.
pub const INVARIANT_TOL: f64 = 1e-9;

/// `P1(.; theta)` and `N1(.; theta)` on `[theta, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PostCurve {
    pub theta: f64,
    pub times: Vec<f64>,
    pub p: Vec<f64>,
    pub n: Vec<f64>,
}

/// Post-default curves on the lower triangle `theta_j <= t_i`.
#[derive(Debug, Clone, PartialEq)]
enum PostStore {
    /// Coefficients and terminal weight do not depend on `theta`: every
    /// slice is a suffix of one curve.
    Shared { p: Vec<f64>, n: Vec<f64> },
    /// `rows[j][i - j]`.
    Triangle { p: Vec<Vec<f64>>, n: Vec<Vec<f64>> },
}

impl PostStore {
    fn get(&self, side: Side, i: usize, j: usize) -> f64 {
        match self {
            PostStore::Shared { p, n } => match side {
                Side::Plus => p[i],
                Side::Minus => n[i],
            },
            PostStore::Triangle { p, n } => match side {
                Side::Plus => p[j][i - j],
                Side::Minus => n[j][i - j],
            },
        }
    }

    fn fold(&self, init: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        match self {
            PostStore::Shared { p, n } => p.iter().chain(n).fold(init, |a, b| f(a, *b)),
            PostStore::Triangle { p, n } => p.iter().chain(n).flatten().fold(init, |a, b| f(a, *b)),
        }
    }
}

/// Coefficient slices at the `2n + 1` half-grid points, shared by every
/// integration pass.
struct Workspace<'a> {
    problem: &'a LQProblem,
    pre_half: Vec<CoefficientSlice>,
    post_half: Option<Vec<CoefficientSlice>>,
    ceiling: f64,
    zero_q: DVector<f64>,
}

fn half_time(grid: &TimeGrid, k: usize) -> f64 {
    if k.is_multiple_of(2) {
        grid.node(k / 2)
    } else {
        0.5 * (grid.node(k / 2) + grid.node(k / 2 + 1))
    }
}

fn half_index(i: usize, stage: Stage) -> usize {
    match stage {
        Stage::Left => 2 * i,
        Stage::Mid => 2 * i + 1,
        Stage::Right => 2 * i + 2,
    }
}

fn locate_err(e: Error, what: &str, t: f64) -> Error {
    match e {
        Error::ConvexityViolated(s) => Error::ConvexityViolated(format!("{s} in {what} at t={t}")),
        Error::NonCoercive(s) => Error::NonCoercive(format!("{s} in {what} at t={t}")),
        other => other,
    }
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a LQProblem) -> Self {
        let grid = &problem.grid;
        let halves = 2 * grid.steps() + 1;
        let pre_half = (0..halves)
            .map(|k| CoefficientSlice::from_pre(problem.pre.at(half_time(grid, k))))
            .collect();
        let post_half = match &problem.post {
            PostDefaultCoeffs::ThetaFree(fields) => Some(
                (0..halves)
                    .map(|k| CoefficientSlice::from_post(fields.at(half_time(grid, k))))
                    .collect(),
            ),
            _ => None,
        };
        Workspace {
            problem,
            pre_half,
            post_half,
            ceiling: 1e8 * (1.0 + problem.terminal_sup()),
            zero_q: DVector::zeros(problem.brownian_dim),
        }
    }

    fn post_drift(&self, slice: &CoefficientSlice, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        let cone = &self.problem.cone;
        let hp = minimize_h_post(Side::Plus, slice, y[0], &self.zero_q, cone).map_err(|e| locate_err(e, "h+", t))?;
        let hn = minimize_h_post(Side::Minus, slice, y[1], &self.zero_q, cone).map_err(|e| locate_err(e, "h-", t))?;
        Ok([
            2.0 * slice.a * y[0] + slice.q + hp.value,
            2.0 * slice.a * y[1] + slice.q + hn.value,
        ])
    }

    /// Post-default flow for `theta = t_j` on the grid nodes `j..=n`.
    fn post_on_grid(&self, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let grid = &self.problem.grid;
        let n = grid.steps();
        let theta = grid.node(j);
        let nodes: Vec<f64> = (j..=n).map(|i| grid.node(i)).collect();
        let g1 = self.problem.terminal.g1.at(theta);
        let ys = rk4_backward(&nodes, [g1, g1], self.ceiling, j, |k, stage, y| {
            let hk = half_index(j + k, stage);
            let t = half_time(grid, hk);
            match &self.post_half {
                Some(cache) => self.post_drift(&cache[hk], t, y),
                None => {
                    let slice = CoefficientSlice::from_post(self.problem.post.at(t, theta));
                    self.post_drift(&slice, t, y)
                }
            }
        })?;
        Ok(ys.into_iter().map(|y| (y[0], y[1])).unzip())
    }

    fn post_store(&self) -> Result<PostStore> {
        let n = self.problem.grid.steps();
        if self.post_half.is_some() && self.problem.terminal.g1.is_constant() {
            let (p, n) = self.post_on_grid(0)?;
            return Ok(PostStore::Shared { p, n });
        }
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..=n)
            .into_par_iter()
            .map(|j| self.post_on_grid(j))
            .collect::<Result<_>>()?;
        let (p, n) = rows.into_iter().unzip();
        Ok(PostStore::Triangle { p, n })
    }

    fn pre_flow(&self, diag_p: &[f64], diag_n: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let grid = &self.problem.grid;
        let cone = &self.problem.cone;
        let g0 = self.problem.terminal.g0;
        let nodes = grid.nodes();
        let at = |vals: &[f64], i: usize, stage: Stage| match stage {
            Stage::Left => vals[i],
            Stage::Right => vals[i + 1],
            Stage::Mid => midpoint(vals, i).max(0.0),
        };
        let ys = rk4_backward(&nodes, [g0, g0], self.ceiling, 0, |i, stage, y| {
            let hk = half_index(i, stage);
            let s = &self.pre_half[hk];
            let t = half_time(grid, hk);
            let (dp, dn) = (at(diag_p, i, stage), at(diag_n, i, stage));
            let lambda = s.lambda();
            let e = s.jump.as_ref().map_or(0.0, |j| j.e);
            let a = s.a - lambda * e;
            let (p, nn) = (y[0], y[1]);
            let hp = minimize_h_pre(Side::Plus, s, p, &self.zero_q, dp - p, dn, cone)
                .map_err(|e| locate_err(e, "h0+", t))?;
            let hn = minimize_h_pre(Side::Minus, s, nn, &self.zero_q, dp, dn - nn, cone)
                .map_err(|e| locate_err(e, "h0-", t))?;
            Ok([
                2.0 * a * p + s.q + hp.value + lambda * (dp - p),
                2.0 * a * nn + s.q + hn.value + lambda * (dn - nn),
            ])
        })?;
        Ok(ys.into_iter().map(|y| (y[0], y[1])).unzip())
    }
}

/// Solves the post-default pair for one default time `theta` in `[0, T]`.
///
/// On-grid `theta` uses the grid nodes from `theta` on; otherwise the first
/// step is shortened to end at `theta`.
pub fn solve_post_default(problem: &LQProblem, theta: f64) -> Result<PostCurve> {
    let grid = &problem.grid;
    let horizon = grid.horizon();
    if !(0.0..=horizon).contains(&theta) {
        return Err(Error::OutOfRange(format!("theta = {theta} outside [0, {horizon}]")));
    }
    let ws = Workspace::new(problem);
    let (i, w) = grid.locate(theta);
    let snap = 1e-12 * horizon;
    let on_grid = [(i, grid.node(i)), (i + 1, grid.node(i + 1))]
        .into_iter()
        .find(|(_, t)| (t - theta).abs() <= snap)
        .map(|(j, _)| j);
    if let Some(j) = on_grid {
        let (p, n) = ws.post_on_grid(j)?;
        return Ok(PostCurve {
            theta: grid.node(j),
            times: (j..=grid.steps()).map(|k| grid.node(k)).collect(),
            p,
            n,
        });
    }
    debug_assert!(w > 0.0 && w < 1.0);
    let mut times = vec![theta];
    times.extend((i + 1..=grid.steps()).map(|k| grid.node(k)));
    let g1 = problem.terminal.g1.at(theta);
    let ys = rk4_backward(&times, [g1, g1], ws.ceiling, i, |k, stage, y| {
        let t = match stage {
            Stage::Left => times[k],
            Stage::Right => times[k + 1],
            Stage::Mid => 0.5 * (times[k] + times[k + 1]),
        };
        let slice = CoefficientSlice::from_post(problem.post.at(t, theta));
        ws.post_drift(&slice, t, y)
    })?;
    let (p, n) = ys.into_iter().map(|y| (y[0], y[1])).unzip();
    Ok(PostCurve { theta, times, p, n })
}

/// `diagP(t_i) = P1(t_i; t_i)` and `diagN(t_i) = N1(t_i; t_i)` on the grid.
pub fn solve_diagonals(problem: &LQProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    let ws = Workspace::new(problem);
    Ok(diagonals(&ws.post_store()?, problem.grid.steps()))
}

fn diagonals(store: &PostStore, n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..=n)
        .map(|i| (store.get(Side::Plus, i, i), store.get(Side::Minus, i, i)))
        .unzip()
}

/// The coupled pre-default pair `(P0, N0)` given the diagonals on the grid.
pub fn solve_pre_default(problem: &LQProblem, diag_p: &[f64], diag_n: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = problem.grid.steps() + 1;
    if diag_p.len() != len || diag_n.len() != len {
        return Err(Error::InvalidInput(format!("diagonals must have {len} entries")));
    }
    Workspace::new(problem).pre_flow(diag_p, diag_n)
}

/// Full solution of the extended Riccati system on the problem grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    grid: TimeGrid,
    classification: Classification,
    p0: Vec<f64>,
    n0: Vec<f64>,
    diag_p: Vec<f64>,
    diag_n: Vec<f64>,
    zbar: Vec<f64>,
    lambdabar: Vec<f64>,
    post: PostStore,
    min_value: f64,
}

/// Validates the problem, runs the cascade and checks every invariant.
pub fn assemble(problem: &LQProblem) -> Result<RiccatiSolution> {
    let classification = problem.validate()?;
    let ws = Workspace::new(problem);
    let post = ws.post_store()?;
    let (diag_p, diag_n) = diagonals(&post, problem.grid.steps());
    let (p0, n0) = ws.pre_flow(&diag_p, &diag_n)?;
    let zbar = diag_p.iter().zip(&p0).map(|(d, p)| d - p).collect();
    let lambdabar = diag_n.iter().zip(&n0).map(|(d, n)| d - n).collect();
    let min_value = post.fold(p0.iter().chain(&n0).fold(f64::INFINITY, |a, b| a.min(*b)), f64::min);
    let sol = RiccatiSolution {
        grid: problem.grid,
        classification,
        p0,
        n0,
        diag_p,
        diag_n,
        zbar,
        lambdabar,
        post,
        min_value,
    };
    sol.check_invariants()?;
    Ok(sol)
}

impl RiccatiSolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn case(&self) -> CaseClass {
        self.classification.case
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn n0(&self) -> &[f64] {
        &self.n0
    }

    pub fn diag_p(&self) -> &[f64] {
        &self.diag_p
    }

    pub fn diag_n(&self) -> &[f64] {
        &self.diag_n
    }

    /// `diagP - P0`.
    pub fn zbar(&self) -> &[f64] {
        &self.zbar
    }

    /// `diagN - N0`.
    pub fn lambdabar(&self) -> &[f64] {
        &self.lambdabar
    }

    /// `P1(t_i; theta_j)`, `j <= i`.
    pub fn p1(&self, i: usize, j: usize) -> f64 {
        assert!(j <= i && i <= self.grid.steps(), "triangle index ({i}, {j}) out of range");
        self.post.get(Side::Plus, i, j)
    }

    /// `N1(t_i; theta_j)`, `j <= i`.
    pub fn n1(&self, i: usize, j: usize) -> f64 {
        assert!(j <= i && i <= self.grid.steps(), "triangle index ({i}, {j}) out of range");
        self.post.get(Side::Minus, i, j)
    }

    /// True when all post-default slices coincide with one curve.
    pub fn post_is_shared(&self) -> bool {
        matches!(self.post, PostStore::Shared { .. })
    }

    /// Smallest value over `P0, N0, P1, N1`. In the singular case this is
    /// the reported uniform positivity constant.
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// `sup P` over the pre-default curve and the post-default triangle.
    pub fn sup_p(&self) -> f64 {
        self.sup(Side::Plus)
    }

    /// `sup N` over the pre-default curve and the post-default triangle.
    pub fn sup_n(&self) -> f64 {
        self.sup(Side::Minus)
    }

    fn sup(&self, side: Side) -> f64 {
        let pre = match side {
            Side::Plus => &self.p0,
            Side::Minus => &self.n0,
        };
        let n = self.grid.steps();
        let mut s = pre.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        match &self.post {
            PostStore::Shared { .. } => {
                for i in 0..=n {
                    s = s.max(self.post.get(side, i, 0));
                }
            }
            PostStore::Triangle { .. } => {
                for j in 0..=n {
                    for i in j..=n {
                        s = s.max(self.post.get(side, i, j));
                    }
                }
            }
        }
        s
    }

    /// Re-checks the terminal conditions and the a priori bounds.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.grid.steps();
        let fail = |what: String| Err(Error::InvariantViolation(what));
        if self.p0[n] != self.n0[n] {
            return fail(format!("terminal P0 = {} differs from N0 = {}", self.p0[n], self.n0[n]));
        }
        match self.classification.case {
            CaseClass::Standard => {
                if self.min_value < -INVARIANT_TOL {
                    return fail(format!("nonnegativity: minimum value {:e}", self.min_value));
                }
            }
            CaseClass::Singular => {
                if !(self.min_value > 0.0) {
                    return fail(format!("uniform positivity: minimum value {:e}", self.min_value));
                }
            }
        }
        let (sp, sn) = (self.sup_p(), self.sup_n());
        for i in 0..=n {
            if self.zbar[i].abs() > 2.0 * sp + INVARIANT_TOL {
                return fail(format!("|Zbar| <= 2 sup P at node {i}: {} vs {}", self.zbar[i], sp));
            }
            if self.lambdabar[i].abs() > 2.0 * sn + INVARIANT_TOL {
                return fail(format!("|Lambdabar| <= 2 sup N at node {i}: {} vs {}", self.lambdabar[i], sn));
            }
            if self.zbar[i] + self.p0[i] < -INVARIANT_TOL {
                return fail(format!("Zbar + P0 >= 0 at node {i}: {}", self.zbar[i] + self.p0[i]));
            }
            if self.lambdabar[i] + self.n0[i] < -INVARIANT_TOL {
                return fail(format!("Lambdabar + N0 >= 0 at node {i}: {}", self.lambdabar[i] + self.n0[i]));
            }
        }
        Ok(())
    }

    fn lerp_curve(&self, vals: &[f64], t: f64) -> f64 {
        let (i, w) = self.grid.locate(t);
        if w == 0.0 {
            vals[i]
        } else if w == 1.0 {
            vals[i + 1]
        } else {
            (1.0 - w) * vals[i] + w * vals[i + 1]
        }
    }

    /// `(P0(t), N0(t))` by linear interpolation.
    pub fn pre_at(&self, t: f64) -> (f64, f64) {
        (self.lerp_curve(&self.p0, t), self.lerp_curve(&self.n0, t))
    }

    /// `(P1(t; theta), N1(t; theta))`, bilinear on the triangle.
    pub fn post_at(&self, t: f64, theta: f64) -> (f64, f64) {
        let (i, wt) = self.grid.locate(t);
        let (j, wq) = self.grid.locate(theta);
        let get = |side, i: usize, j: usize| self.post.get(side, i, j.min(i));
        let bil = |side| {
            let lo = (1.0 - wq) * get(side, i, j) + wq * get(side, i, j + 1);
            let hi = (1.0 - wq) * get(side, i + 1, j) + wq * get(side, i + 1, j + 1);
            if wt == 0.0 {
                lo
            } else {
                (1.0 - wt) * lo + wt * hi
            }
        };
        (bil(Side::Plus), bil(Side::Minus))
    }

    /// `V(t, x) = 1/2 P x^{+,2} + 1/2 N x^{-,2}`.
    pub fn value_at(&self, t: f64, x: f64, phase: Phase) -> Result<f64> {
        let horizon = self.grid.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::OutOfRange(format!("t = {t} outside [0, {horizon}]")));
        }
        let (p, n) = match phase {
            Phase::PreDefault => self.pre_at(t),
            Phase::PostDefault { theta } => {
                if !(0.0..=t).contains(&theta) {
                    return Err(Error::OutOfRange(format!("theta = {theta} must lie in [0, t = {t}]")));
                }
                self.post_at(t, theta)
            }
        };
        Ok(0.5 * p * x.max(0.0).powi(2) + 0.5 * n * (-x).max(0.0).powi(2))
    }
}

/// Free-function form of [`RiccatiSolution::value_at`].
pub fn value_at(solution: &RiccatiSolution, t: f64, x: f64, phase: Phase) -> Result<f64> {
    solution.value_at(t, x, phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConeSpec, PostValues, PreValues, Profile, TerminalWeights};

    fn separable(cone: ConeSpec, b: f64) -> LQProblem {
        LQProblem::constant(
            TimeGrid::new(1.0, 200).unwrap(),
            cone,
            1,
            PreValues::scalar(0.0, b, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
            PostValues::scalar(0.0, b, 0.0, 1.0, 0.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn post_flow_satisfies_implicit_relation() {
        let p = separable(ConeSpec::full_space(1), 1.0);
        let c = solve_post_default(&p, 0.0).unwrap();
        for (t, v) in c.times.iter().zip(&c.p) {
            assert!((v.ln() - 1.0 / v - (t - 1.0 - 1.0)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn orthant_run_matches_full_space_when_unconstrained_minimizer_is_feasible() {
        let a = solve_post_default(&separable(ConeSpec::nonneg(1), -1.0), 0.0).unwrap();
        let b = solve_post_default(&separable(ConeSpec::full_space(1), -1.0), 0.0).unwrap();
        for (x, y) in a.p.iter().zip(&b.p) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn off_grid_theta_starts_at_theta() {
        let p = separable(ConeSpec::full_space(1), 1.0);
        let c = solve_post_default(&p, 0.3333).unwrap();
        assert_eq!(c.times[0], 0.3333);
        let t = c.times[0];
        assert!((c.p[0].ln() - 1.0 / c.p[0] - (t - 2.0)).abs() < 1e-8);
    }

    #[test]
    fn zero_drift_keeps_theta_dependent_terminal() {
        let mut p = LQProblem::constant(
            TimeGrid::new(1.0, 20).unwrap(),
            ConeSpec::nonneg(1),
            1,
            PreValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0),
            PostValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap();
        p.terminal = TerminalWeights {
            g0: 1.0,
            g1: Profile::from_knots(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap(),
        };
        let (dp, _) = solve_diagonals(&p).unwrap();
        for (i, v) in dp.iter().enumerate() {
            assert!((v - (1.0 + p.grid.node(i))).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_fixed_point_with_jump() {
        let p = LQProblem::constant(
            TimeGrid::new(1.0, 50).unwrap(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0),
            PostValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap();
        let s = assemble(&p).unwrap();
        assert!(s.p0().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(s.zbar().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn value_function_examples() {
        let p = separable(ConeSpec::full_space(1), 0.0);
        let s = assemble(&p).unwrap();
        assert_eq!(s.value_at(0.0, 0.0, Phase::PreDefault).unwrap(), 0.0);
        let v = s.value_at(0.0, 3.0, Phase::PreDefault).unwrap();
        assert!((v - 0.5 * s.p0()[0] * 9.0).abs() < 1e-15);
        assert!(matches!(s.value_at(2.0, 1.0, Phase::PreDefault), Err(Error::OutOfRange(_))));
    }
}
