use nalgebra::DVector;
use rayon::prelude::*;

use super::RiccatiSolution;
use crate::error::{Error, Result};
use crate::hamiltonian::{minimize_h_post, minimize_h_pre, Side};
use crate::model::{CoefficientSlice, ConeSpec, LQProblem, Phase, TimeGrid};

/// Post-default gains on the triangle, stored flat with `m` entries per node.
#[derive(Debug, Clone, PartialEq)]
enum PostGains {
    /// Gains independent of the default time; one row per `t_i`.
    Shared { plus: Vec<f64>, minus: Vec<f64> },
    /// `rows[j]` holds the gains at `(t_i, theta_j)` for `i = j..=n`.
    Triangle { plus: Vec<Vec<f64>>, minus: Vec<Vec<f64>> },
}

/// Feedback law `u = xi^+ X^+ + xi^- X^-` with phase-dependent gains.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPolicy {
    grid: TimeGrid,
    cone: ConeSpec,
    pre_plus: Vec<f64>,
    pre_minus: Vec<f64>,
    post: PostGains,
}

fn lerp_into(a: &[f64], b: &[f64], w: f64, out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = if w == 0.0 { *x } else { (1.0 - w) * x + w * y };
    }
}

impl FeedbackPolicy {
    /// Gains that depend on time only: `gain(i, side, post_default)`.
    pub fn from_time_gains(
        grid: TimeGrid,
        cone: ConeSpec,
        gain: impl Fn(usize, Side, bool) -> Vec<f64>,
    ) -> Result<Self> {
        let n = grid.steps();
        let collect = |side, post| -> Vec<f64> { (0..=n).flat_map(|i| gain(i, side, post)).collect() };
        let policy = FeedbackPolicy {
            grid,
            cone,
            pre_plus: collect(Side::Plus, false),
            pre_minus: collect(Side::Minus, false),
            post: PostGains::Shared {
                plus: collect(Side::Plus, true),
                minus: collect(Side::Minus, true),
            },
        };
        policy.check()?;
        Ok(policy)
    }

    /// The policy `u = 0`.
    pub fn zero(grid: TimeGrid, cone: ConeSpec) -> Self {
        let m = cone.dim;
        Self::from_time_gains(grid, cone, |_, _, _| vec![0.0; m]).expect("zero lies in every cone")
    }

    fn check(&self) -> Result<()> {
        let m = self.cone.dim;
        let n = self.grid.steps();
        let all: Vec<&Vec<f64>> = match &self.post {
            PostGains::Shared { plus, minus } => vec![&self.pre_plus, &self.pre_minus, plus, minus],
            PostGains::Triangle { plus, minus } => {
                let mut v = vec![&self.pre_plus, &self.pre_minus];
                v.extend(plus.iter().chain(minus));
                v
            }
        };
        if self.pre_plus.len() != (n + 1) * m {
            return Err(Error::InvalidInput("gain arrays do not match the grid".into()));
        }
        for arr in all {
            if arr.len() % m != 0 || arr.chunks(m).any(|g| !self.cone.contains(g)) {
                return Err(Error::InvalidInput("a feedback gain lies outside the cone".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn control_dim(&self) -> usize {
        self.cone.dim
    }

    /// Applies `f(side, post_default, gain)` to every gain, which must stay
    /// in the cone.
    pub fn map_gains(&self, f: impl Fn(Side, bool, &mut [f64])) -> Result<Self> {
        let m = self.cone.dim;
        let apply = |v: &[f64], side, post| -> Vec<f64> {
            let mut out = v.to_vec();
            for g in out.chunks_mut(m) {
                f(side, post, g);
            }
            out
        };
        let post = match &self.post {
            PostGains::Shared { plus, minus } => PostGains::Shared {
                plus: apply(plus, Side::Plus, true),
                minus: apply(minus, Side::Minus, true),
            },
            PostGains::Triangle { plus, minus } => PostGains::Triangle {
                plus: plus.iter().map(|r| apply(r, Side::Plus, true)).collect(),
                minus: minus.iter().map(|r| apply(r, Side::Minus, true)).collect(),
            },
        };
        let policy = FeedbackPolicy {
            grid: self.grid,
            cone: self.cone,
            pre_plus: apply(&self.pre_plus, Side::Plus, false),
            pre_minus: apply(&self.pre_minus, Side::Minus, false),
            post,
        };
        policy.check()?;
        Ok(policy)
    }

    /// Every gain multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return Err(Error::InvalidInput(format!("scale factor {factor} must be nonnegative")));
        }
        self.map_gains(|_, _, g| g.iter_mut().for_each(|v| *v *= factor))
    }

    /// Pre-default gain at node `i`.
    pub fn pre_gain(&self, side: Side, i: usize) -> &[f64] {
        let m = self.cone.dim;
        let v = match side {
            Side::Plus => &self.pre_plus,
            Side::Minus => &self.pre_minus,
        };
        &v[i * m..(i + 1) * m]
    }

    /// Pre-default gain at any `t`, linear between nodes.
    pub fn pre_gain_into(&self, side: Side, t: f64, out: &mut [f64]) {
        let (i, w) = self.grid.locate(t);
        lerp_into(self.pre_gain(side, i), self.pre_gain(side, i + 1), w, out);
    }

    /// Post-default gain at `(t_i, theta_j)`, `j <= i`.
    pub fn post_gain(&self, side: Side, i: usize, j: usize) -> &[f64] {
        let m = self.cone.dim;
        match &self.post {
            PostGains::Shared { plus, minus } => {
                let v = if side == Side::Plus { plus } else { minus };
                &v[i * m..(i + 1) * m]
            }
            PostGains::Triangle { plus, minus } => {
                let v = if side == Side::Plus { &plus[j] } else { &minus[j] };
                let k = i - j;
                &v[k * m..(k + 1) * m]
            }
        }
    }

    /// Post-default gain at node `t_i` for any default time `theta <= t_i`,
    /// linear in `theta` between grid nodes.
    pub fn post_gain_into(&self, side: Side, i: usize, theta: f64, out: &mut [f64]) {
        let (j, w) = self.grid.locate(theta);
        let j = j.min(i);
        let j1 = (j + 1).min(i);
        lerp_into(self.post_gain(side, i, j), self.post_gain(side, i, j1), w, out);
    }

    /// Gain at an arbitrary node and phase.
    pub fn gain(&self, side: Side, i: usize, phase: Phase) -> Vec<f64> {
        let mut out = vec![0.0; self.cone.dim];
        match phase {
            Phase::PreDefault => out.copy_from_slice(self.pre_gain(side, i)),
            Phase::PostDefault { theta } => self.post_gain_into(side, i, theta, &mut out),
        }
        out
    }
}

fn argmin_post(problem: &LQProblem, slice: &CoefficientSlice, side: Side, p: f64, q: &DVector<f64>) -> Result<Vec<f64>> {
    Ok(minimize_h_post(side, slice, p, q, &problem.cone)?.argmin.as_slice().to_vec())
}

/// Minimizers of the Hamiltonians along the solution.
///
/// Pre-default gains use the same argument wiring as the pre-default flow:
/// `h0+(t, P0, 0, diagP - P0, diagN)` and `h0-(t, N0, 0, diagP, diagN - N0)`.
pub fn extract_policy(problem: &LQProblem, solution: &RiccatiSolution) -> Result<FeedbackPolicy> {
    let grid = problem.grid;
    if solution.grid() != &grid {
        return Err(Error::InvalidInput("solution grid differs from the problem grid".into()));
    }
    let n = grid.steps();
    let q = DVector::zeros(problem.brownian_dim);
    let pre: Vec<(Vec<f64>, Vec<f64>)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let s = CoefficientSlice::from_pre(problem.pre.at(grid.node(i)));
            let (p0, n0) = (solution.p0()[i], solution.n0()[i]);
            let (dp, dn) = (solution.diag_p()[i], solution.diag_n()[i]);
            let plus = minimize_h_pre(Side::Plus, &s, p0, &q, dp - p0, dn, &problem.cone)?;
            let minus = minimize_h_pre(Side::Minus, &s, n0, &q, dp, dn - n0, &problem.cone)?;
            Ok((plus.argmin.as_slice().to_vec(), minus.argmin.as_slice().to_vec()))
        })
        .collect::<Result<_>>()?;
    let (pre_plus, pre_minus): (Vec<Vec<f64>>, Vec<Vec<f64>>) = pre.into_iter().unzip();

    let post = if solution.post_is_shared() {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let t = grid.node(i);
                let s = CoefficientSlice::from_post(problem.post.at(t, 0.0));
                Ok((
                    argmin_post(problem, &s, Side::Plus, solution.p1(i, 0), &q)?,
                    argmin_post(problem, &s, Side::Minus, solution.n1(i, 0), &q)?,
                ))
            })
            .collect::<Result<_>>()?;
        let (plus, minus): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        PostGains::Shared {
            plus: plus.concat(),
            minus: minus.concat(),
        }
    } else {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..=n)
            .into_par_iter()
            .map(|j| {
                let theta = grid.node(j);
                let mut plus = Vec::new();
                let mut minus = Vec::new();
                for i in j..=n {
                    let s = CoefficientSlice::from_post(problem.post.at(grid.node(i), theta));
                    plus.extend(argmin_post(problem, &s, Side::Plus, solution.p1(i, j), &q)?);
                    minus.extend(argmin_post(problem, &s, Side::Minus, solution.n1(i, j), &q)?);
                }
                Ok((plus, minus))
            })
            .collect::<Result<_>>()?;
        let (plus, minus) = rows.into_iter().unzip();
        PostGains::Triangle { plus, minus }
    };

    let policy = FeedbackPolicy {
        grid,
        cone: problem.cone,
        pre_plus: pre_plus.concat(),
        pre_minus: pre_minus.concat(),
        post,
    };
    policy.check()?;
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PostValues, PreValues};
    use crate::riccati::assemble;

    #[test]
    fn no_drive_gives_zero_gains() {
        let p = LQProblem::constant(
            TimeGrid::new(1.0, 20).unwrap(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.1, 0.0, 0.0, 0.5, -0.2, 0.0, 1.0, 1.0, 0.4),
            PostValues::scalar(0.1, 0.0, 0.0, 0.5, 1.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap();
        let s = assemble(&p).unwrap();
        let pol = extract_policy(&p, &s).unwrap();
        for i in 0..=20 {
            assert_eq!(pol.pre_gain(Side::Plus, i), &[0.0]);
            assert_eq!(pol.post_gain(Side::Minus, i, 0), &[0.0]);
        }
    }

    #[test]
    fn unconstrained_gain_matches_stationary_formula() {
        let (b, c, d, r) = (0.3, 0.2, 0.6, 0.8);
        let p = LQProblem::constant(
            TimeGrid::new(1.0, 40).unwrap(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.1, b, c, d, 0.0, 0.0, 1.0, r, 0.0),
            PostValues::scalar(0.1, b, c, d, 1.0, r),
            1.0,
            1.0,
        )
        .unwrap();
        let s = assemble(&p).unwrap();
        let pol = extract_policy(&p, &s).unwrap();
        for i in 0..=40 {
            let pp = s.p0()[i];
            let expect = -(pp * b + pp * d * c) / (pp * d * d + r);
            assert!((pol.pre_gain(Side::Plus, i)[0] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn orthant_with_large_drift_is_on_the_boundary() {
        let p = LQProblem::constant(
            TimeGrid::new(1.0, 20).unwrap(),
            ConeSpec::nonneg(1),
            1,
            PreValues::scalar(0.0, 5.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0),
            PostValues::scalar(0.0, 5.0, 0.0, 1.0, 1.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap();
        let s = assemble(&p).unwrap();
        let pol = extract_policy(&p, &s).unwrap();
        assert!((0..=20).all(|i| pol.pre_gain(Side::Plus, i)[0] == 0.0));
        assert!(pol.scaled(-1.0).is_err());
    }
}
