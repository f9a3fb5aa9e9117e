//! Brute-force optimality witness: exhaustive Monte Carlo search over
//! piecewise-constant proportional feedback gains.
//!
//! The search simulates its own Euler paths from pre-drawn noise, so every
//! candidate sees the same Brownian increments and default thresholds. The
//! interval tree is explored depth first, reusing the path states reached at
//! each interval boundary.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ConeKind, LQProblem, TimeGrid};
use crate::simulate::path_rng;

/// Best gain sequence found by [`policy_grid_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridOracleOutcome {
    /// One gain per interval.
    pub best_gains: Vec<f64>,
    pub best_cost: f64,
    pub best_se: f64,
    /// Cost of the all-zero policy.
    pub zero_cost: f64,
    pub evaluated: usize,
}

struct Coeffs {
    a: f64,
    b: f64,
    c: Vec<f64>,
    d: Vec<f64>,
    q: f64,
    r: f64,
}

struct Setup {
    grid: TimeGrid,
    pre: Vec<Coeffs>,
    post: Vec<Coeffs>,
    e: Vec<f64>,
    f: Vec<f64>,
    lambda: Vec<f64>,
    g0: f64,
    g1: f64,
    orthant: bool,
    /// `(jump node, tau)` per path; node `n + 1` when no default.
    defaults: Vec<(usize, f64)>,
    noise: Vec<f64>,
    k: usize,
}

#[derive(Clone)]
struct State {
    x: Vec<f64>,
    cost: Vec<f64>,
}

impl Setup {
    fn control(&self, g: f64, x: f64) -> f64 {
        if self.orthant {
            g * x.max(0.0)
        } else {
            g * x
        }
    }

    /// Advances every path over grid steps `from..to` with gain `g`.
    fn advance(&self, state: &State, from: usize, to: usize, g: f64) -> State {
        let n = self.grid.steps();
        let h = self.grid.step();
        let k = self.k;
        let mut out = state.clone();
        for (p, (x, cost)) in out.x.iter_mut().zip(out.cost.iter_mut()).enumerate() {
            let (jn, _) = self.defaults[p];
            for i in from..to {
                if i == jn {
                    let u = self.control(g, *x);
                    *x += self.e[i] * *x + self.f[i] * u;
                }
                let u = self.control(g, *x);
                let post = i >= jn;
                let c = if post { &self.post[i] } else { &self.pre[i] };
                *cost += 0.5 * (c.q * *x * *x + c.r * u * u) * h;
                let (a, b) = if post {
                    (c.a, c.b)
                } else {
                    (c.a - self.lambda[i] * self.e[i], c.b - self.lambda[i] * self.f[i])
                };
                let w = &self.noise[(p * n + i) * k..(p * n + i + 1) * k];
                let diff: f64 = (0..k).map(|r| (c.c[r] * *x + c.d[r] * u) * w[r]).sum();
                *x += (a * *x + b * u) * h + diff;
            }
        }
        out
    }

    /// Terminal jump (if the default lands in the last cell) and terminal
    /// cost; returns mean and standard error.
    fn finish(&self, state: &State, g: f64) -> (f64, f64) {
        let n = self.grid.steps();
        let costs: Vec<f64> = state
            .x
            .iter()
            .zip(&state.cost)
            .enumerate()
            .map(|(p, (x, c))| {
                let (jn, _) = self.defaults[p];
                let mut x = *x;
                if jn == n {
                    let u = self.control(g, x);
                    x += self.e[n] * x + self.f[n] * u;
                }
                let gt = if jn <= n { self.g1 } else { self.g0 };
                c + 0.5 * gt * x * x
            })
            .collect();
        let m = costs.len() as f64;
        let mean = costs.iter().sum::<f64>() / m;
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (mean, (var / m).sqrt())
    }
}

/// Exhaustive search over gains `u = g_l x` (`g_l x^+` on the orthant),
/// constant on each of `intervals` equal sub-intervals of `[0, T]`, with
/// every `g_l` drawn from `gains`.
///
/// Requires one control, constant coefficients and a `G1` constant in the
/// default time. `steps` sets the oracle's own time step.
pub fn policy_grid_oracle(
    problem: &LQProblem,
    x0: f64,
    gains: &[f64],
    intervals: usize,
    steps: usize,
    paths: usize,
    seed: u64,
) -> Result<GridOracleOutcome> {
    if problem.control_dim() != 1 {
        return Err(Error::InvalidInput("the policy oracle handles one control".into()));
    }
    if !problem.pre.is_constant() || !problem.post.is_theta_free() || !problem.terminal.g1.is_constant() {
        return Err(Error::InvalidInput("the policy oracle needs constant coefficients".into()));
    }
    if intervals == 0 || !steps.is_multiple_of(intervals) || paths < 2 || gains.is_empty() {
        return Err(Error::InvalidInput("steps must split evenly into a positive number of intervals".into()));
    }
    let grid = TimeGrid::new(problem.grid.horizon(), steps)?;
    let k = problem.brownian_dim;
    let nodes = grid.nodes();
    let pre_vals: Vec<_> = nodes.iter().map(|t| problem.pre.at(*t)).collect();
    let pre = pre_vals
        .iter()
        .map(|v| Coeffs {
            a: v.a,
            b: v.b[0],
            c: v.c.iter().copied().collect(),
            d: v.d.column(0).iter().copied().collect(),
            q: v.q,
            r: v.r[(0, 0)],
        })
        .collect();
    let post = nodes
        .iter()
        .map(|t| {
            let v = problem.post.at(*t, 0.0);
            Coeffs {
                a: v.a,
                b: v.b[0],
                c: v.c.iter().copied().collect(),
                d: v.d.column(0).iter().copied().collect(),
                q: v.q,
                r: v.r[(0, 0)],
            }
        })
        .collect();
    let lambda: Vec<f64> = pre_vals.iter().map(|v| v.lambda).collect();

    let h = grid.step();
    let mut defaults = Vec::with_capacity(paths);
    let mut noise = vec![0.0; paths * steps * k];
    for p in 0..paths {
        let mut rng = path_rng(seed, p as u64);
        let threshold: f64 = rng.sample(Exp1);
        let mut acc = 0.0;
        let mut hit = (steps + 1, f64::INFINITY);
        for i in 0..steps {
            let inc = 0.5 * (lambda[i] + lambda[i + 1]) * h;
            if inc > 0.0 && acc + inc >= threshold {
                let w = (threshold - acc) / inc;
                let tau = nodes[i] + w * h;
                hit = (if w <= 0.0 { i } else { i + 1 }, tau);
                break;
            }
            acc += inc;
        }
        defaults.push(hit);
        for z in noise[p * steps * k..(p + 1) * steps * k].iter_mut() {
            let s: f64 = rng.sample(StandardNormal);
            *z = s * h.sqrt();
        }
    }

    let setup = Setup {
        grid,
        pre,
        post,
        e: pre_vals.iter().map(|v| v.e).collect(),
        f: pre_vals.iter().map(|v| v.f[0]).collect(),
        lambda,
        g0: problem.terminal.g0,
        g1: problem.terminal.g1.at(0.0),
        orthant: problem.cone.kind == ConeKind::NonNegOrthant,
        defaults,
        noise,
        k,
    };
    if setup.orthant && gains.iter().any(|g| *g < 0.0) {
        return Err(Error::InvalidInput("orthant gains must be nonnegative".into()));
    }

    let start = State {
        x: vec![x0; paths],
        cost: vec![0.0; paths],
    };
    let per = steps / intervals;
    let mut best = GridOracleOutcome {
        best_gains: vec![],
        best_cost: f64::INFINITY,
        best_se: 0.0,
        zero_cost: f64::NAN,
        evaluated: 0,
    };
    let mut path = Vec::with_capacity(intervals);
    explore(&setup, &start, 0, intervals, per, gains, &mut path, &mut best);

    let mut zero = start.clone();
    for l in 0..intervals {
        zero = setup.advance(&zero, l * per, (l + 1) * per, 0.0);
    }
    best.zero_cost = setup.finish(&zero, 0.0).0;
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn explore(
    setup: &Setup,
    state: &State,
    level: usize,
    intervals: usize,
    per: usize,
    gains: &[f64],
    path: &mut Vec<f64>,
    best: &mut GridOracleOutcome,
) {
    for &g in gains {
        let next = setup.advance(state, level * per, (level + 1) * per, g);
        path.push(g);
        if level + 1 == intervals {
            let (mean, se) = setup.finish(&next, g);
            best.evaluated += 1;
            if mean < best.best_cost {
                best.best_cost = mean;
                best.best_se = se;
                best.best_gains = path.clone();
            }
        } else {
            explore(setup, &next, level + 1, intervals, per, gains, path, best);
        }
        path.pop();
    }
}
