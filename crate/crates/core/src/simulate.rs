//! Monte Carlo engine for the controlled jump-diffusion.
//!
//! Paths use Euler-Maruyama on the problem grid. Each path draws from its own
//! ChaCha stream selected by `(seed, path index)`, always in the same order
//! (first the exponential threshold for the default time, then one Gaussian
//! vector per step), so policies compared under one seed share their noise
//! and results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::Side;
use crate::model::{LQProblem, PostValues, PreValues, TimeGrid};
use crate::riccati::FeedbackPolicy;

/// Per-path random stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Draws `Theta ~ Exp(1)` and returns the first time the trapezoid-integrated
/// intensity reaches it, or `None` if that happens after the horizon.
/// `lambda` holds the intensity at the grid nodes.
pub fn sample_default<R: Rng + ?Sized>(lambda: &[f64], grid: &TimeGrid, rng: &mut R) -> Option<f64> {
    let theta: f64 = rng.sample(Exp1);
    first_passage(lambda, grid, theta)
}

fn first_passage(lambda: &[f64], grid: &TimeGrid, threshold: f64) -> Option<f64> {
    let h = grid.step();
    let mut acc = 0.0;
    for i in 0..grid.steps() {
        let inc = 0.5 * (lambda[i] + lambda[i + 1]) * h;
        if inc > 0.0 && acc + inc >= threshold {
            let w = ((threshold - acc) / inc).clamp(0.0, 1.0);
            return Some(grid.node(i) + w * (grid.node(i + 1) - grid.node(i)));
        }
        acc += inc;
    }
    None
}

/// State, control and cost along one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub tau: Option<f64>,
    /// State at nodes `0..=n`, after the jump at the jump node.
    pub x: Vec<f64>,
    /// Control at nodes `0..n`, `m` entries per node, row-major.
    pub u: Vec<f64>,
    pub cost: f64,
    pub jump: Option<JumpRecord>,
}

/// The default jump as applied on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    /// Grid node at or after `tau` where the jump is applied.
    pub node: usize,
    pub x_before: f64,
    pub x_after: f64,
    /// `E0(tau) X(tau-) + F0(tau) . u(tau)`.
    pub size: f64,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// Mean and `sd / sqrt(N)` of the samples, summed in index order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        MCEstimate {
            mean,
            std_error: (var / n).sqrt(),
            paths: samples.len(),
            seed,
        }
    }

    /// `(mean - target) / SE`; zero when both the error and SE vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Mean and variance of the terminal state with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalMoments {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    /// Delta-method standard error of the sample variance.
    pub variance_se: f64,
    pub paths: usize,
    pub seed: u64,
}

impl TerminalMoments {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let m2 = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m4 = samples.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let variance = m2 * n / (n - 1.0);
        TerminalMoments {
            mean,
            mean_se: (variance / n).sqrt(),
            variance,
            variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
            paths: samples.len(),
            seed,
        }
    }
}

/// Flat coefficient storage for the inner loop.
#[derive(Debug, Clone)]
struct Flat {
    a: f64,
    b: Vec<f64>,
    c: Vec<f64>,
    /// `k x m`, row-major.
    d: Vec<f64>,
    q: f64,
    /// `m x m`, row-major.
    r: Vec<f64>,
}

impl Flat {
    fn from_parts(a: f64, b: &[f64], c: &[f64], d: &nalgebra::DMatrix<f64>, q: f64, r: &nalgebra::DMatrix<f64>) -> Self {
        let row_major = |m: &nalgebra::DMatrix<f64>| m.transpose().as_slice().to_vec();
        Flat {
            a,
            b: b.to_vec(),
            c: c.to_vec(),
            d: row_major(d),
            q,
            r: row_major(r),
        }
    }

    fn from_pre(v: &PreValues) -> Self {
        Self::from_parts(v.a, v.b.as_slice(), v.c.as_slice(), &v.d, v.q, &v.r)
    }

    fn from_post(v: &PostValues) -> Self {
        Self::from_parts(v.a, v.b.as_slice(), v.c.as_slice(), &v.d, v.q, &v.r)
    }

    fn control_cost(&self, u: &[f64]) -> f64 {
        let m = u.len();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += u[i] * self.r[i * m + j] * u[j];
            }
        }
        s
    }

    /// `(C x + D u) . dW`.
    fn diffusion(&self, x: f64, u: &[f64], dw: &[f64]) -> f64 {
        let m = u.len();
        let mut s = 0.0;
        for (r, w) in dw.iter().enumerate() {
            let mut row = self.c[r] * x;
            row += self.d[r * m..(r + 1) * m].iter().zip(u).map(|(d, v)| d * v).sum::<f64>();
            s += row * w;
        }
        s
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Problem data laid out per grid node, shared across paths.
pub struct Simulator<'a> {
    problem: &'a LQProblem,
    policy: &'a FeedbackPolicy,
    pre: Vec<Flat>,
    pre_e: Vec<f64>,
    pre_f: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    post: Option<Vec<Flat>>,
}

struct Outcome {
    cost: f64,
    x_terminal: f64,
    tau: Option<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(problem: &'a LQProblem, policy: &'a FeedbackPolicy) -> Result<Self> {
        if policy.grid() != &problem.grid || policy.control_dim() != problem.control_dim() {
            return Err(Error::InvalidInput("policy grid or dimension does not match the problem".into()));
        }
        let grid = problem.grid;
        let nodes = grid.nodes();
        let pre_vals: Vec<PreValues> = nodes.iter().map(|t| problem.pre.at(*t)).collect();
        let post = if problem.post.is_theta_free() {
            Some(nodes.iter().map(|t| Flat::from_post(&problem.post.at(*t, 0.0))).collect())
        } else {
            None
        };
        Ok(Simulator {
            problem,
            policy,
            pre: pre_vals.iter().map(Flat::from_pre).collect(),
            pre_e: pre_vals.iter().map(|v| v.e).collect(),
            pre_f: pre_vals.iter().map(|v| v.f.as_slice().to_vec()).collect(),
            lambda: pre_vals.iter().map(|v| v.lambda).collect(),
            post,
        })
    }

    fn run<R: Rng>(&self, x0: f64, rng: &mut R, mut record: Option<&mut PathRecord>) -> Result<Outcome> {
        let grid = &self.problem.grid;
        let n = grid.steps();
        let h = grid.step();
        let m = self.problem.control_dim();
        let k = self.problem.brownian_dim;
        let sqrt_h = h.sqrt();

        let tau = sample_default(&self.lambda, grid, rng);
        // first node at or after tau
        let jump_node = tau.map(|t| {
            let (i, w) = grid.locate(t);
            if w == 0.0 {
                i
            } else {
                i + 1
            }
        });

        let mut x = x0;
        let mut cost = 0.0;
        let mut u = vec![0.0; m];
        let mut gp = vec![0.0; m];
        let mut gm = vec![0.0; m];
        let mut dw = vec![0.0; k];
        let mut defaulted = false;
        let mut post_flat: Option<Flat> = None;

        let control = |gp: &[f64], gm: &[f64], x: f64, u: &mut [f64]| {
            let (xp, xm) = (x.max(0.0), (-x).max(0.0));
            for j in 0..u.len() {
                u[j] = gp[j] * xp + gm[j] * xm;
            }
        };

        for i in 0..=n {
            if !defaulted && jump_node == Some(i) {
                let t = tau.expect("jump node implies a default time");
                // left-limit state and pre-default gains at tau
                self.policy.pre_gain_into(Side::Plus, t, &mut gp);
                self.policy.pre_gain_into(Side::Minus, t, &mut gm);
                control(&gp, &gm, x, &mut u);
                let pv = self.problem.pre.at(t);
                let size = pv.e * x + dot(pv.f.as_slice(), &u);
                let before = x;
                x += size;
                if let Some(rec) = record.as_deref_mut() {
                    rec.jump = Some(JumpRecord {
                        node: i,
                        x_before: before,
                        x_after: x,
                        size,
                    });
                    rec.x[i] = x;
                }
                defaulted = true;
            }
            if !x.is_finite() {
                return Err(Error::NonFinite { step: i });
            }
            if i == n {
                break;
            }
            let t = grid.node(i);
            let c: &Flat = if defaulted {
                let theta = tau.expect("defaulted");
                self.policy.post_gain_into(Side::Plus, i, theta, &mut gp);
                self.policy.post_gain_into(Side::Minus, i, theta, &mut gm);
                match &self.post {
                    Some(v) => &v[i],
                    None => post_flat.insert(Flat::from_post(&self.problem.post.at(t, theta))),
                }
            } else {
                gp.copy_from_slice(self.policy.pre_gain(Side::Plus, i));
                gm.copy_from_slice(self.policy.pre_gain(Side::Minus, i));
                &self.pre[i]
            };
            control(&gp, &gm, x, &mut u);
            cost += 0.5 * (c.q * x * x + c.control_cost(&u)) * h;
            for w in dw.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = z * sqrt_h;
            }
            let (a, bu) = if defaulted {
                (c.a, dot(&c.b, &u))
            } else {
                let l = self.lambda[i];
                (c.a - l * self.pre_e[i], dot(&c.b, &u) - l * dot(&self.pre_f[i], &u))
            };
            let dx = (a * x + bu) * h + c.diffusion(x, &u, &dw);
            if let Some(rec) = record.as_deref_mut() {
                rec.u[i * m..(i + 1) * m].copy_from_slice(&u);
            }
            x += dx;
            if let Some(rec) = record.as_deref_mut() {
                rec.x[i + 1] = x;
            }
        }
        let g = match tau {
            Some(t) if defaulted => self.problem.terminal.g1.at(t),
            _ => self.problem.terminal.g0,
        };
        cost += 0.5 * g * x * x;
        Ok(Outcome {
            cost,
            x_terminal: x,
            tau,
        })
    }

    /// One path with full state and control history.
    pub fn path<R: Rng>(&self, x0: f64, rng: &mut R) -> Result<PathRecord> {
        let n = self.problem.grid.steps();
        let mut rec = PathRecord {
            tau: None,
            x: vec![0.0; n + 1],
            u: vec![0.0; n * self.problem.control_dim()],
            cost: 0.0,
            jump: None,
        };
        rec.x[0] = x0;
        let out = self.run(x0, rng, Some(&mut rec))?;
        rec.cost = out.cost;
        rec.tau = out.tau;
        Ok(rec)
    }

    fn samples(&self, x0: f64, paths: usize, seed: u64) -> Result<Vec<Outcome>> {
        if paths < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 paths, got {paths}")));
        }
        (0..paths)
            .into_par_iter()
            .map(|p| self.run(x0, &mut path_rng(seed, p as u64), None))
            .collect()
    }

    pub fn cost(&self, x0: f64, paths: usize, seed: u64) -> Result<MCEstimate> {
        let costs: Vec<f64> = self.samples(x0, paths, seed)?.iter().map(|o| o.cost).collect();
        Ok(MCEstimate::from_samples(&costs, seed))
    }

    pub fn terminal_moments(&self, x0: f64, paths: usize, seed: u64) -> Result<TerminalMoments> {
        let xs: Vec<f64> = self.samples(x0, paths, seed)?.iter().map(|o| o.x_terminal).collect();
        Ok(TerminalMoments::from_samples(&xs, seed))
    }
}

/// One closed-loop path under `policy`.
pub fn simulate_path<R: Rng>(problem: &LQProblem, policy: &FeedbackPolicy, x0: f64, rng: &mut R) -> Result<PathRecord> {
    Simulator::new(problem, policy)?.path(x0, rng)
}

/// Monte Carlo estimate of the cost of `policy` from `x0` at time 0.
pub fn mc_cost(problem: &LQProblem, policy: &FeedbackPolicy, x0: f64, paths: usize, seed: u64) -> Result<MCEstimate> {
    Simulator::new(problem, policy)?.cost(x0, paths, seed)
}

/// Monte Carlo mean and variance of `X_T`.
pub fn mc_terminal_moments(
    problem: &LQProblem,
    policy: &FeedbackPolicy,
    x0: f64,
    paths: usize,
    seed: u64,
) -> Result<TerminalMoments> {
    Simulator::new(problem, policy)?.terminal_moments(x0, paths, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConeSpec;

    fn frozen(lambda: f64, e: f64) -> LQProblem {
        LQProblem::constant(
            TimeGrid::new(1.0, 50).unwrap(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.0, 0.0, 0.0, 1.0, e, 0.0, 0.0, 1.0, lambda),
            PostValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 1.0),
            2.0,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_intensity_never_defaults() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let mut rng = path_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_default(&[0.0; 11], &g, &mut rng), None);
        }
    }

    #[test]
    fn first_passage_interpolates_within_the_step() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        // constant intensity 2: integral reaches 0.5 at t = 0.25
        let t = first_passage(&[2.0; 11], &g, 0.5).unwrap();
        assert!((t - 0.25).abs() < 1e-14);
        assert_eq!(first_passage(&[2.0; 11], &g, 2.5), None);
    }

    #[test]
    fn frozen_dynamics_have_zero_variance() {
        let p = frozen(0.0, 0.0);
        let pol = FeedbackPolicy::zero(p.grid, p.cone);
        let est = mc_cost(&p, &pol, 1.5, 100, 7).unwrap();
        assert_eq!(est.mean, 0.5 * 2.0 * 1.5 * 1.5);
        assert_eq!(est.std_error, 0.0);
        let mom = mc_terminal_moments(&p, &pol, 1.5, 100, 7).unwrap();
        assert_eq!((mom.mean, mom.variance), (1.5, 0.0));
    }

    #[test]
    fn wipeout_jump_zeroes_the_state() {
        let p = frozen(50.0, -1.0);
        let pol = FeedbackPolicy::zero(p.grid, p.cone);
        let sim = Simulator::new(&p, &pol).unwrap();
        let mut rng = path_rng(3, 0);
        let rec = sim.path(1.0, &mut rng).unwrap();
        let j = rec.jump.unwrap();
        assert_eq!(j.x_after, 0.0);
        assert!(rec.x[j.node..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let p = LQProblem::constant(
            TimeGrid::new(1.0, 20).unwrap(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.1, 0.2, 0.3, 0.4, -0.3, 0.2, 1.0, 1.0, 0.8),
            PostValues::scalar(0.1, 0.2, 0.3, 0.4, 1.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap();
        let pol = FeedbackPolicy::from_time_gains(p.grid, p.cone, |_, s, _| vec![if s == Side::Plus { -0.3 } else { 0.2 }]).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| mc_cost(&p, &pol, 1.0, 500, 11).unwrap());
        let b = three.install(|| mc_cost(&p, &pol, 1.0, 500, 11).unwrap());
        assert_eq!(a, b);
    }
}
