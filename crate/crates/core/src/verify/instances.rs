//! Randomized and fixed problem instances used by the acceptance battery.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::meanvariance::MarketSpec;
use crate::model::{
    ConeKind, ConeSpec, LQProblem, PostDefaultCoeffs, PostFields, PostValues, PreDefaultCoeffs, PreValues, Profile,
    TerminalWeights, TimeGrid,
};

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn vector<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| uniform(rng, lo, hi))
}

fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| uniform(rng, lo, hi))
}

/// `L L' + floor * I` with entries of `L` in `[-1, 1]`.
pub fn random_spd<R: Rng>(rng: &mut R, m: usize, floor: f64) -> DMatrix<f64> {
    let l = matrix(rng, m, m, -1.0, 1.0);
    &l * l.transpose() + DMatrix::identity(m, m) * floor
}

/// Shape and regime of a random instance.
#[derive(Debug, Clone, Copy)]
pub struct InstanceShape {
    pub steps: usize,
    pub cone: ConeKind,
    pub m: usize,
    pub k: usize,
    pub jump: bool,
    /// Post-default coefficients affine in the default time and `G1` varying.
    pub theta_dependent: bool,
    /// `R = 0` with uniformly positive `G` and `D'D`.
    pub singular: bool,
}

fn random_pre<R: Rng>(rng: &mut R, s: &InstanceShape) -> PreValues {
    let d = if s.singular {
        // well-conditioned D so that D'D stays positive definite
        let mut d = matrix(rng, s.k, s.m, -0.3, 0.3);
        for i in 0..s.m.min(s.k) {
            d[(i, i)] += if rng.random_bool(0.5) { 0.8 } else { -0.8 };
        }
        d
    } else {
        matrix(rng, s.k, s.m, -1.0, 1.0)
    };
    PreValues {
        a: uniform(rng, -0.5, 0.5),
        b: vector(rng, s.m, -1.0, 1.0),
        c: vector(rng, s.k, -0.5, 0.5),
        d,
        e: if s.jump { uniform(rng, -0.9, 0.5) } else { 0.0 },
        f: if s.jump { vector(rng, s.m, -0.5, 0.5) } else { DVector::zeros(s.m) },
        q: uniform(rng, 0.0, 1.0),
        r: if s.singular { DMatrix::zeros(s.m, s.m) } else { random_spd(rng, s.m, 0.2) },
        lambda: if s.jump { uniform(rng, 0.1, 1.5) } else { 0.0 },
    }
}

fn post_from_pre(p: &PreValues) -> PostValues {
    PostValues {
        a: p.a,
        b: p.b.clone(),
        c: p.c.clone(),
        d: p.d.clone(),
        q: p.q,
        r: p.r.clone(),
    }
}

/// A random instance of the given shape. Without jumps the post-default
/// data mirror the pre-default data.
pub fn random_problem<R: Rng>(rng: &mut R, s: &InstanceShape) -> LQProblem {
    let grid = TimeGrid::new(1.0, s.steps).expect("valid grid");
    let cone = ConeSpec { kind: s.cone, dim: s.m };
    let pre = random_pre(rng, s);
    let post_base = if s.jump {
        post_from_pre(&random_pre(rng, s))
    } else {
        post_from_pre(&pre)
    };
    let (glo, ghi) = if s.singular { (0.5, 2.0) } else { (0.0, 2.0) };
    let g0 = uniform(rng, glo, ghi);
    let (post, g1) = if s.theta_dependent {
        let slope = PostValues {
            a: uniform(rng, -0.3, 0.3),
            q: uniform(rng, 0.0, 0.5),
            b: vector(rng, s.m, -0.3, 0.3),
            ..PostValues::zeros(s.m, s.k)
        };
        let g1 = Profile::from_knots(vec![(0.0, uniform(rng, glo, ghi)), (1.0, uniform(rng, glo, ghi))]).unwrap();
        (
            PostDefaultCoeffs::Affine {
                base: PostFields::constant(post_base),
                slope,
            },
            g1,
        )
    } else {
        let g1 = if s.jump { uniform(rng, glo, ghi) } else { g0 };
        (PostDefaultCoeffs::constant(post_base), Profile::constant(g1))
    };
    LQProblem::new(
        grid,
        cone,
        s.k,
        PreDefaultCoeffs::constant(pre),
        post,
        TerminalWeights { g0, g1 },
    )
    .expect("shapes are consistent")
}

/// `A = 0, C = 0, Q = 0, B = D = R = G = 1` on the full space, no jump.
/// Its Riccati solution satisfies `ln P - 1/P = t - T - 1`.
pub fn separable_instance(steps: usize) -> LQProblem {
    LQProblem::constant(
        TimeGrid::new(1.0, steps).unwrap(),
        ConeSpec::full_space(1),
        1,
        PreValues::scalar(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        PostValues::scalar(0.0, 1.0, 0.0, 1.0, 0.0, 1.0),
        1.0,
        1.0,
    )
    .unwrap()
}

/// Standard-case jump instance on the orthant with intensity 0.3 and a
/// 40% downward state jump at default.
pub fn jump_instance(steps: usize) -> LQProblem {
    LQProblem::constant(
        TimeGrid::new(1.0, steps).unwrap(),
        ConeSpec::nonneg(1),
        1,
        PreValues::scalar(0.1, -0.5, 0.2, 0.4, -0.4, 0.3, 1.0, 1.0, 0.3),
        PostValues::scalar(0.05, -0.3, 0.2, 0.5, 1.0, 1.0),
        1.0,
        1.5,
    )
    .unwrap()
}

/// Instance for the policy grid search: the state keeps its sign, so the
/// proportional gain on `X^+` is the whole policy.
pub fn oracle_instance(steps: usize) -> LQProblem {
    LQProblem::constant(
        TimeGrid::new(1.0, steps).unwrap(),
        ConeSpec::nonneg(1),
        1,
        PreValues::scalar(0.0, -0.5, 0.1, 0.2, -0.3, 0.0, 1.0, 1.0, 0.5),
        PostValues::scalar(0.0, -0.5, 0.1, 0.2, 1.0, 1.0),
        1.0,
        1.0,
    )
    .unwrap()
}

/// Market with a counterparty default: the pre-default excess return net
/// of the expected jump loss is negative, the post-default one positive.
pub fn default_market(steps: usize) -> MarketSpec {
    MarketSpec::constant(
        TimeGrid::new(1.0, steps).unwrap(),
        0.02,
        0.08,
        0.2,
        0.3,
        0.3,
        0.05,
        0.25,
        1.0,
        ConeSpec::nonneg(1),
    )
}

/// Drift equal to the rate and no jump in either phase.
pub fn degenerate_market(steps: usize) -> MarketSpec {
    MarketSpec::constant(
        TimeGrid::new(1.0, steps).unwrap(),
        0.02,
        0.02,
        0.2,
        0.0,
        0.3,
        0.02,
        0.25,
        1.0,
        ConeSpec::nonneg(1),
    )
}
