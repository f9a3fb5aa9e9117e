//! Randomized comparison of the Hamiltonian minimizers against the
//! exhaustive grid oracle.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::hamiltonian::{direct_objective, grid_oracle_min, minimize_h_post, minimize_h_pre, Side};
use crate::model::{CoefficientSlice, ConeKind, ConeSpec};

use super::instances::{random_problem, InstanceShape};

/// The four Hamiltonians of the extended Riccati system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    PostPlus,
    PostMinus,
    PrePlus,
    PreMinus,
}

impl HamiltonianKind {
    pub const ALL: [HamiltonianKind; 4] = [
        HamiltonianKind::PostPlus,
        HamiltonianKind::PostMinus,
        HamiltonianKind::PrePlus,
        HamiltonianKind::PreMinus,
    ];

    pub fn side(self) -> Side {
        match self {
            HamiltonianKind::PostPlus | HamiltonianKind::PrePlus => Side::Plus,
            _ => Side::Minus,
        }
    }

    pub fn is_pre(self) -> bool {
        matches!(self, HamiltonianKind::PrePlus | HamiltonianKind::PreMinus)
    }

    pub fn label(self) -> &'static str {
        match self {
            HamiltonianKind::PostPlus => "h+",
            HamiltonianKind::PostMinus => "h-",
            HamiltonianKind::PrePlus => "h0+",
            HamiltonianKind::PreMinus => "h0-",
        }
    }
}

/// One admissible input to a Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianInput {
    pub kind: HamiltonianKind,
    pub slice: CoefficientSlice,
    pub cone: ConeSpec,
    pub p: f64,
    pub q: DVector<f64>,
    pub l1: f64,
    pub l2: f64,
}

impl HamiltonianInput {
    /// Draws an input whose convexity certificates hold for `kind`.
    pub fn random<R: Rng>(rng: &mut R, kind: HamiltonianKind, m: usize) -> Self {
        let k = rng.random_range(1..=2);
        let cone_kind = if rng.random_bool(0.5) {
            ConeKind::FullSpace
        } else {
            ConeKind::NonNegOrthant
        };
        let shape = InstanceShape {
            steps: 2,
            cone: cone_kind,
            m,
            k,
            jump: true,
            theta_dependent: false,
            singular: false,
        };
        let problem = random_problem(rng, &shape);
        let pre = problem.pre.at(0.0);
        let slice = if kind.is_pre() {
            CoefficientSlice::from_pre(pre)
        } else {
            CoefficientSlice::from_post(problem.post.at(0.0, 0.0))
        };
        let p = rng.random_range(0.0..3.0);
        let q = DVector::from_fn(k, |_, _| rng.random_range(-0.5..0.5));
        // plus side weighs the kink by (l1 + p, l2), minus side by (l1, l2 + p)
        let (l1, l2) = match kind.side() {
            Side::Plus => (rng.random_range(-p..2.0), rng.random_range(0.0..2.0)),
            Side::Minus => (rng.random_range(0.0..2.0), rng.random_range(-p..2.0)),
        };
        HamiltonianInput {
            kind,
            slice,
            cone: ConeSpec { kind: cone_kind, dim: m },
            p,
            q,
            l1,
            l2,
        }
    }

    pub fn solve(&self) -> Result<f64> {
        let side = self.kind.side();
        let res = if self.kind.is_pre() {
            minimize_h_pre(side, &self.slice, self.p, &self.q, self.l1, self.l2, &self.cone)?
        } else {
            minimize_h_post(side, &self.slice, self.p, &self.q, &self.cone)?
        };
        Ok(res.value)
    }

    fn objective(&self, u: &[f64]) -> f64 {
        let (l1, l2) = if self.kind.is_pre() { (self.l1, self.l2) } else { (0.0, 0.0) };
        direct_objective(self.kind.side(), &self.slice, self.p, &self.q, l1, l2, u)
    }

    /// Grid-oracle minimum over a box that provably contains the minimizer:
    /// with `mu` the smallest eigenvalue of `R + p D'D`, strong convexity
    /// gives `|u*| <= |grad(0)| / mu`.
    pub fn oracle(&self) -> f64 {
        let m = self.cone.dim;
        let h = &self.slice.r + &self.slice.dtd * self.p;
        let mu = SymmetricEigen::new(h).eigenvalues.min();
        let step = 1e-6;
        let mut grad2 = 0.0;
        let mut e = vec![0.0; m];
        for i in 0..m {
            e[i] = step;
            let up = self.objective(&e);
            e[i] = -step;
            let down = self.objective(&e);
            e[i] = 0.0;
            grad2 += ((up - down) / (2.0 * step)).powi(2);
        }
        let u_max = 1.05 * grad2.sqrt() / mu + 1e-3;
        let lo = if self.cone.kind == ConeKind::NonNegOrthant { 0.0 } else { -u_max };
        let cells = if m == 1 { 2000.0 } else { 50.0 };
        grid_oracle_min(|u| self.objective(u), &self.cone, u_max, (u_max - lo) / cells).value
    }
}

/// Worst discrepancy for one Hamiltonian and control dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryOutcome {
    pub kind: HamiltonianKind,
    pub m: usize,
    pub inputs: usize,
    pub max_error: f64,
    /// Inputs on which the solver raised an error.
    pub solver_failures: usize,
}

/// Runs `count` random inputs through the solver and the oracle.
pub fn hamiltonian_battery(kind: HamiltonianKind, m: usize, count: usize, seed: u64) -> BatteryOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<HamiltonianInput> = (0..count).map(|_| HamiltonianInput::random(&mut rng, kind, m)).collect();
    let errors: Vec<Option<f64>> = inputs
        .par_iter()
        .map(|input| input.solve().ok().map(|v| (v - input.oracle()).abs()))
        .collect();
    BatteryOutcome {
        kind,
        m,
        inputs: count,
        max_error: errors.iter().flatten().fold(0.0, |a, b| a.max(*b)),
        solver_failures: errors.iter().filter(|e| e.is_none()).count(),
    }
}
