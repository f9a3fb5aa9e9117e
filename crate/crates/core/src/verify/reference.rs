use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ConeKind, LQProblem};

/// Classical unconstrained Riccati equation without jumps:
///
/// ```text
/// -dP/dt = 2AP + Q + P|C|^2 - S' (R + P D'D)^{-1} S,   S = P B + P D'C
/// ```
///
/// integrated with its own RK4 loop at a tenth of the grid step. Returns the
/// values at the problem's grid nodes.
///
/// Requires zero intensity, the full space as cone and constant pre-default
/// coefficients.
pub fn classical_riccati_reference(problem: &LQProblem) -> Result<Vec<f64>> {
    if problem.cone.kind != ConeKind::FullSpace {
        return Err(Error::InvalidInput("reference requires the full-space cone".into()));
    }
    if !problem.pre.is_constant() {
        return Err(Error::InvalidInput("reference requires constant coefficients".into()));
    }
    let c = problem.pre.at(0.0);
    if c.lambda != 0.0 {
        return Err(Error::InvalidInput("reference requires zero intensity".into()));
    }
    let dtd = c.d.transpose() * &c.d;
    let dtc = c.d.transpose() * &c.c;
    let c2 = c.c.dot(&c.c);
    let drift = |p: f64| -> Result<f64> {
        let s = &c.b * p + &dtc * p;
        let m: DMatrix<f64> = &c.r + &dtd * p;
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::NonCoercive("R + P D'D is singular".into()))?;
        let quad = s.dot(&(&inv * &s));
        Ok(2.0 * c.a * p + c.q + p * c2 - quad)
    };

    let grid = problem.grid;
    let n = grid.steps();
    let sub = 10;
    let h = grid.step() / sub as f64;
    let mut out = vec![0.0; n + 1];
    let mut p = problem.terminal.g0;
    out[n] = p;
    for i in (0..n).rev() {
        for _ in 0..sub {
            let k1 = drift(p)?;
            let k2 = drift(p + 0.5 * h * k1)?;
            let k3 = drift(p + 0.5 * h * k2)?;
            let k4 = drift(p + h * k3)?;
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out[i] = p;
    }
    Ok(out)
}
