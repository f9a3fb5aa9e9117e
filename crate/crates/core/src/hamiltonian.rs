//! Jump penalties and the four cone-constrained Hamiltonians.
//!
//! Every Hamiltonian objective has the form
//!
//! ```text
//! phi(u) = u'Hu + 2g'u + c + alpha * ((kappa + f'u)^+)^2 + beta * ((kappa + f'u)^-)^2
//! ```
//!
//! with `H = R + p D'D`. Post-default objectives have no kink term. The
//! objective is C^1 and convex whenever `H` is PSD and `alpha, beta >= 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{min_sym_eigenvalue, CoefficientSlice, ConeKind, ConeSpec};

/// Which half of the extended Riccati pair an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

/// Slack on the convexity certificates.
const CERT_TOL: f64 = 1e-10;
/// Stopping tolerance on the gradient-mapping norm for `m >= 2`.
const PG_TOL: f64 = 1e-10;
const PG_MAX_ITER: usize = 10_000;

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

/// `1/2 ((1+E)x + y)^{±,2} - 1/2 (x^±)^2`.
pub fn f_jump(side: Side, x: f64, y: f64, e: f64) -> f64 {
    let z = (1.0 + e) * x + y;
    match side {
        Side::Plus => 0.5 * pos(z).powi(2) - 0.5 * pos(x).powi(2),
        Side::Minus => 0.5 * neg(z).powi(2) - 0.5 * neg(x).powi(2),
    }
}

/// Outcome of a minimization over the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct MinResult {
    pub value: f64,
    pub argmin: DVector<f64>,
    pub iterations: usize,
    /// Gradient-mapping norm at `argmin`.
    pub residual: f64,
}

/// Kink term `alpha (s^+)^2 + beta (s^-)^2` with `s = kappa + f'u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kink {
    pub kappa: f64,
    pub f: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
}

/// Convex piecewise-quadratic objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub c: f64,
    pub kink: Option<Kink>,
}

impl PiecewiseQuadratic {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    fn s(&self, u: &DVector<f64>) -> Option<f64> {
        self.kink.as_ref().map(|k| k.kappa + k.f.dot(u))
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        let mut v = u.dot(&(&self.h * u)) + 2.0 * self.g.dot(u) + self.c;
        if let (Some(k), Some(s)) = (&self.kink, self.s(u)) {
            v += k.alpha * pos(s).powi(2) + k.beta * neg(s).powi(2);
        }
        v
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut gr = (&self.h * u + &self.g) * 2.0;
        if let (Some(k), Some(s)) = (&self.kink, self.s(u)) {
            gr += &k.f * (2.0 * k.alpha * pos(s) - 2.0 * k.beta * neg(s));
        }
        gr
    }

    /// `(A, b, c)` of the quadratic piece on `s >= 0` (`upper = true`) or
    /// `s <= 0`.
    fn piece(&self, upper: bool) -> (DMatrix<f64>, DVector<f64>, f64) {
        match &self.kink {
            None => (self.h.clone(), self.g.clone(), self.c),
            Some(k) => {
                let w = if upper { k.alpha } else { k.beta };
                (
                    &self.h + &k.f * k.f.transpose() * w,
                    &self.g + &k.f * (w * k.kappa),
                    self.c + w * k.kappa * k.kappa,
                )
            }
        }
    }

    fn scale(&self) -> f64 {
        let mut s = 1.0 + self.h.amax();
        if let Some(k) = &self.kink {
            s += (k.alpha + k.beta) * k.f.norm_squared();
        }
        s
    }

    /// `|| u - P(u - grad/L) || * L`, with `L = 1`.
    pub fn gradient_mapping(&self, u: &DVector<f64>, cone: &ConeSpec) -> f64 {
        let gr = self.gradient(u);
        let mut w = u - &gr;
        cone.project(w.as_mut_slice());
        (u - w).norm()
    }
}

fn check_cert(name: &str, v: f64) -> Result<()> {
    if v < -CERT_TOL * (1.0 + v.abs()) || v.is_nan() {
        return Err(Error::ConvexityViolated(format!("{name} = {v:e} < 0")));
    }
    Ok(())
}

/// Quadratic part shared by every Hamiltonian; `sign = -1` flips B, C and q
/// for the minus side.
fn quadratic_part(slice: &CoefficientSlice, p: f64, q: &DVector<f64>, sign: f64) -> (DMatrix<f64>, DVector<f64>, f64) {
    let h = &slice.r + &slice.dtd * p;
    let g = (&slice.b * p + &slice.dtc * p + slice.d.tr_mul(q)) * sign;
    (h, g, p * slice.c_norm2)
}

/// Objective of the post-default Hamiltonian `h^±(theta)`.
pub fn post_objective(side: Side, slice: &CoefficientSlice, p: f64, q: &DVector<f64>) -> PiecewiseQuadratic {
    let sign = if side == Side::Plus { 1.0 } else { -1.0 };
    let (h, g, c) = quadratic_part(slice, p, q, sign);
    PiecewiseQuadratic { h, g, c, kink: None }
}

/// Objective of the pre-default Hamiltonian `h_0^±(t, p, q, l1, l2)`.
///
/// Fails with `ConvexityViolated` when `p < 0` or, with positive intensity,
/// when the weights of the jump terms are negative. The certificate depends on the side: the plus objective weighs
/// the kink by `(l1 + p, l2)`, the minus objective by `(l1, l2 + p)`.
pub fn pre_objective(
    side: Side,
    slice: &CoefficientSlice,
    p: f64,
    q: &DVector<f64>,
    l1: f64,
    l2: f64,
) -> Result<PiecewiseQuadratic> {
    let jump = slice
        .jump
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("pre-default Hamiltonian needs jump coefficients".into()))?;
    let lambda = jump.lambda;
    check_cert("p", p)?;
    let sign = if side == Side::Plus { 1.0 } else { -1.0 };
    let (h, mut g, mut c) = quadratic_part(slice, p, q, sign);
    // compensator term -2 p lambda F u (plus), +2 p lambda F u (minus)
    g -= &jump.f * (sign * p * lambda);
    let (kappa, wa, wb) = match side {
        Side::Plus => {
            if lambda > 0.0 {
                check_cert("l1 + p", l1 + p)?;
                check_cert("l2", l2)?;
            }
            c -= (l1 + p) * lambda;
            (1.0 + jump.e, (l1 + p) * lambda, l2 * lambda)
        }
        Side::Minus => {
            if lambda > 0.0 {
                check_cert("l1", l1)?;
                check_cert("l2 + p", l2 + p)?;
            }
            c -= (l2 + p) * lambda;
            (-1.0 - jump.e, l1 * lambda, (l2 + p) * lambda)
        }
    };
    let kink = if lambda == 0.0 {
        None
    } else {
        Some(Kink {
            kappa,
            f: jump.f.clone(),
            alpha: wa.max(0.0),
            beta: wb.max(0.0),
        })
    };
    Ok(PiecewiseQuadratic { h, g, c, kink })
}

fn reject_degenerate(slice: &CoefficientSlice, p: f64) -> Result<()> {
    if p == 0.0 && slice.r.iter().all(|v| *v == 0.0) {
        return Err(Error::NonCoercive("R = 0 and p = 0".into()));
    }
    Ok(())
}

/// `h^±(theta)(t, p, q)`.
pub fn minimize_h_post(side: Side, slice: &CoefficientSlice, p: f64, q: &DVector<f64>, cone: &ConeSpec) -> Result<MinResult> {
    check_cert("p", p)?;
    reject_degenerate(slice, p)?;
    minimize(&post_objective(side, slice, p, q), cone)
}

/// `h_0^±(t, p, q, l1, l2)`.
pub fn minimize_h_pre(
    side: Side,
    slice: &CoefficientSlice,
    p: f64,
    q: &DVector<f64>,
    l1: f64,
    l2: f64,
    cone: &ConeSpec,
) -> Result<MinResult> {
    let obj = pre_objective(side, slice, p, q, l1, l2)?;
    reject_degenerate(slice, p)?;
    minimize(&obj, cone)
}

/// Minimizes a convex piecewise-quadratic objective over the cone.
pub fn minimize(obj: &PiecewiseQuadratic, cone: &ConeSpec) -> Result<MinResult> {
    if obj.dim() != cone.dim {
        return Err(Error::InvalidInput(format!(
            "objective has dimension {}, cone {}",
            obj.dim(),
            cone.dim
        )));
    }
    let mut res = if obj.dim() == 1 {
        minimize_scalar(obj, cone)?
    } else {
        minimize_projected(obj, cone)?
    };
    cone.project(res.argmin.as_mut_slice());
    if !res.value.is_finite() {
        return Err(Error::NonCoercive("objective is not finite at the minimizer".into()));
    }
    Ok(res)
}

/// Exact minimization for one control: best of `u = 0`, the breakpoint and
/// the feasible stationary point of each piece.
fn minimize_scalar(obj: &PiecewiseQuadratic, cone: &ConeSpec) -> Result<MinResult> {
    let tiny = 1e-14 * obj.scale();
    let lo = if cone.kind == ConeKind::NonNegOrthant { 0.0 } else { f64::NEG_INFINITY };
    let hi = f64::INFINITY;
    let (kappa, f) = match &obj.kink {
        Some(k) => (k.kappa, k.f[0]),
        None => (1.0, 0.0),
    };

    // domain of each piece as an interval in u
    let bp = if f != 0.0 { Some(-kappa / f) } else { None };
    let upper_dom = match bp {
        Some(b) if f > 0.0 => (b, f64::INFINITY),
        Some(b) => (f64::NEG_INFINITY, b),
        None if kappa >= 0.0 => (f64::NEG_INFINITY, f64::INFINITY),
        None => (f64::INFINITY, f64::NEG_INFINITY),
    };
    let lower_dom = match bp {
        Some(b) if f > 0.0 => (f64::NEG_INFINITY, b),
        Some(b) => (b, f64::INFINITY),
        None if kappa <= 0.0 => (f64::NEG_INFINITY, f64::INFINITY),
        None => (f64::INFINITY, f64::NEG_INFINITY),
    };

    let mut cands = vec![0.0];
    if let Some(b) = bp {
        if b >= lo {
            cands.push(b);
        }
    }
    for (upper, dom) in [(true, upper_dom), (false, lower_dom)] {
        let a0 = dom.0.max(lo);
        let a1 = dom.1.min(hi);
        if a0 > a1 {
            continue;
        }
        let (a, b, _) = obj.piece(upper);
        let (a, b) = (a[(0, 0)], b[0]);
        if a <= tiny {
            // flat piece: bounded below only if the slope points inward
            if (a1.is_infinite() && b < 0.0) || (a0.is_infinite() && b > 0.0) {
                return Err(Error::NonCoercive(format!(
                    "objective is linear with slope {:e} along an unbounded ray of the cone",
                    2.0 * b
                )));
            }
            continue;
        }
        cands.push((-b / a).clamp(a0, a1));
    }

    let mut best_u: f64 = 0.0;
    let mut best_v = f64::INFINITY;
    for u in cands {
        let v = obj.value(&DVector::from_element(1, u));
        if v < best_v || (v == best_v && u.abs() < best_u.abs()) {
            best_v = v;
            best_u = u;
        }
    }
    let argmin = DVector::from_element(1, best_u);
    let residual = obj.gradient_mapping(&argmin, cone);
    Ok(MinResult {
        value: best_v,
        argmin,
        iterations: 0,
        residual,
    })
}

fn project_vec(cone: &ConeSpec, mut u: DVector<f64>) -> DVector<f64> {
    cone.project(u.as_mut_slice());
    u
}

/// Projected gradient with Barzilai-Borwein trial steps and Armijo
/// backtracking, followed by an exact active-set polish.
fn minimize_projected(obj: &PiecewiseQuadratic, cone: &ConeSpec) -> Result<MinResult> {
    let m = obj.dim();
    let scale = obj.scale();
    let (amin, bmin) = match &obj.kink {
        Some(k) => (k.alpha.min(k.beta), &k.f),
        None => (0.0, &obj.g),
    };
    let coercive = if obj.kink.is_some() {
        &obj.h + bmin * bmin.transpose() * amin
    } else {
        obj.h.clone()
    };
    if min_sym_eigenvalue(&coercive) <= 1e-12 * scale {
        return Err(Error::NonCoercive("R + p D'D is not positive definite".into()));
    }
    if obj.kink.is_none() && cone.kind == ConeKind::FullSpace {
        // smooth and unconstrained: the stationary point
        if let Some(chol) = obj.h.clone().cholesky() {
            let u = chol.solve(&(-&obj.g));
            let value = obj.value(&u);
            let residual = obj.gradient_mapping(&u, cone);
            return Ok(MinResult {
                value,
                argmin: u,
                iterations: 0,
                residual,
            });
        }
    }
    let lip = {
        let (a1, _, _) = obj.piece(true);
        let (a2, _, _) = obj.piece(false);
        let l1 = a1.symmetric_eigenvalues().max();
        let l2 = a2.symmetric_eigenvalues().max();
        2.0 * l1.max(l2)
    };

    let mut u = project_vec(cone, DVector::zeros(m));
    let mut fu = obj.value(&u);
    let mut gu = obj.gradient(&u);
    let mut step = 1.0 / lip;
    let mut iterations = 0;
    while iterations < PG_MAX_ITER {
        let mapping = (&u - project_vec(cone, &u - &gu / lip)).norm() * lip;
        if mapping <= PG_TOL {
            break;
        }
        iterations += 1;
        let mut t = step;
        let (un, fnew) = loop {
            let cand = project_vec(cone, &u - &gu * t);
            let fc = obj.value(&cand);
            let d = &cand - &u;
            if fc <= fu + gu.dot(&d) + 0.5 / t * d.norm_squared() || t <= 1.0 / lip {
                break (cand, fc);
            }
            t *= 0.5;
        };
        let gn = obj.gradient(&un);
        let s = &un - &u;
        let y = &gn - &gu;
        let sy = s.dot(&y);
        step = if sy > 0.0 { (s.norm_squared() / sy).clamp(1.0 / lip, 1e6 / lip) } else { 1.0 / lip };
        u = un;
        fu = fnew;
        gu = gn;
    }

    if let Some(better) = polish(obj, cone, &u) {
        if obj.value(&better) < fu {
            u = better;
            fu = obj.value(&u);
        }
    }
    let zero = project_vec(cone, DVector::zeros(m));
    let f0 = obj.value(&zero);
    if f0 <= fu {
        u = zero;
        fu = f0;
    }
    let residual = obj.gradient_mapping(&u, cone) * lip.max(1.0);
    Ok(MinResult {
        value: fu,
        argmin: u,
        iterations,
        residual,
    })
}

/// Solves the KKT system on the free coordinates of `u` for each smooth
/// piece and for the kink hyperplane; returns the best consistent point.
fn polish(obj: &PiecewiseQuadratic, cone: &ConeSpec, u: &DVector<f64>) -> Option<DVector<f64>> {
    let m = obj.dim();
    let free: Vec<usize> = (0..m)
        .filter(|&i| cone.kind == ConeKind::FullSpace || u[i] > 1e-9)
        .collect();
    if free.is_empty() {
        return None;
    }
    let nf = free.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |cand: DVector<f64>| {
        if !cand.iter().all(|v| v.is_finite()) || !cone.contains(cand.as_slice()) {
            return;
        }
        let v = obj.value(&cand);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, cand));
        }
    };

    for upper in [true, false] {
        let (a, b, _) = obj.piece(upper);
        let af = DMatrix::from_fn(nf, nf, |i, j| a[(free[i], free[j])]);
        let bf = DVector::from_fn(nf, |i, _| -b[free[i]]);
        if let Some(sol) = af.lu().solve(&bf) {
            let mut cand = DVector::zeros(m);
            for (i, &fi) in free.iter().enumerate() {
                cand[fi] = sol[i];
            }
            let ok = match obj.s(&cand) {
                Some(s) => (upper && s >= 0.0) || (!upper && s <= 0.0),
                None => true,
            };
            if ok {
                consider(cand);
            }
        }
    }
    if let Some(k) = &obj.kink {
        // min u'Hu + 2g'u on kappa + f'u = 0
        let mut kkt = DMatrix::zeros(nf + 1, nf + 1);
        let mut rhs = DVector::zeros(nf + 1);
        for i in 0..nf {
            for j in 0..nf {
                kkt[(i, j)] = 2.0 * obj.h[(free[i], free[j])];
            }
            kkt[(i, nf)] = k.f[free[i]];
            kkt[(nf, i)] = k.f[free[i]];
            rhs[i] = -2.0 * obj.g[free[i]];
        }
        rhs[nf] = -k.kappa;
        if let Some(sol) = kkt.lu().solve(&rhs) {
            let mut cand = DVector::zeros(m);
            for (i, &fi) in free.iter().enumerate() {
                cand[fi] = sol[i];
            }
            consider(cand);
        }
    }
    best.map(|(_, c)| c)
}

/// Evaluates a Hamiltonian objective term by term from its defining formula,
/// with the jump terms written through [`f_jump`]. Pre-default when the slice
/// carries jump data. Used as the oracle's objective.
pub fn direct_objective(
    side: Side,
    slice: &CoefficientSlice,
    p: f64,
    q: &DVector<f64>,
    l1: f64,
    l2: f64,
    u: &[f64],
) -> f64 {
    let m = u.len();
    let dot = |a: &DVector<f64>| (0..m).map(|i| a[i] * u[i]).sum::<f64>();
    let k = slice.c.len();
    let s = if side == Side::Plus { 1.0 } else { -1.0 };
    let mut du = vec![0.0; k];
    for (r, out) in du.iter_mut().enumerate() {
        *out = (0..m).map(|j| slice.d[(r, j)] * u[j]).sum();
    }
    let cdu: f64 = (0..k).map(|r| (s * slice.c[r] + du[r]).powi(2)).sum();
    let duq: f64 = (0..k).map(|r| du[r] * q[r]).sum();
    let mut uru = 0.0;
    for i in 0..m {
        for j in 0..m {
            uru += u[i] * slice.r[(i, j)] * u[j];
        }
    }
    let mut v = 2.0 * s * p * dot(&slice.b) + p * cdu + 2.0 * s * duq + uru;
    if let Some(j) = &slice.jump {
        let fu = dot(&j.f);
        v -= 2.0 * s * p * j.lambda * fu;
        let x = s; // the state sits at +1 or -1
        match side {
            Side::Plus => {
                v += (l1 + p) * j.lambda * 2.0 * f_jump(Side::Plus, x, fu, j.e)
                    + l2 * j.lambda * 2.0 * f_jump(Side::Minus, x, fu, j.e);
            }
            Side::Minus => {
                v += l1 * j.lambda * 2.0 * f_jump(Side::Plus, x, fu, j.e)
                    + (l2 + p) * j.lambda * 2.0 * f_jump(Side::Minus, x, fu, j.e);
            }
        }
    }
    v
}

/// Exhaustive lattice search over `[lo, u_max]^m` (`lo = 0` on the orthant,
/// `-u_max` otherwise) followed by a zooming pattern search and a
/// finite-difference Newton correction around the best lattice point.
///
/// Intended for `m <= 2`.
pub fn grid_oracle_min(objective: impl Fn(&[f64]) -> f64, cone: &ConeSpec, u_max: f64, resolution: f64) -> MinResult {
    let m = cone.dim;
    let lo = if cone.kind == ConeKind::NonNegOrthant { 0.0 } else { -u_max };
    let per_axis = (((u_max - lo) / resolution).round() as usize).max(1);
    let h = (u_max - lo) / per_axis as f64;
    let total = (per_axis + 1).pow(m as u32);

    let mut best = vec![0.0; m];
    let mut best_v = objective(&best);
    let mut evals = 1;
    let mut point = vec![0.0; m];
    for idx in 0..total {
        let mut rem = idx;
        for c in point.iter_mut() {
            *c = lo + (rem % (per_axis + 1)) as f64 * h;
            rem /= per_axis + 1;
        }
        let v = objective(&point);
        evals += 1;
        if v < best_v {
            best_v = v;
            best.copy_from_slice(&point);
        }
    }

    let feasible = |p: &mut [f64]| cone.project(p);
    // zooming pattern search
    let mut spacing = h;
    let half = 5i64;
    let width = (2 * half + 1) as usize;
    while spacing > 1e-10 * (1.0 + u_max) {
        let mut local_best = best.clone();
        let mut local_v = best_v;
        let mut on_border = false;
        let local_total = width.pow(m as u32);
        for idx in 0..local_total {
            let mut rem = idx;
            let mut border = false;
            for (c, b) in point.iter_mut().zip(&best) {
                let o = (rem % width) as i64 - half;
                rem /= width;
                border |= o.abs() == half;
                *c = b + o as f64 * spacing;
            }
            feasible(&mut point);
            let v = objective(&point);
            evals += 1;
            if v < local_v {
                local_v = v;
                local_best.copy_from_slice(&point);
                on_border = border;
            }
        }
        best = local_best;
        best_v = local_v;
        if !on_border {
            spacing /= 5.0;
        }
    }

    // Newton correction on a central-difference quadratic model
    let fd = 1e-4 * (1.0 + best.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    let eval_at = |d: &[f64]| {
        let mut p: Vec<f64> = best.iter().zip(d).map(|(b, x)| b + x).collect();
        feasible(&mut p);
        objective(&p)
    };
    let mut grad = DVector::zeros(m);
    let mut hess = DMatrix::zeros(m, m);
    let mut e = vec![0.0; m];
    for i in 0..m {
        e[i] = fd;
        let fp = eval_at(&e);
        e[i] = -fd;
        let fmn = eval_at(&e);
        e[i] = 0.0;
        grad[i] = (fp - fmn) / (2.0 * fd);
        hess[(i, i)] = (fp - 2.0 * best_v + fmn) / (fd * fd);
        for j in 0..i {
            let mut d = vec![0.0; m];
            d[i] = fd;
            d[j] = fd;
            let fpp = eval_at(&d);
            d[j] = -fd;
            let fpm = eval_at(&d);
            d[i] = -fd;
            let fmm = eval_at(&d);
            d[j] = fd;
            let fmp = eval_at(&d);
            let hij = (fpp - fpm - fmp + fmm) / (4.0 * fd * fd);
            hess[(i, j)] = hij;
            hess[(j, i)] = hij;
        }
    }
    evals += 2 * m + 2 * m * (m.saturating_sub(1));
    if let Some(step) = hess.clone().cholesky().map(|c| c.solve(&(-&grad))) {
        let mut cand: Vec<f64> = best.iter().zip(step.iter()).map(|(b, s)| b + s).collect();
        feasible(&mut cand);
        let v = objective(&cand);
        evals += 1;
        if v < best_v {
            best_v = v;
            best = cand;
        }
    }

    MinResult {
        value: best_v,
        argmin: DVector::from_vec(best),
        iterations: evals,
        residual: spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PostValues, PreValues};

    fn post_slice(b: f64, c: f64, d: f64, r: f64) -> CoefficientSlice {
        CoefficientSlice::from_post(PostValues::scalar(0.0, b, c, d, 0.0, r))
    }

    fn zero_q() -> DVector<f64> {
        DVector::zeros(1)
    }

    #[test]
    fn jump_penalty_values() {
        assert_eq!(f_jump(Side::Plus, 1.0, 0.0, 0.0), 0.0);
        assert_eq!(f_jump(Side::Plus, 1.0, 0.0, -1.0), -0.5);
        assert_eq!(f_jump(Side::Minus, -1.0, 2.0, 0.0), -0.5);
    }

    #[test]
    fn post_hamiltonian_small_cases() {
        let full = ConeSpec::full_space(1);
        let nn = ConeSpec::nonneg(1);
        let r = minimize_h_post(Side::Plus, &post_slice(0.0, 0.0, 1.0, 1.0), 1.0, &zero_q(), &nn).unwrap();
        assert_eq!((r.value, r.argmin[0]), (0.0, 0.0));
        let r = minimize_h_post(Side::Plus, &post_slice(1.0, 0.0, 1.0, 1.0), 1.0, &zero_q(), &full).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15 && (r.argmin[0] + 0.5).abs() < 1e-15);
        let r = minimize_h_post(Side::Plus, &post_slice(1.0, 0.0, 1.0, 1.0), 1.0, &zero_q(), &nn).unwrap();
        assert_eq!((r.value, r.argmin[0]), (0.0, 0.0));
    }

    #[test]
    fn pre_hamiltonian_small_cases() {
        let full = ConeSpec::full_space(1);
        let s = CoefficientSlice::from_pre(PreValues::scalar(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
        let r = minimize_h_pre(Side::Plus, &s, 1.0, &zero_q(), 0.0, 0.0, &full).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15 && (r.argmin[0] + 0.5).abs() < 1e-15);

        let s = CoefficientSlice::from_pre(PreValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0));
        let r = minimize_h_pre(Side::Plus, &s, 1.0, &zero_q(), 0.0, 0.0, &full).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmin[0], 0.0);
    }

    #[test]
    fn convexity_certificate_is_side_aware() {
        let s = CoefficientSlice::from_pre(PreValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0));
        let full = ConeSpec::full_space(1);
        assert!(matches!(
            minimize_h_pre(Side::Plus, &s, 1.0, &zero_q(), 0.0, -0.1, &full),
            Err(Error::ConvexityViolated(_))
        ));
        // the same l2 is admissible on the minus side since it enters as l2 + p
        assert!(minimize_h_pre(Side::Minus, &s, 1.0, &zero_q(), 0.0, -0.1, &full).is_ok());
        assert!(matches!(
            minimize_h_pre(Side::Minus, &s, 1.0, &zero_q(), -0.1, 0.0, &full),
            Err(Error::ConvexityViolated(_))
        ));
    }

    #[test]
    fn degenerate_weights_are_non_coercive() {
        let s = post_slice(1.0, 0.0, 1.0, 0.0);
        let full = ConeSpec::full_space(1);
        assert!(matches!(
            minimize_h_post(Side::Plus, &s, 0.0, &zero_q(), &full),
            Err(Error::NonCoercive(_))
        ));
    }

    #[test]
    fn pieces_agree_with_direct_formula() {
        let s = CoefficientSlice::from_pre(PreValues::scalar(0.3, 0.7, -0.4, 0.9, -0.3, 1.3, 0.2, 0.5, 0.8));
        let q = zero_q();
        for side in [Side::Plus, Side::Minus] {
            let obj = pre_objective(side, &s, 1.7, &q, 0.4, 0.9).unwrap();
            for i in -40..=40 {
                let u = i as f64 * 0.1;
                let a = obj.value(&DVector::from_element(1, u));
                let b = direct_objective(side, &s, 1.7, &q, 0.4, 0.9, &[u]);
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{side:?} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn two_dimensional_solver_matches_oracle() {
        let v = PreValues {
            a: 0.0,
            b: DVector::from_vec(vec![0.4, -0.7]),
            c: DVector::from_vec(vec![0.3]),
            d: DMatrix::from_row_slice(1, 2, &[0.5, -0.2]),
            e: -0.2,
            f: DVector::from_vec(vec![0.6, 0.9]),
            q: 0.0,
            r: DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]),
            lambda: 1.2,
        };
        let s = CoefficientSlice::from_pre(v);
        let q = zero_q();
        for cone in [ConeSpec::full_space(2), ConeSpec::nonneg(2)] {
            for side in [Side::Plus, Side::Minus] {
                let r = minimize_h_pre(side, &s, 1.1, &q, 0.3, 0.5, &cone).unwrap();
                let o = grid_oracle_min(|u| direct_objective(side, &s, 1.1, &q, 0.3, 0.5, u), &cone, 4.0, 0.05);
                assert!((r.value - o.value).abs() < 1e-8, "{side:?} {cone:?}: {} vs {}", r.value, o.value);
                assert!(r.residual < 1e-8);
            }
        }
    }

    #[test]
    fn tie_break_prefers_zero() {
        // flat objective on the orthant: every u >= 0 gives 0
        let s = post_slice(0.0, 0.0, 0.0, 0.0);
        let nn = ConeSpec::nonneg(1);
        let r = minimize_h_post(Side::Plus, &s, 1.0, &zero_q(), &nn).unwrap();
        assert_eq!(r.argmin[0], 0.0);
    }
}
