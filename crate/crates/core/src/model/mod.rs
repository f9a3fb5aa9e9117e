//! Problem data: time grid, control cone, pre/post-default coefficients,
//! terminal weights, and the standing-assumption checks that classify a
//! problem as standard or singular.
//!
//! Coefficients are deterministic. Pre-default quantities are functions of
//! `t`; post-default quantities are functions of `(t, theta)` where `theta`
//! is the default time and `theta <= t`.

mod profile;

use nalgebra::{DMatrix, DVector};

pub use profile::{Lerp, Profile};

use crate::error::{Error, Result};

/// Eigenvalues at or below this are treated as zero when classifying.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// Uniform grid `t_i = i * T / n` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be > 0, got {horizon}")));
        }
        if steps < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i >= self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }

    /// Index of the cell `[t_i, t_{i+1}]` containing `t` and the fractional
    /// position inside it. `t = T` maps to the last cell with weight 1.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let x = (t / self.step()).clamp(0.0, self.steps as f64);
        let i = (x.floor() as usize).min(self.steps - 1);
        (i, x - i as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    FullSpace,
    NonNegOrthant,
}

/// Closed convex cone of admissible control values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub dim: usize,
}

impl ConeSpec {
    pub fn full_space(dim: usize) -> Self {
        ConeSpec { kind: ConeKind::FullSpace, dim }
    }

    pub fn nonneg(dim: usize) -> Self {
        ConeSpec { kind: ConeKind::NonNegOrthant, dim }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim
            && match self.kind {
                ConeKind::FullSpace => u.iter().all(|v| v.is_finite()),
                ConeKind::NonNegOrthant => u.iter().all(|v| *v >= 0.0),
            }
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, u: &mut [f64]) {
        if self.kind == ConeKind::NonNegOrthant {
            for v in u.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }

    pub fn admits_negative(&self) -> bool {
        self.kind == ConeKind::FullSpace
    }
}

/// Pre-default (`t <= tau`) or post-default with default time `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    PreDefault,
    PostDefault { theta: f64 },
}

/// Pre-default coefficient values at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PreValues {
    pub a: f64,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: DMatrix<f64>,
    pub e: f64,
    pub f: DVector<f64>,
    pub q: f64,
    pub r: DMatrix<f64>,
    pub lambda: f64,
}

impl PreValues {
    /// One control, one Brownian motion.
    #[allow(clippy::too_many_arguments)]
    pub fn scalar(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64, q: f64, r: f64, lambda: f64) -> Self {
        PreValues {
            a,
            b: DVector::from_element(1, b),
            c: DVector::from_element(1, c),
            d: DMatrix::from_element(1, 1, d),
            e,
            f: DVector::from_element(1, f),
            q,
            r: DMatrix::from_element(1, 1, r),
            lambda,
        }
    }
}

/// Post-default coefficient values at one `(t, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PostValues {
    pub a: f64,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: DMatrix<f64>,
    pub q: f64,
    pub r: DMatrix<f64>,
}

impl PostValues {
    pub fn scalar(a: f64, b: f64, c: f64, d: f64, q: f64, r: f64) -> Self {
        PostValues {
            a,
            b: DVector::from_element(1, b),
            c: DVector::from_element(1, c),
            d: DMatrix::from_element(1, 1, d),
            q,
            r: DMatrix::from_element(1, 1, r),
        }
    }

    pub fn zeros(m: usize, k: usize) -> Self {
        PostValues {
            a: 0.0,
            b: DVector::zeros(m),
            c: DVector::zeros(k),
            d: DMatrix::zeros(k, m),
            q: 0.0,
            r: DMatrix::zeros(m, m),
        }
    }

    /// `self + w * other`, field by field.
    pub fn add_scaled(&self, other: &PostValues, w: f64) -> PostValues {
        PostValues {
            a: self.a + w * other.a,
            b: &self.b + &other.b * w,
            c: &self.c + &other.c * w,
            d: &self.d + &other.d * w,
            q: self.q + w * other.q,
            r: &self.r + &other.r * w,
        }
    }

    fn lerp(&self, other: &PostValues, w: f64) -> PostValues {
        PostValues {
            a: self.a.lerp(&other.a, w),
            b: self.b.lerp(&other.b, w),
            c: self.c.lerp(&other.c, w),
            d: self.d.lerp(&other.d, w),
            q: self.q.lerp(&other.q, w),
            r: self.r.lerp(&other.r, w),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreDefaultCoeffs {
    pub a: Profile<f64>,
    pub b: Profile<DVector<f64>>,
    pub c: Profile<DVector<f64>>,
    pub d: Profile<DMatrix<f64>>,
    pub e: Profile<f64>,
    pub f: Profile<DVector<f64>>,
    pub q: Profile<f64>,
    pub r: Profile<DMatrix<f64>>,
    pub lambda: Profile<f64>,
}

impl PreDefaultCoeffs {
    pub fn constant(v: PreValues) -> Self {
        PreDefaultCoeffs {
            a: Profile::constant(v.a),
            b: Profile::constant(v.b),
            c: Profile::constant(v.c),
            d: Profile::constant(v.d),
            e: Profile::constant(v.e),
            f: Profile::constant(v.f),
            q: Profile::constant(v.q),
            r: Profile::constant(v.r),
            lambda: Profile::constant(v.lambda),
        }
    }

    pub fn at(&self, t: f64) -> PreValues {
        PreValues {
            a: self.a.at(t),
            b: self.b.at(t),
            c: self.c.at(t),
            d: self.d.at(t),
            e: self.e.at(t),
            f: self.f.at(t),
            q: self.q.at(t),
            r: self.r.at(t),
            lambda: self.lambda.at(t),
        }
    }

    fn knot_times(&self) -> Vec<f64> {
        let mut ts = Vec::new();
        ts.extend(self.a.knots().iter().map(|k| k.0));
        ts.extend(self.b.knots().iter().map(|k| k.0));
        ts.extend(self.c.knots().iter().map(|k| k.0));
        ts.extend(self.d.knots().iter().map(|k| k.0));
        ts.extend(self.e.knots().iter().map(|k| k.0));
        ts.extend(self.f.knots().iter().map(|k| k.0));
        ts.extend(self.q.knots().iter().map(|k| k.0));
        ts.extend(self.r.knots().iter().map(|k| k.0));
        ts.extend(self.lambda.knots().iter().map(|k| k.0));
        ts
    }

    pub fn is_constant(&self) -> bool {
        self.a.is_constant()
            && self.b.is_constant()
            && self.c.is_constant()
            && self.d.is_constant()
            && self.e.is_constant()
            && self.f.is_constant()
            && self.q.is_constant()
            && self.r.is_constant()
            && self.lambda.is_constant()
    }

    /// Intensity is identically zero.
    pub fn jump_free(&self) -> bool {
        self.lambda.knots().iter().all(|(_, l)| *l == 0.0)
    }
}

/// Post-default coefficients as functions of `t` only.
#[derive(Debug, Clone, PartialEq)]
pub struct PostFields {
    pub a: Profile<f64>,
    pub b: Profile<DVector<f64>>,
    pub c: Profile<DVector<f64>>,
    pub d: Profile<DMatrix<f64>>,
    pub q: Profile<f64>,
    pub r: Profile<DMatrix<f64>>,
}

impl PostFields {
    pub fn constant(v: PostValues) -> Self {
        PostFields {
            a: Profile::constant(v.a),
            b: Profile::constant(v.b),
            c: Profile::constant(v.c),
            d: Profile::constant(v.d),
            q: Profile::constant(v.q),
            r: Profile::constant(v.r),
        }
    }

    pub fn at(&self, t: f64) -> PostValues {
        PostValues {
            a: self.a.at(t),
            b: self.b.at(t),
            c: self.c.at(t),
            d: self.d.at(t),
            q: self.q.at(t),
            r: self.r.at(t),
        }
    }

    fn knot_times(&self) -> Vec<f64> {
        let mut ts = Vec::new();
        ts.extend(self.a.knots().iter().map(|k| k.0));
        ts.extend(self.b.knots().iter().map(|k| k.0));
        ts.extend(self.c.knots().iter().map(|k| k.0));
        ts.extend(self.d.knots().iter().map(|k| k.0));
        ts.extend(self.q.knots().iter().map(|k| k.0));
        ts.extend(self.r.knots().iter().map(|k| k.0));
        ts
    }
}

/// Post-default values tabulated on the lower triangle of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PostTable {
    grid: TimeGrid,
    // rows[j][i - j] holds the value at (t_i, theta_j), i >= j
    rows: Vec<Vec<PostValues>>,
}

impl PostTable {
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64, f64) -> PostValues) -> Self {
        let n = grid.steps();
        let rows = (0..=n)
            .map(|j| (j..=n).map(|i| f(grid.node(i), grid.node(j))).collect())
            .collect();
        PostTable { grid, rows }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn node(&self, i: usize, j: usize) -> &PostValues {
        let j = j.min(i);
        &self.rows[j][i - j]
    }

    /// Bilinear interpolation; corners above the diagonal are clamped onto it.
    pub fn at(&self, t: f64, theta: f64) -> PostValues {
        let (i, wt) = self.grid.locate(t);
        let (j, wq) = self.grid.locate(theta);
        let lo = self.node(i, j).lerp(self.node(i, j + 1), wq);
        let hi = self.node(i + 1, j).lerp(self.node(i + 1, j + 1), wq);
        lo.lerp(&hi, wt)
    }

    fn all_values(&self) -> impl Iterator<Item = ((usize, usize), &PostValues)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(off, v)| ((j + off, j), v)))
    }
}

/// How post-default coefficients depend on the default time.
#[derive(Debug, Clone, PartialEq)]
pub enum PostDefaultCoeffs {
    ThetaFree(PostFields),
    /// `base(t) + slope * theta`.
    Affine { base: PostFields, slope: PostValues },
    Table(PostTable),
}

impl PostDefaultCoeffs {
    pub fn constant(v: PostValues) -> Self {
        PostDefaultCoeffs::ThetaFree(PostFields::constant(v))
    }

    pub fn at(&self, t: f64, theta: f64) -> PostValues {
        match self {
            PostDefaultCoeffs::ThetaFree(f) => f.at(t),
            PostDefaultCoeffs::Affine { base, slope } => base.at(t).add_scaled(slope, theta),
            PostDefaultCoeffs::Table(tab) => tab.at(t, theta),
        }
    }

    pub fn is_theta_free(&self) -> bool {
        matches!(self, PostDefaultCoeffs::ThetaFree(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalWeights {
    pub g0: f64,
    /// `G1(theta)`.
    pub g1: Profile<f64>,
}

impl TerminalWeights {
    pub fn constant(g0: f64, g1: f64) -> Self {
        TerminalWeights {
            g0,
            g1: Profile::constant(g1),
        }
    }
}

/// Jump data present only before default.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSlice {
    pub e: f64,
    pub f: DVector<f64>,
    pub lambda: f64,
}

/// All coefficients at one instant of one phase, with the Gram quantities
/// the Hamiltonians need precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSlice {
    pub a: f64,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: DMatrix<f64>,
    pub q: f64,
    pub r: DMatrix<f64>,
    pub jump: Option<JumpSlice>,
    /// `D'D`
    pub dtd: DMatrix<f64>,
    /// `D'C`
    pub dtc: DVector<f64>,
    /// `|C|^2`
    pub c_norm2: f64,
}

impl CoefficientSlice {
    #[allow(clippy::too_many_arguments)]
    fn build(
        a: f64,
        b: DVector<f64>,
        c: DVector<f64>,
        d: DMatrix<f64>,
        q: f64,
        r: DMatrix<f64>,
        jump: Option<JumpSlice>,
    ) -> Self {
        let dtd = d.tr_mul(&d);
        let dtc = d.tr_mul(&c);
        let c_norm2 = c.norm_squared();
        CoefficientSlice {
            a,
            b,
            c,
            d,
            q,
            r,
            jump,
            dtd,
            dtc,
            c_norm2,
        }
    }

    pub fn from_pre(v: PreValues) -> Self {
        Self::build(
            v.a,
            v.b,
            v.c,
            v.d,
            v.q,
            v.r,
            Some(JumpSlice {
                e: v.e,
                f: v.f,
                lambda: v.lambda,
            }),
        )
    }

    pub fn from_post(v: PostValues) -> Self {
        Self::build(v.a, v.b, v.c, v.d, v.q, v.r, None)
    }

    pub fn control_dim(&self) -> usize {
        self.b.len()
    }

    pub fn lambda(&self) -> f64 {
        self.jump.as_ref().map_or(0.0, |j| j.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseClass {
    Standard,
    Singular,
}

/// Case plus the constants certified while scanning the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub case: CaseClass,
    /// Smallest eigenvalue of `R` over all scanned nodes, both phases.
    pub r_min: f64,
    /// Smallest terminal weight over `G0` and `G1(theta_j)`.
    pub g_min: f64,
    /// Smallest eigenvalue of `D'D` over all scanned nodes, both phases.
    pub dtd_min: f64,
}

/// The full control problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LQProblem {
    pub grid: TimeGrid,
    pub cone: ConeSpec,
    pub brownian_dim: usize,
    pub pre: PreDefaultCoeffs,
    pub post: PostDefaultCoeffs,
    pub terminal: TerminalWeights,
}

fn check_shape_vec(name: &str, v: &DVector<f64>, len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::InvalidInput(format!("{name} has length {}, expected {len}", v.len())));
    }
    Ok(())
}

fn check_shape_mat(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::InvalidInput(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_post_shapes(v: &PostValues, m: usize, k: usize, tag: &str) -> Result<()> {
    check_shape_vec(&format!("{tag}.B"), &v.b, m)?;
    check_shape_vec(&format!("{tag}.C"), &v.c, k)?;
    check_shape_mat(&format!("{tag}.D"), &v.d, k, m)?;
    check_shape_mat(&format!("{tag}.R"), &v.r, m, m)
}

pub(crate) fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => f64::INFINITY,
        1 => m[(0, 0)],
        2 => {
            let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            mean - rad
        }
        _ => {
            let sym = 0.5 * (m + m.transpose());
            sym.symmetric_eigenvalues().min()
        }
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

struct Scan {
    r_min: f64,
    dtd_min: f64,
    r_min_at: String,
}

impl Scan {
    fn new() -> Self {
        Scan {
            r_min: f64::INFINITY,
            dtd_min: f64::INFINITY,
            r_min_at: String::new(),
        }
    }

    fn control_weights(&mut self, q: f64, r: &DMatrix<f64>, d: &DMatrix<f64>, location: &str) -> Result<()> {
        if q < 0.0 || !q.is_finite() {
            return Err(Error::NotPsd {
                location: location.to_string(),
                detail: format!("Q = {q} < 0"),
            });
        }
        let scale = 1.0 + r.amax();
        if asymmetry(r) > 1e-12 * scale {
            return Err(Error::NotPsd {
                location: location.to_string(),
                detail: "R is not symmetric".into(),
            });
        }
        let rmin = min_sym_eigenvalue(r);
        if rmin < -POSITIVITY_TOL * scale {
            return Err(Error::NotPsd {
                location: location.to_string(),
                detail: format!("R has eigenvalue {rmin:e}"),
            });
        }
        if rmin < self.r_min {
            self.r_min = rmin;
            self.r_min_at = location.to_string();
        }
        self.dtd_min = self.dtd_min.min(min_sym_eigenvalue(&d.tr_mul(d)));
        Ok(())
    }
}

fn sorted_times(mut ts: Vec<f64>, horizon: f64) -> Vec<f64> {
    ts.retain(|t| *t >= 0.0 && *t <= horizon);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    ts
}

impl LQProblem {
    /// Checks dimensions only; the standing assumptions are checked by
    /// [`LQProblem::validate`].
    pub fn new(
        grid: TimeGrid,
        cone: ConeSpec,
        brownian_dim: usize,
        pre: PreDefaultCoeffs,
        post: PostDefaultCoeffs,
        terminal: TerminalWeights,
    ) -> Result<Self> {
        let m = cone.dim;
        let k = brownian_dim;
        if m == 0 || k == 0 {
            return Err(Error::InvalidInput("control and Brownian dimensions must be positive".into()));
        }
        for (_, v) in pre.b.knots() {
            check_shape_vec("pre.B", v, m)?;
        }
        for (_, v) in pre.c.knots() {
            check_shape_vec("pre.C", v, k)?;
        }
        for (_, v) in pre.d.knots() {
            check_shape_mat("pre.D", v, k, m)?;
        }
        for (_, v) in pre.f.knots() {
            check_shape_vec("pre.F", v, m)?;
        }
        for (_, v) in pre.r.knots() {
            check_shape_mat("pre.R", v, m, m)?;
        }
        let check_fields = |f: &PostFields| -> Result<()> {
            for (_, v) in f.b.knots() {
                check_shape_vec("post.B", v, m)?;
            }
            for (_, v) in f.c.knots() {
                check_shape_vec("post.C", v, k)?;
            }
            for (_, v) in f.d.knots() {
                check_shape_mat("post.D", v, k, m)?;
            }
            for (_, v) in f.r.knots() {
                check_shape_mat("post.R", v, m, m)?;
            }
            Ok(())
        };
        match &post {
            PostDefaultCoeffs::ThetaFree(f) => check_fields(f)?,
            PostDefaultCoeffs::Affine { base, slope } => {
                check_fields(base)?;
                check_post_shapes(slope, m, k, "post.slope")?;
            }
            PostDefaultCoeffs::Table(tab) => {
                if (tab.grid().horizon() - grid.horizon()).abs() > 1e-12 * grid.horizon() {
                    return Err(Error::InvalidInput("post-default table horizon differs from the grid".into()));
                }
                for (_, v) in tab.all_values() {
                    check_post_shapes(v, m, k, "post.table")?;
                }
            }
        }
        Ok(LQProblem {
            grid,
            cone,
            brownian_dim,
            pre,
            post,
            terminal,
        })
    }

    /// Constant coefficients in both phases.
    pub fn constant(
        grid: TimeGrid,
        cone: ConeSpec,
        brownian_dim: usize,
        pre: PreValues,
        post: PostValues,
        g0: f64,
        g1: f64,
    ) -> Result<Self> {
        Self::new(
            grid,
            cone,
            brownian_dim,
            PreDefaultCoeffs::constant(pre),
            PostDefaultCoeffs::constant(post),
            TerminalWeights::constant(g0, g1),
        )
    }

    pub fn control_dim(&self) -> usize {
        self.cone.dim
    }

    /// Same problem on a different grid.
    pub fn with_grid(&self, grid: TimeGrid) -> Self {
        LQProblem {
            grid,
            ..self.clone()
        }
    }

    /// Coefficients at `t` by linear interpolation; exact at knots and nodes.
    pub fn coefficient_at(&self, t: f64, phase: Phase) -> Result<CoefficientSlice> {
        let horizon = self.grid.horizon();
        let slack = 1e-12 * horizon;
        if !(t >= -slack && t <= horizon + slack) {
            return Err(Error::OutOfRange(format!("t = {t} outside [0, {horizon}]")));
        }
        let t = t.clamp(0.0, horizon);
        match phase {
            Phase::PreDefault => Ok(CoefficientSlice::from_pre(self.pre.at(t))),
            Phase::PostDefault { theta } => {
                if !(theta >= -slack && theta <= t + slack) {
                    return Err(Error::OutOfRange(format!("theta = {theta} must lie in [0, t = {t}]")));
                }
                Ok(CoefficientSlice::from_post(self.post.at(t, theta.clamp(0.0, t))))
            }
        }
    }

    /// Checks the standing assumptions on every grid node (and every knot)
    /// and classifies the problem.
    pub fn validate(&self) -> Result<Classification> {
        let horizon = self.grid.horizon();
        let mut scan = Scan::new();

        let mut pre_times = self.grid.nodes();
        pre_times.extend(self.pre.knot_times());
        for t in sorted_times(pre_times, horizon) {
            let v = self.pre.at(t);
            let loc = format!("pre-default t={t}");
            if !(v.e >= -1.0) {
                return Err(Error::ViolatedAssumption {
                    location: loc,
                    detail: format!("E = {} < -1", v.e),
                });
            }
            if !(v.lambda >= 0.0) || !v.lambda.is_finite() {
                return Err(Error::ViolatedAssumption {
                    location: loc,
                    detail: format!("intensity {} is negative or unbounded", v.lambda),
                });
            }
            scan.control_weights(v.q, &v.r, &v.d, &loc)?;
        }

        match &self.post {
            PostDefaultCoeffs::ThetaFree(fields) => {
                let mut ts = self.grid.nodes();
                ts.extend(fields.knot_times());
                for t in sorted_times(ts, horizon) {
                    let v = fields.at(t);
                    scan.control_weights(v.q, &v.r, &v.d, &format!("post-default t={t}"))?;
                }
            }
            _ => {
                let n = self.grid.steps();
                for i in 0..=n {
                    let t = self.grid.node(i);
                    for j in 0..=i {
                        let theta = self.grid.node(j);
                        let v = self.post.at(t, theta);
                        scan.control_weights(v.q, &v.r, &v.d, &format!("post-default t={t} theta={theta}"))?;
                    }
                }
            }
        }

        let mut g_min = self.terminal.g0;
        let mut g_min_at = "G0".to_string();
        let mut thetas = self.grid.nodes();
        thetas.extend(self.terminal.g1.knots().iter().map(|k| k.0));
        for theta in sorted_times(thetas, horizon) {
            let g = self.terminal.g1.at(theta);
            if !g.is_finite() {
                return Err(Error::InvalidInput(format!("G1({theta}) is not finite")));
            }
            if g < g_min {
                g_min = g;
                g_min_at = format!("G1(theta={theta})");
            }
        }

        let standard = scan.r_min > POSITIVITY_TOL && g_min >= 0.0;
        let singular = g_min > POSITIVITY_TOL && scan.dtd_min > POSITIVITY_TOL;
        let case = if standard {
            CaseClass::Standard
        } else if singular {
            CaseClass::Singular
        } else {
            return Err(Error::NeitherCase(format!(
                "min eig R = {:e} at {}, min G = {:e} at {}, min eig D'D = {:e}",
                scan.r_min, scan.r_min_at, g_min, g_min_at, scan.dtd_min
            )));
        };
        Ok(Classification {
            case,
            r_min: scan.r_min,
            g_min,
            dtd_min: scan.dtd_min,
        })
    }

    pub fn case_class(&self) -> Result<CaseClass> {
        self.validate().map(|c| c.case)
    }

    /// `sup G` over `G0` and `G1` on grid nodes.
    pub fn terminal_sup(&self) -> f64 {
        self.grid
            .nodes()
            .iter()
            .map(|t| self.terminal.g1.at(*t).abs())
            .fold(self.terminal.g0.abs(), f64::max)
    }
}

/// Free-function form of [`LQProblem::validate`].
pub fn validate_problem(problem: &LQProblem) -> Result<Classification> {
    problem.validate()
}

/// Free-function form of [`LQProblem::coefficient_at`].
pub fn coefficient_at(problem: &LQProblem, t: f64, phase: Phase) -> Result<CoefficientSlice> {
    problem.coefficient_at(t, phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 10).unwrap()
    }

    fn standard() -> LQProblem {
        LQProblem::constant(
            grid(),
            ConeSpec::nonneg(1),
            1,
            PreValues::scalar(0.1, 0.2, 0.3, 0.4, 0.0, 0.1, 1.0, 1.0, 0.5),
            PostValues::scalar(0.1, 0.2, 0.3, 0.4, 1.0, 1.0),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn grid_nodes_are_uniform() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert_eq!(g.locate(2.0), (3, 1.0));
        assert_eq!(g.locate(0.75), (1, 0.5));
    }

    #[test]
    fn cone_membership_and_scaling() {
        let c = ConeSpec::nonneg(2);
        assert!(c.contains(&[0.0, 1.0]));
        assert!(!c.contains(&[-1e-3, 1.0]));
        assert!(c.contains(&[0.0, 3.0]));
        assert!(ConeSpec::full_space(2).contains(&[-1.0, 2.0]));
        let mut u = [-1.0, 2.0];
        c.project(&mut u);
        assert_eq!(u, [0.0, 2.0]);
    }

    #[test]
    fn identity_weights_classify_standard() {
        let c = standard().validate().unwrap();
        assert_eq!(c.case, CaseClass::Standard);
        assert_eq!(c.r_min, 1.0);
    }

    #[test]
    fn zero_control_weight_with_positive_terminal_is_singular() {
        let p = LQProblem::constant(
            grid(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            PostValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            1.0,
            1.0,
        )
        .unwrap();
        let c = p.validate().unwrap();
        assert_eq!(c.case, CaseClass::Singular);
        assert_eq!(c.dtd_min, 1.0);
        assert_eq!(c.g_min, 1.0);
    }

    #[test]
    fn zero_control_and_terminal_weight_is_neither() {
        let p = LQProblem::constant(
            grid(),
            ConeSpec::full_space(1),
            1,
            PreValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            PostValues::scalar(0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            0.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(p.validate(), Err(Error::NeitherCase(_))));
    }

    #[test]
    fn jump_below_minus_one_is_rejected_with_location() {
        let mut p = standard();
        p.pre.e = Profile::from_knots(vec![(0.0, 0.0), (1.0, -2.0)]).unwrap();
        match p.validate() {
            Err(Error::ViolatedAssumption { location, .. }) => assert!(location.contains("t=")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_state_weight_is_not_psd() {
        let mut p = standard();
        p.post = PostDefaultCoeffs::constant(PostValues::scalar(0.1, 0.2, 0.3, 0.4, -1.0, 1.0));
        assert!(matches!(p.validate(), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn coefficient_interpolation() {
        let mut p = standard();
        p.pre.a = Profile::from_knots(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let s = p.coefficient_at(0.5, Phase::PreDefault).unwrap();
        assert_eq!(s.a, 0.5);
        assert_eq!(s.b[0], 0.2);

        p.post = PostDefaultCoeffs::Affine {
            base: PostFields::constant(PostValues::scalar(0.1, 0.2, 0.3, 0.4, 1.0, 1.0)),
            slope: PostValues {
                a: 0.2,
                ..PostValues::zeros(1, 1)
            },
        };
        let s = p.coefficient_at(0.7, Phase::PostDefault { theta: 0.5 }).unwrap();
        assert!((s.a - 0.2).abs() < 1e-15);
        assert!(s.jump.is_none());
    }

    #[test]
    fn coefficient_query_out_of_range() {
        let p = standard();
        assert!(matches!(p.coefficient_at(1.5, Phase::PreDefault), Err(Error::OutOfRange(_))));
        assert!(matches!(
            p.coefficient_at(0.3, Phase::PostDefault { theta: 0.5 }),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn table_reproduces_nodes_and_interpolates() {
        let g = grid();
        let tab = PostTable::from_fn(g, |t, th| PostValues {
            a: t + 2.0 * th,
            ..PostValues::zeros(1, 1)
        });
        assert!((tab.at(0.3, 0.2).a - 0.7).abs() < 1e-12);
        // bilinear is exact for a bilinear function away from the diagonal
        assert!((tab.at(0.55, 0.15).a - 0.85).abs() < 1e-12);
    }
}
