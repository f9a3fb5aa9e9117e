//! TOML run configuration.
//!
//! Every section is read through a [`Section`] that removes the keys it
//! consumes, so leftovers are reported as unknown keys with their dotted path.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::meanvariance::MarketSpec;
use crate::model::{
    ConeKind, ConeSpec, LQProblem, PostDefaultCoeffs, PostFields, PostValues, PreDefaultCoeffs, PreValues,
    TerminalWeights, TimeGrid,
};
use crate::verify::CRITERIA;

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Simulate,
    Frontier,
    Verify,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Mode::Solve),
            "simulate" => Ok(Mode::Simulate),
            "frontier" => Ok(Mode::Frontier),
            "verify" => Ok(Mode::Verify),
            other => Err(Error::InvalidInput(format!(
                "unknown mode `{other}` (expected solve, simulate, frontier or verify)"
            ))),
        }
    }
}

/// Command-line values that replace configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub paths: usize,
    pub seed: u64,
    pub x0: f64,
    /// Number of simulated paths written to `paths.csv`; none when zero.
    pub save_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierSettings {
    pub z: Vec<f64>,
    /// Adds simulated terminal moments to every frontier row.
    pub mc_check: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub criteria: Vec<usize>,
    pub perturbed_paths: usize,
    pub oracle_paths: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub source: PathBuf,
    pub grid: Option<TimeGrid>,
    pub problem: Option<LQProblem>,
    pub market: Option<MarketSpec>,
    pub mc: McSettings,
    pub frontier: Option<FrontierSettings>,
    pub verify: VerifySettings,
    pub output_dir: PathBuf,
}

fn schema(key: &str, detail: impl Into<String>) -> Error {
    Error::Schema {
        key: key.to_string(),
        detail: detail.into(),
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// A table being consumed key by key.
struct Section {
    path: String,
    table: Table,
}

impl Section {
    fn new(path: impl Into<String>, table: Table) -> Self {
        Section {
            path: path.into(),
            table,
        }
    }

    fn key(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<Value> {
        self.take(key).ok_or_else(|| schema(&self.key(key), "missing required key"))
    }

    fn sub(&mut self, key: &str) -> Result<Option<Section>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(self.key(key), t))),
            Some(_) => Err(schema(&self.key(key), "expected a table")),
        }
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(schema(&self.key(key), "expected a number")),
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.required(key)?;
        self.number(key, &v)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            Some(v) => self.number(key, &v),
            None => Ok(default),
        }
    }

    fn count_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if i >= 0 => Ok(i as u64),
            Some(_) => Err(schema(&self.key(key), "expected a nonnegative integer")),
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(b),
            Some(_) => Err(schema(&self.key(key), "expected true or false")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(schema(&self.key(key), "expected a string")),
        }
    }

    fn numbers(&self, key: &str, v: &Value) -> Result<Vec<f64>> {
        match v {
            Value::Array(a) => a.iter().map(|x| self.number(key, x)).collect(),
            other => Ok(vec![self.number(key, other)?]),
        }
    }

    /// A number or an array of numbers.
    fn vector(&mut self, key: &str) -> Result<DVector<f64>> {
        let v = self.required(key)?;
        Ok(DVector::from_vec(self.numbers(key, &v)?))
    }

    fn vector_opt(&mut self, key: &str) -> Result<Option<DVector<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => Ok(Some(DVector::from_vec(self.numbers(key, &v)?))),
        }
    }

    /// A number (1 x 1) or an array of equally long rows.
    fn matrix_value(&self, key: &str, v: &Value) -> Result<DMatrix<f64>> {
        let rows: Vec<Vec<f64>> = match v {
            Value::Array(a) if a.iter().all(|r| r.is_array()) => {
                a.iter().map(|r| self.numbers(key, r)).collect::<Result<_>>()?
            }
            Value::Array(_) => return Err(schema(&self.key(key), "expected an array of rows")),
            other => vec![vec![self.number(key, other)?]],
        };
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(schema(&self.key(key), "rows must be nonempty and of equal length"));
        }
        Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    fn matrix(&mut self, key: &str) -> Result<DMatrix<f64>> {
        let v = self.required(key)?;
        self.matrix_value(key, &v)
    }

    fn matrix_opt(&mut self, key: &str) -> Result<Option<DMatrix<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => Ok(Some(self.matrix_value(key, &v)?)),
        }
    }

    /// Fails on any key left unread.
    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            Some(k) => Err(schema(&join(&self.path, k), "unknown key")),
            None => Ok(()),
        }
    }
}

fn read_grid(root: &mut Section, steps_override: Option<usize>) -> Result<Option<TimeGrid>> {
    let Some(mut s) = root.sub("grid")? else {
        return Ok(None);
    };
    let horizon = s.f64("T")?;
    let steps = s.count_or("n", DEFAULT_STEPS as u64)? as usize;
    s.finish()?;
    let steps = steps_override.unwrap_or(steps);
    TimeGrid::new(horizon, steps)
        .map(Some)
        .map_err(|e| schema("grid", e.to_string()))
}

fn read_cone(root: &mut Section, dim: usize) -> Result<ConeSpec> {
    let kind = match root.sub("cone")? {
        None => ConeKind::FullSpace,
        Some(mut s) => {
            let kind = match s.string("kind")?.as_deref() {
                None | Some("full") => ConeKind::FullSpace,
                Some("nonneg") => ConeKind::NonNegOrthant,
                Some(other) => return Err(schema("cone.kind", format!("`{other}` is not `full` or `nonneg`"))),
            };
            s.finish()?;
            kind
        }
    };
    Ok(ConeSpec { kind, dim })
}

fn read_pre(s: &mut Section) -> Result<PreValues> {
    let b = s.vector("B")?;
    let m = b.len();
    Ok(PreValues {
        a: s.f64("A")?,
        c: s.vector("C")?,
        d: s.matrix("D")?,
        e: s.f64_or("E", 0.0)?,
        f: s.vector_opt("F")?.unwrap_or_else(|| DVector::zeros(m)),
        q: s.f64("Q")?,
        r: s.matrix("R")?,
        lambda: s.f64_or("lambda", 0.0)?,
        b,
    })
}

fn read_post(s: &mut Section) -> Result<PostValues> {
    Ok(PostValues {
        a: s.f64("A")?,
        b: s.vector("B")?,
        c: s.vector("C")?,
        d: s.matrix("D")?,
        q: s.f64("Q")?,
        r: s.matrix("R")?,
    })
}

/// Slope of the post-default data in the default time; absent fields are zero.
fn read_slope(s: &mut Section, m: usize, k: usize) -> Result<PostValues> {
    let zero = PostValues::zeros(m, k);
    Ok(PostValues {
        a: s.f64_or("A", 0.0)?,
        b: s.vector_opt("B")?.unwrap_or(zero.b),
        c: s.vector_opt("C")?.unwrap_or(zero.c),
        d: s.matrix_opt("D")?.unwrap_or(zero.d),
        q: s.f64_or("Q", 0.0)?,
        r: s.matrix_opt("R")?.unwrap_or(zero.r),
    })
}

fn read_problem(root: &mut Section, grid: Option<TimeGrid>) -> Result<Option<LQProblem>> {
    let Some(mut s) = root.sub("problem")? else {
        return Ok(None);
    };
    let grid = grid.ok_or_else(|| schema("grid", "missing required section"))?;
    let mut pre_s = s.sub("pre")?.ok_or_else(|| schema("problem.pre", "missing required section"))?;
    let pre = read_pre(&mut pre_s)?;
    pre_s.finish()?;
    let m = pre.b.len();
    let k = pre.c.len();
    let brownian_dim = s.count_or("brownian_dim", k as u64)? as usize;

    let mut post_s = s.sub("post")?.ok_or_else(|| schema("problem.post", "missing required section"))?;
    let base = read_post(&mut post_s)?;
    let slope = match post_s.sub("theta_slope")? {
        None => None,
        Some(mut sl) => {
            let v = read_slope(&mut sl, m, k)?;
            sl.finish()?;
            Some(v)
        }
    };
    post_s.finish()?;
    s.finish()?;

    let mut terminal = root.sub("terminal")?.ok_or_else(|| schema("terminal.G0", "missing required key"))?;
    let g0 = terminal.f64("G0")?;
    let g1 = terminal.f64("G1")?;
    terminal.finish()?;

    let cone = read_cone(root, m)?;
    let post = match slope {
        None => PostDefaultCoeffs::constant(base),
        Some(slope) => PostDefaultCoeffs::Affine {
            base: PostFields::constant(base),
            slope,
        },
    };
    LQProblem::new(
        grid,
        cone,
        brownian_dim,
        PreDefaultCoeffs::constant(pre),
        post,
        TerminalWeights::constant(g0, g1),
    )
    .map(Some)
}

fn read_market(root: &mut Section, grid: Option<TimeGrid>) -> Result<Option<MarketSpec>> {
    let Some(mut s) = root.sub("market")? else {
        return Ok(None);
    };
    let grid = grid.ok_or_else(|| schema("grid", "missing required section"))?;
    let market = MarketSpec::constant(
        grid,
        s.f64("r")?,
        s.f64("b0")?,
        s.f64("sigma0")?,
        s.f64_or("gamma", 0.0)?,
        s.f64_or("lambda", 0.0)?,
        s.f64("b1")?,
        s.f64("sigma1")?,
        s.f64("x0")?,
        if s.bool_or("short_selling", false)? {
            ConeSpec::full_space(1)
        } else {
            ConeSpec::nonneg(1)
        },
    );
    s.finish()?;
    Ok(Some(market))
}

fn read_mc(root: &mut Section, ov: &Overrides) -> Result<McSettings> {
    let mut s = root.sub("mc")?.unwrap_or_else(|| Section::new("mc", Table::new()));
    let mc = McSettings {
        paths: s.count_or("paths", DEFAULT_PATHS as u64)? as usize,
        seed: s.count_or("seed", DEFAULT_SEED)?,
        x0: s.f64_or("x0", 1.0)?,
        save_paths: s.count_or("save_paths", 0)? as usize,
    };
    s.finish()?;
    Ok(McSettings {
        paths: ov.paths.unwrap_or(mc.paths),
        seed: ov.seed.unwrap_or(mc.seed),
        ..mc
    })
}

fn read_frontier(root: &mut Section) -> Result<Option<FrontierSettings>> {
    let Some(mut s) = root.sub("frontier")? else {
        return Ok(None);
    };
    let zv = s.required("z")?;
    let z = s.numbers("z", &zv)?;
    let mc_check = s.bool_or("mc_check", false)?;
    s.finish()?;
    Ok(Some(FrontierSettings { z, mc_check }))
}

fn read_verify(root: &mut Section) -> Result<VerifySettings> {
    let mut s = root.sub("verify")?.unwrap_or_else(|| Section::new("verify", Table::new()));
    let criteria = match s.take("criteria") {
        None => CRITERIA.to_vec(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                Value::Integer(i) if (1..=10).contains(i) => Ok(*i as usize),
                _ => Err(schema("verify.criteria", "entries must be integers from 1 to 10")),
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(schema("verify.criteria", "expected an array")),
    };
    let v = VerifySettings {
        criteria,
        perturbed_paths: s.count_or("perturbed_paths", 20_000)? as usize,
        oracle_paths: s.count_or("oracle_paths", 2_000)? as usize,
    };
    s.finish()?;
    Ok(v)
}

/// Prefixes model-level error locations with the configuration file.
fn locate(err: Error, source: &Path, section: &str) -> Error {
    let at = |location: String| format!("{} [{section}] {location}", source.display());
    match err {
        Error::ViolatedAssumption { location, detail } => Error::ViolatedAssumption {
            location: at(location),
            detail,
        },
        Error::NotPsd { location, detail } => Error::NotPsd {
            location: at(location),
            detail,
        },
        Error::NeitherCase(detail) => Error::NeitherCase(at(detail)),
        Error::InvalidInput(detail) => Error::InvalidInput(at(detail)),
        other => other,
    }
}

/// Parses configuration text. `source` only labels error messages.
pub fn parse_config_str(text: &str, source: &Path, mode: Mode, ov: &Overrides) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(format!("{}: {e}", source.display())))?;
    let mut root = Section::new("", table);

    let grid = read_grid(&mut root, ov.grid)?;
    let problem = read_problem(&mut root, grid).map_err(|e| locate(e, source, "problem"))?;
    let market = read_market(&mut root, grid)?;
    let mc = read_mc(&mut root, ov)?;
    let frontier = read_frontier(&mut root)?;
    let verify = read_verify(&mut root)?;
    let output_dir = match root.string("output_dir")? {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from("out"),
    };
    root.finish()?;

    let require = |present: bool, key: &str| if present { Ok(()) } else { Err(schema(key, "missing required section")) };
    let forbid = |present: bool, key: &str| {
        if present {
            Err(schema(key, format!("section is not used in {mode:?} mode").to_lowercase()))
        } else {
            Ok(())
        }
    };
    match mode {
        Mode::Solve | Mode::Simulate => {
            require(problem.is_some(), "problem")?;
            forbid(market.is_some(), "market")?;
        }
        Mode::Frontier => {
            require(market.is_some(), "market")?;
            require(frontier.is_some(), "frontier.z")?;
            forbid(problem.is_some(), "problem")?;
        }
        Mode::Verify => {}
    }
    if matches!(mode, Mode::Simulate | Mode::Frontier) && mc.paths < 2 {
        return Err(schema("mc.paths", "at least 2 paths are required"));
    }
    if mode != Mode::Verify {
        if let Some(p) = &problem {
            p.validate().map_err(|e| locate(e, source, "problem"))?;
        }
    }
    Ok(RunConfig {
        mode,
        source: source.to_path_buf(),
        grid,
        problem,
        market,
        mc,
        frontier,
        verify,
        output_dir: ov.out.clone().unwrap_or(output_dir),
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path, mode: Mode, ov: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, path, mode, ov)
}
