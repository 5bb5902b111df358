//! Configuration-driven verification suites behind the `ptc` binary.

use crate::dirichlet::{solve_homogeneous, SolveOptions};
use crate::error::{Error, Result};
use crate::halfspace_ops::{GridFunction, HalfSpaceGrid, SupportTag};
use crate::identities::{
    refinement_study, verify_example66, verify_halfways_green, verify_ibp, IdentityReport, SeparableTest,
};
use crate::symbols::{
    factorization_index, parse_symbol, random_ab, reduced_symbol, HomogeneousSymbol, TransmissionData,
};
use crate::wiener_hopf::{product_factorize, reduced_slice, write_factor_dump};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Environment variable that overrides `output_dir` (flags still win).
pub const OUTPUT_DIR_ENV: &str = "PTC_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Index,
    Factorize,
    Solve,
    Ibp,
    Green,
    Ex66,
    Convergence,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Index => "index",
            Suite::Factorize => "factorize",
            Suite::Solve => "solve",
            Suite::Ibp => "ibp",
            Suite::Green => "green",
            Suite::Ex66 => "ex66",
            Suite::Convergence => "convergence",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::Value::String(s.to_string()).try_into().map_err(|_| Error::ConfigInvalid(format!("unknown suite {s:?}")))
    }
}

fn default_n() -> usize {
    2
}
fn default_points() -> usize {
    256
}
fn default_half_length() -> f64 {
    8.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// catalog name with parameters, e.g. `L1(0,1)`
    pub symbol: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(rename = "N", default = "default_points")]
    pub points: usize,
    #[serde(rename = "L", default = "default_half_length")]
    pub box_half_length: f64,
    /// optional cross-check of the symbol order (degree / 2)
    #[serde(default)]
    pub a: Option<f64>,
    pub suite: Vec<Suite>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// write measured runtimes; false writes 0 for byte-identical reruns
    #[serde(default = "default_true")]
    pub timing: bool,
}

/// Command-line values that replace config keys when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub symbol: Option<String>,
    pub n: Option<usize>,
    pub points: Option<usize>,
    pub box_half_length: Option<f64>,
    pub a: Option<f64>,
    pub suite: Option<Vec<Suite>>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub timing: Option<bool>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// A config built only from overrides; `symbol` and `suite` are required.
    pub fn from_overrides(o: &Overrides) -> Result<Self> {
        let symbol = o.symbol.clone().ok_or_else(|| Error::ConfigInvalid("no symbol given".into()))?;
        let suite = o.suite.clone().ok_or_else(|| Error::ConfigInvalid("no suite given".into()))?;
        let mut c = Self {
            symbol,
            n: default_n(),
            points: default_points(),
            box_half_length: default_half_length(),
            a: None,
            suite,
            output_dir: default_output_dir(),
            seed: 0,
            timing: true,
        };
        c.apply(o);
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &o.$f { self.$f = v.clone(); })*};
        }
        set!(symbol, n, points, box_half_length, suite, output_dir, seed, timing);
        if o.a.is_some() {
            self.a = o.a;
        }
    }

    /// Replace output_dir from the environment variable if it is set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    /// Schema checks; returns the parsed symbol.
    pub fn validate(&self) -> Result<HomogeneousSymbol> {
        if self.suite.is_empty() {
            return Err(Error::ConfigInvalid("suite is empty".into()));
        }
        HalfSpaceGrid::new(self.n, self.box_half_length, self.points)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        let p = parse_symbol(&self.symbol, self.n).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if p.dimension != self.n {
            return Err(Error::ConfigInvalid(format!(
                "symbol {} lives in dimension {}, config has n = {}",
                p.label, p.dimension, self.n
            )));
        }
        if let Some(a) = self.a {
            if (a - p.a()).abs() > 1e-12 {
                return Err(Error::ConfigInvalid(format!("a = {a} but symbol {} has a = {}", p.label, p.a())));
            }
        }
        Ok(p)
    }

    fn grid(&self) -> HalfSpaceGrid {
        HalfSpaceGrid::new(self.n, self.box_half_length, self.points).expect("validated")
    }
}

/// One pass/fail line of the summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    fn at_most(suite: Suite, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { suite: suite.name(), name: name.into(), value, limit, pass: value <= limit, detail: String::new() }
    }

    fn at_least(suite: Suite, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { suite: suite.name(), name: name.into(), value, limit, pass: value >= limit, detail: String::new() }
    }

    fn failed(suite: Suite, err: &Error) -> Self {
        Self {
            suite: suite.name(),
            name: "completed".into(),
            value: f64::NAN,
            limit: f64::NAN,
            pass: false,
            detail: err.to_string(),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {}/{}: {:.3e} (limit {:.1e})", self.suite, self.name, self.value, self.limit)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub criteria: Vec<Criterion>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Exit code for an error raised before or outside the suites.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::ConfigInvalid(_) | Error::Parse(_) => 2,
        _ => 1,
    }
}

#[derive(Serialize)]
pub struct IdentityRow {
    pub symbol: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    pub a: f64,
    #[serde(rename = "Re_mu")]
    pub re_mu: f64,
    #[serde(rename = "Im_mu")]
    pub im_mu: f64,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    pub rel_error: f64,
    pub runtime_s: f64,
}

impl IdentityRow {
    pub fn new(label: &str, td: &TransmissionData, r: &IdentityReport, runtime_s: f64) -> Self {
        Self {
            symbol: label.to_string(),
            n: r.grid.n,
            points: r.grid.points,
            a: td.a,
            re_mu: td.mu.re,
            im_mu: td.mu.im,
            lhs_re: r.lhs.re,
            lhs_im: r.lhs.im,
            rhs_re: r.rhs.re,
            rhs_im: r.rhs.im,
            rel_error: r.rel_error,
            runtime_s,
        }
    }
}

#[derive(Serialize)]
struct IndexRow {
    symbol: String,
    n: usize,
    a: f64,
    delta_re: f64,
    delta_im: f64,
    #[serde(rename = "Re_mu")]
    re_mu: f64,
    #[serde(rename = "Im_mu")]
    im_mu: f64,
    s0_re: f64,
    s0_im: f64,
    principal_residual: f64,
    strongly_elliptic: bool,
}

#[derive(Serialize)]
struct FactorRow {
    symbol: String,
    xi_prime: f64,
    points: usize,
    reconstruction_error: f64,
}

#[derive(Serialize)]
struct SolveRow {
    symbol: String,
    n: usize,
    #[serde(rename = "N")]
    points: usize,
    #[serde(rename = "Re_mu")]
    re_mu: f64,
    #[serde(rename = "Im_mu")]
    im_mu: f64,
    residual: f64,
    residual_direct: f64,
    residual_grid: f64,
    exponent_fit: f64,
    runtime_s: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    timestamp_unix_s: u64,
    suite: &'a str,
    criterion: &'a str,
    value: f64,
    limit: f64,
    status: &'a str,
    detail: &'a str,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct Runner<'a> {
    config: &'a RunConfig,
    p: HomogeneousSymbol,
    report: RunReport,
}

impl Runner<'_> {
    fn elapsed(&self, t: Instant) -> f64 {
        if self.config.timing {
            t.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    fn out(&mut self, name: &str) -> PathBuf {
        let path = self.config.output_dir.join(name);
        self.report.files.push(path.clone());
        path
    }

    fn td(&self) -> Result<TransmissionData> {
        factorization_index(&self.p)
    }

    fn index(&mut self) -> Result<Vec<Criterion>> {
        let td = self.td()?;
        let row = IndexRow {
            symbol: self.p.label.clone(),
            n: self.p.dimension,
            a: td.a,
            delta_re: td.delta.re,
            delta_im: td.delta.im,
            re_mu: td.mu.re,
            im_mu: td.mu.im,
            s0_re: td.s0.re,
            s0_im: td.s0.im,
            principal_residual: td.principal_condition_residual,
            strongly_elliptic: td.strongly_elliptic,
        };
        let path = self.out("index.csv");
        write_csv(&path, &[row])?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let q = random_ab(self.config.n, &mut rng);
            let d = factorization_index(&q)?.delta;
            worst = worst.max(if d.im.abs() > 1e-12 { f64::INFINITY } else { d.re.abs() });
        }
        Ok(vec![
            Criterion::at_most(
                Suite::Index,
                format!("principal condition (mu = {:.6})", td.mu),
                td.principal_condition_residual,
                1e-10,
            ),
            Criterion::at_most(Suite::Index, "random strongly elliptic |delta| < 1/2", worst, 0.5 - 1e-12),
        ])
    }

    fn factorize(&mut self) -> Result<Vec<Criterion>> {
        let td = self.td()?;
        let q = reduced_symbol(&self.p, &td, true);
        let points = self.config.points;
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for r in [1.0, 4.0, 16.0] {
            let mut xp = vec![0.0; self.config.n - 1];
            xp[0] = r;
            let slice = reduced_slice(&q, &xp, points, td.s0);
            let f = product_factorize(&slice, td.s0)?;
            let e = f.reconstruction_error(&slice);
            worst = worst.max(e);
            if r == 1.0 {
                let path = self.out("factors_xi1.txt");
                std::fs::write(&path, write_factor_dump(&f)).map_err(|e| Error::Io(e.to_string()))?;
            }
            rows.push(FactorRow { symbol: self.p.label.clone(), xi_prime: r, points, reconstruction_error: e });
        }
        let path = self.out("factorize.csv");
        write_csv(&path, &rows)?;
        Ok(vec![Criterion::at_most(Suite::Factorize, "reconstruction |q - q-q+| / |q|", worst, 1e-8)])
    }

    fn solve(&mut self) -> Result<Vec<Criterion>> {
        let td = self.td()?;
        let grid = self.config.grid();
        let f = GridFunction::from_fn(grid, SupportTag::Restricted, |x| {
            C64::new((-x.iter().map(|t| t * t).sum::<f64>()).exp(), 0.0)
        });
        let t = Instant::now();
        let s = solve_homogeneous(&self.p, &td, &f, SolveOptions::default())?;
        let row = SolveRow {
            symbol: self.p.label.clone(),
            n: grid.n,
            points: grid.points,
            re_mu: td.mu.re,
            im_mu: td.mu.im,
            residual: s.residual,
            residual_direct: s.residual_direct,
            residual_grid: s.residual_grid,
            exponent_fit: s.exponent_fit,
            runtime_s: self.elapsed(t),
        };
        let path = self.out("solve.csv");
        write_csv(&path, &[row])?;
        let path = self.out("solution.ptcg");
        std::fs::write(&path, s.u.to_bytes()).map_err(|e| Error::Io(e.to_string()))?;
        Ok(vec![
            Criterion::at_most(Suite::Solve, "factorized residual", s.residual, 1e-6),
            Criterion::at_most(
                Suite::Solve,
                "boundary exponent relative deviation",
                (s.exponent_fit - td.mu.re).abs() / td.mu.re.abs().max(1e-300),
                0.02,
            ),
        ])
    }

    fn identity_rows(&mut self, file: &str, rows: Vec<IdentityRow>) -> Result<()> {
        let path = self.out(file);
        write_csv(&path, &rows)
    }

    fn tests() -> (SeparableTest, SeparableTest) {
        (SeparableTest::gaussian(1.0, 1.0), SeparableTest::gaussian(1.5, 2.0))
    }

    fn ibp(&mut self) -> Result<Vec<Criterion>> {
        let td = self.td()?;
        let (v, w) = Self::tests();
        let grid = self.config.grid();
        let t = Instant::now();
        let r = verify_ibp(&self.p, &td, &v, &w, grid)?;
        let rt = self.elapsed(t);
        let z = verify_ibp(&self.p, &td, &SeparableTest::gaussian_zero_trace(1.0, 1.0), &w, grid)?;
        let label = self.p.label.clone();
        self.identity_rows("ibp.csv", vec![IdentityRow::new(&label, &td, &r, rt)])?;
        Ok(vec![
            Criterion::at_most(Suite::Ibp, "rel_error", r.rel_error, 1e-3),
            Criterion::at_most(Suite::Ibp, "zero trace |LHS| / scale", z.relative_lhs(), 1e-3),
        ])
    }

    fn green(&mut self) -> Result<Vec<Criterion>> {
        let td = self.td()?;
        let (v, w) = Self::tests();
        let grid = self.config.grid();
        let t = Instant::now();
        let r = verify_halfways_green(&self.p, &td, &v, &w, grid)?;
        let rt = self.elapsed(t);
        let z = verify_halfways_green(&self.p, &td, &SeparableTest::gaussian_zero_trace(1.0, 1.0), &w, grid)?;
        let label = self.p.label.clone();
        self.identity_rows("green.csv", vec![IdentityRow::new(&label, &td, &r, rt)])?;
        Ok(vec![
            Criterion::at_most(Suite::Green, "rel_error", r.rel_error, 3e-3),
            Criterion::at_most(Suite::Green, "zero trace |LHS| / scale", z.relative_lhs(), 1e-3),
            Criterion::at_most(Suite::Green, "u1 contribution", r.diagnostic, 1e-3),
        ])
    }

    fn ex66(&mut self) -> Result<Vec<Criterion>> {
        let points = self.config.points.min(64);
        let grid = HalfSpaceGrid::new(3, self.config.box_half_length, points)?;
        let t = Instant::now();
        let (x3, x2) = verify_example66(1.5, grid)?;
        let rt = self.elapsed(t);
        let p = crate::symbols::example66(1.5)?;
        let mut rows = Vec::new();
        for (axis, r) in [(2, &x3), (1, &x2)] {
            let q = p.with_normal_axis(axis);
            rows.push(IdentityRow::new(&q.label, &factorization_index(&q)?, r, rt));
        }
        self.identity_rows("ex66.csv", rows)?;
        Ok(vec![
            Criterion::at_most(Suite::Ex66, "x3-normal rel_error", x3.rel_error, 5e-2),
            Criterion::at_most(Suite::Ex66, "x2-normal rel_error", x2.rel_error, 5e-2),
        ])
    }

    fn convergence(&mut self) -> Result<Vec<Criterion>> {
        let td = self.td()?;
        let (v, w) = Self::tests();
        let top = self.config.points;
        if top < 32 {
            return Err(Error::ConfigInvalid("convergence needs N >= 32".into()));
        }
        let grids: Vec<HalfSpaceGrid> = [top / 4, top / 2, top]
            .iter()
            .map(|&n| HalfSpaceGrid::new(self.config.n, self.config.box_half_length, n))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for &g in &grids {
            let t = Instant::now();
            let r = verify_ibp(&self.p, &td, &v, &w, g)?;
            rows.push(IdentityRow::new(&self.p.label, &td, &r, self.elapsed(t)));
        }
        let last = refinement_study(&grids, |g| verify_ibp(&self.p, &td, &v, &w, g))?;
        self.identity_rows("convergence.csv", rows)?;
        let worst = last.refinement_ratios.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(vec![Criterion::at_least(Suite::Convergence, "min error ratio per doubling", worst, 2.0)])
    }
}

/// Execute the configured suites in order, writing CSVs and `summary.csv`.
/// Errors are returned only for invalid configuration or output failures;
/// failing suites are recorded as failed criteria.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let p = config.validate()?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", config.output_dir.display())))?;
    let mut runner = Runner { config, p, report: RunReport::default() };
    for &suite in &config.suite {
        let out = match suite {
            Suite::Index => runner.index(),
            Suite::Factorize => runner.factorize(),
            Suite::Solve => runner.solve(),
            Suite::Ibp => runner.ibp(),
            Suite::Green => runner.green(),
            Suite::Ex66 => runner.ex66(),
            Suite::Convergence => runner.convergence(),
        };
        match out {
            Ok(c) => runner.report.criteria.extend(c),
            Err(e @ Error::Io(_)) => return Err(e),
            Err(e) => runner.report.criteria.push(Criterion::failed(suite, &e)),
        }
    }
    let stamp =
        if config.timing { SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0) } else { 0 };
    let rows: Vec<SummaryRow> = runner
        .report
        .criteria
        .iter()
        .map(|c| SummaryRow {
            timestamp_unix_s: stamp,
            suite: c.suite,
            criterion: &c.name,
            value: c.value,
            limit: c.limit,
            status: if c.pass { "pass" } else { "fail" },
            detail: &c.detail,
        })
        .collect();
    let path = config.output_dir.join("summary.csv");
    write_csv(&path, &rows)?;
    runner.report.files.push(path);
    Ok(runner.report)
}
