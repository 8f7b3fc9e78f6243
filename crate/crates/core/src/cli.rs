//! Command-line driver.
//!
//! Settings come from an optional TOML file (`--config`) and are then
//! overridden by flags. Sweeps are written as CSV, single runs and
//! witness/certificate artifacts as JSON.
//!
//! CSV columns of `quantify`, in order:
//! `schema_version, family, p, q, g_value, d_min, verdict, mu_pi,
//! iterations, inner_calls, converged, asymptotic, k_bound, wall_seconds,
//! seed, v`, where `v` holds the witness coordinates in the published
//! operator convention separated by `;`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{basis_for, load_witness, xles_witness, WitnessFile, GWI_Q, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::oracle::{convex_roof_upper, OracleConfig};
use crate::outer::{assess_witness, maximize_witness, OuterConfig, WitnessResult};
use crate::qcore::{DensityMatrix, HermitianOp, C64};
use crate::states::{family_state, StateFamily};
use crate::symmetry::{commutant_basis, BasisId, SymBasis, SymmetryGroup};
use crate::verify::certify;

#[derive(Parser, Debug)]
#[command(name = "tritangle", version, about = "Convex-roof three-tangle of three-qubit mixed states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimal witness and certificate on a (p, q) grid.
    Quantify(QuantifyArgs),
    /// Certificate for a stored witness.
    Verify(VerifyArgs),
    /// Upper bound from the decomposition side.
    Oracle(OracleArgs),
    /// Repeat one point with growing coordinate bounds.
    SweepK(SweepKArgs),
    /// Data behind the surface and slice figures.
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gi,
    Gw,
    Gwi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// `T3` over the (p, q) simplex.
    Surface,
    /// Optimal against misleading witness along `q = 0.038`.
    Slice,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// W weight: a value, a list `a,b,c` or a range `start:stop:step`.
    #[arg(long)]
    pub p: Option<String>,
    /// Noise weight, same syntax as `--p`.
    #[arg(long)]
    pub q: Option<String>,
    /// Density matrix JSON file instead of a family.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// `gi`, `gw` or `custom` (needs `--generators`).
    #[arg(long)]
    pub basis: Option<String>,
    /// Symmetry generators JSON file.
    #[arg(long)]
    pub generators: Option<PathBuf>,
    #[arg(long)]
    pub k_bound: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, all cores when unset.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Number of inner local solvers.
    #[arg(long)]
    pub solvers: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file, stdout when unset.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QuantifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Write one witness JSON per grid point into this directory.
    #[arg(long)]
    pub witness_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Witness JSON path, `bundled:gi` or `bundled:xles:<p>`.
    #[arg(long)]
    pub witness: String,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of decomposition terms.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepKArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub k: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub figure: Figure,
    /// Grid points per axis for the surface.
    #[arg(long, default_value_t = 15)]
    pub n: usize,
}

/// Contents of the `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: Option<Family>,
    pub p: Option<String>,
    pub q: Option<String>,
    pub state: Option<PathBuf>,
    pub basis: Option<String>,
    pub generators: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub outer: OuterConfig,
    pub oracle: OracleConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// File settings (if any) overridden by flags.
    pub fn resolve(c: &Common) -> Result<Self> {
        let mut cfg = match &c.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if c.$f.is_some() { cfg.$f = c.$f.clone(); } )* };
        }
        take!(family, p, q, state, basis, generators, threshold, seed, threads, format, out);
        if let Some(k) = c.k_bound {
            cfg.outer.k_bound = k;
        }
        let split = &cfg.outer.inner.class_split;
        let n = c.solvers.unwrap_or(cfg.outer.inner.n_solvers);
        if c.solvers.is_some() || split.n_ghz + split.n_w != n {
            cfg.outer.inner = cfg.outer.inner.clone().with_solvers(n);
        }
        let seed = cfg.seed.unwrap_or(0);
        cfg.seed = Some(seed);
        cfg.outer.inner.seed = seed;
        cfg.oracle.seed = seed;
        if let Some(t) = cfg.threshold {
            if !(t > 0.0) {
                return Err(Error::Config(format!("threshold must be positive, got {t}")));
            }
        }
        cfg.outer.validate()?;
        cfg.oracle.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Certificate threshold: the explicit one, else `1e-5` for the
    /// GHZ/noise family and `1e-3` otherwise.
    pub fn threshold_for(&self, family: Option<Family>) -> f64 {
        self.threshold.unwrap_or(if family == Some(Family::Gi) { 1e-5 } else { 1e-3 })
    }
}

/// `start:stop:step` (inclusive), `a,b,c` or a single value.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{t}' in grid '{s}'")));
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.len() {
        1 => s.split(',').map(num).collect::<Result<Vec<_>>>()?,
        3 => {
            let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(h > 0.0) || b < a {
                return Err(Error::Config(format!("grid '{s}' needs start <= stop and step > 0")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            (0..=n).map(|i| round12(a + i as f64 * h)).collect()
        }
        _ => return Err(Error::Config(format!("grid '{s}' is neither start:stop:step nor a list"))),
    };
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("grid '{s}' has non-finite values")));
    }
    Ok(out)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Grid points for a family, in row-major `(p, q)` order.
pub fn family_points(family: Family, p: Option<&str>, q: Option<&str>) -> Result<Vec<StateFamily>> {
    let grid = |s: Option<&str>, name: &str| -> Result<Vec<f64>> {
        parse_grid(s.ok_or_else(|| Error::Config(format!("--{name} is required for this family")))?)
    };
    let pts: Vec<StateFamily> = match family {
        Family::Gi => grid(q, "q")?.into_iter().map(|q| StateFamily::Gi { q }).collect(),
        Family::Gw => grid(p, "p")?.into_iter().map(|p| StateFamily::Gw { p }).collect(),
        Family::Gwi => {
            let (ps, qs) = (grid(p, "p")?, grid(q, "q")?);
            ps.iter().flat_map(|&p| qs.iter().map(move |&q| StateFamily::Gwi { p, q })).collect()
        }
    };
    for f in &pts {
        let (p, q) = f.weights();
        if p < 0.0 || q < 0.0 || p + q > 1.0 + 1e-12 {
            return Err(Error::Config(format!("grid point (p, q) = ({p}, {q}) is outside the simplex")));
        }
    }
    Ok(pts)
}

/// Density matrix file: `{"matrix": [[[re, im], ...], ...]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// Symmetry generators file. Matrices are row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorsFile {
    pub name: String,
    #[serde(default)]
    pub finite: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub continuous: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<C64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("matrix must be square and nonempty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn matrix_to_pairs(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn load_state(path: &Path) -> Result<DensityMatrix> {
    let f: StateFile = read_json(path)?;
    DensityMatrix::new(HermitianOp::new(matrix_from_pairs(&f.matrix)?)?)
}

fn load_basis(cfg: &RunConfig, family: Option<Family>, id: Option<&BasisId>) -> Result<SymBasis> {
    let name = cfg.basis.clone().or_else(|| id.map(|b| match b {
        BasisId::Custom(_) => "custom".to_string(),
        other => other.to_string(),
    }));
    let name = match (name, family) {
        (Some(n), _) => n,
        (None, Some(Family::Gi)) => "gi".into(),
        (None, Some(_)) => "gw".into(),
        (None, None) => return Err(Error::Config("--basis is required with --state".into())),
    };
    match name.as_str() {
        "gi" => basis_for(BasisId::Gi),
        "gw" => basis_for(BasisId::Gw),
        "custom" => {
            let path = cfg.generators.as_ref().ok_or_else(|| Error::Config("custom basis needs --generators".into()))?;
            let g: GeneratorsFile = read_json(path)?;
            let finite = g.finite.iter().map(|m| matrix_from_pairs(m)).collect::<Result<Vec<_>>>()?;
            let cont = g
                .continuous
                .iter()
                .map(|m| HermitianOp::new(matrix_from_pairs(m)?))
                .collect::<Result<Vec<_>>>()?;
            let dim = finite.first().map(|m| m.nrows()).or(cont.first().map(|h| h.dim())).unwrap_or(8);
            commutant_basis(Arc::new(SymmetryGroup::new(&g.name, dim, finite, cont)?))
        }
        other => Err(Error::Config(format!("unknown basis '{other}'"))),
    }
}

/// A state to process with its grid coordinates.
struct Point {
    family: Option<StateFamily>,
    rho: DensityMatrix,
}

impl Point {
    fn weights(&self) -> (f64, f64) {
        self.family.map(|f| f.weights()).unwrap_or((f64::NAN, f64::NAN))
    }

    fn tag(&self) -> &'static str {
        self.family.map(|f| f.tag()).unwrap_or("state")
    }
}

fn points(cfg: &RunConfig) -> Result<Vec<Point>> {
    if let Some(path) = &cfg.state {
        return Ok(vec![Point { family: None, rho: load_state(path)? }]);
    }
    let family = cfg.family.ok_or_else(|| Error::Config("--family or --state is required".into()))?;
    family_points(family, cfg.p.as_deref(), cfg.q.as_deref())?
        .into_iter()
        .map(|f| Ok(Point { family: Some(f), rho: family_state(f)? }))
        .collect()
}

/// One row of `quantify` output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantifyRecord {
    pub schema_version: u32,
    pub family: String,
    pub p: f64,
    pub q: f64,
    pub g_value: f64,
    pub d_min: f64,
    pub verdict: String,
    pub mu_pi: f64,
    pub iterations: usize,
    pub inner_calls: usize,
    pub converged: bool,
    pub asymptotic: bool,
    pub k_bound: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    /// Witness coordinates, published convention.
    pub v: Vec<f64>,
    /// `X = Pi - mu_Pi I` as row-major `[re, im]` pairs (JSON only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_matrix: Option<Vec<Vec<[f64; 2]>>>,
}

pub const QUANTIFY_COLUMNS: [&str; 16] = [
    "schema_version",
    "family",
    "p",
    "q",
    "g_value",
    "d_min",
    "verdict",
    "mu_pi",
    "iterations",
    "inner_calls",
    "converged",
    "asymptotic",
    "k_bound",
    "wall_seconds",
    "seed",
    "v",
];

impl QuantifyRecord {
    fn new(pt: &Point, res: &WitnessResult, basis: &SymBasis, threshold: f64, seed: u64) -> Result<Self> {
        let cert = certify(res, threshold)?;
        let (p, q) = pt.weights();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            family: pt.tag().into(),
            p,
            q,
            g_value: res.g_value,
            d_min: res.d_min,
            verdict: cert.verdict.to_string(),
            mu_pi: res.mu_pi,
            iterations: res.iterations,
            inner_calls: res.inner_calls,
            converged: res.converged,
            asymptotic: res.asymptotic,
            k_bound: res.k_bound,
            wall_seconds: res.wall_seconds,
            seed,
            v: basis.to_published(&res.v).0,
            x_matrix: Some(matrix_to_pairs(res.witness(basis)?.matrix())),
        })
    }

    fn csv_row(&self) -> Vec<String> {
        let v = self.v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(";");
        vec![
            self.schema_version.to_string(),
            self.family.clone(),
            self.p.to_string(),
            self.q.to_string(),
            format!("{:.12}", self.g_value),
            format!("{:.6e}", self.d_min),
            self.verdict.clone(),
            format!("{:.12}", self.mu_pi),
            self.iterations.to_string(),
            self.inner_calls.to_string(),
            self.converged.to_string(),
            self.asymptotic.to_string(),
            self.k_bound.to_string(),
            format!("{:.3}", self.wall_seconds),
            self.seed.to_string(),
            v,
        ]
    }
}

/// Certificate written by `verify`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub schema_version: u32,
    pub family: String,
    pub p: f64,
    pub q: f64,
    pub basis: BasisId,
    pub g_value: f64,
    pub mu_pi: f64,
    /// `mu_Pi` stored in the witness file.
    pub mu_pi_file: f64,
    pub d_min: f64,
    pub verdict: String,
    pub threshold: f64,
    pub weights: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleRecord {
    pub schema_version: u32,
    pub family: String,
    pub p: f64,
    pub q: f64,
    pub upper_bound: f64,
    pub m: usize,
    pub starts: usize,
    pub best_start: usize,
    pub seed: u64,
    /// Nonzero terms of the best decomposition as `(weight, T3)` pairs.
    pub terms: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepKRecord {
    pub schema_version: u32,
    pub family: String,
    pub p: f64,
    pub q: f64,
    pub k_bound: f64,
    pub g_value: f64,
    pub d_min: f64,
    pub asymptotic: bool,
    pub seed: u64,
    /// Coordinates of `X`, published convention.
    pub x: Vec<f64>,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, records: &[T]) -> Result<()> {
    let mut w = sink(out)?;
    if records.len() == 1 {
        serde_json::to_writer_pretty(&mut w, &records[0])?;
    } else {
        serde_json::to_writer_pretty(&mut w, records)?;
    }
    writeln!(w)?;
    Ok(())
}

fn write_csv(out: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize a value row by row through its JSON form (flat records only).
fn flat_rows<T: Serialize>(records: &[T]) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        let serde_json::Value::Object(map) = serde_json::to_value(r)? else {
            return Err(Error::Config("record is not an object".into()));
        };
        if header.is_empty() {
            header = map.keys().cloned().collect();
        }
        rows.push(
            map.values()
                .map(|v| match v {
                    serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect(),
        );
    }
    Ok((header, rows))
}

fn emit<T: Serialize>(fmt: Format, out: Option<&Path>, records: &[T]) -> Result<()> {
    match fmt {
        Format::Json => write_json(out, records),
        Format::Csv => {
            let (h, rows) = flat_rows(records)?;
            let h: Vec<&str> = h.iter().map(String::as_str).collect();
            write_csv(out, &h, rows)
        }
    }
}

/// Results in grid order; on failure the successful prefix is kept and
/// the first error is returned alongside it. Nothing is kept if every point failed.
fn collect_ordered<T>(results: Vec<Result<T>>) -> Result<(Vec<T>, Option<Error>)> {
    let mut ok = Vec::new();
    let mut err = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) if err.is_none() => err = Some(e),
            Err(_) => {}
        }
    }
    match err {
        Some(e) if ok.is_empty() => Err(e),
        err => Ok((ok, err)),
    }
}

pub fn cmd_quantify(args: &QuantifyArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let pts = points(&cfg)?;
    let basis = load_basis(&cfg, cfg.family, None)?;
    let threshold = cfg.threshold_for(cfg.family);
    let seed = cfg.seed();
    let results = with_pool(cfg.threads, || {
        pts.par_iter()
            .map(|pt| {
                let res = maximize_witness(&pt.rho, &basis, &cfg.outer)?;
                if let Some(dir) = &args.witness_dir {
                    std::fs::create_dir_all(dir)?;
                    let (p, q) = pt.weights();
                    let path = dir.join(format!("witness_{}_p{p}_q{q}.json", pt.tag()));
                    std::fs::write(path, serde_json::to_string_pretty(&WitnessFile::from_result(&res, &basis))?)?;
                }
                QuantifyRecord::new(pt, &res, &basis, threshold, seed)
            })
            .collect::<Vec<_>>()
    })?;
    let (records, err) = collect_ordered(results)?;
    let fmt = cfg.format.unwrap_or(if records.len() == 1 { Format::Json } else { Format::Csv });
    match fmt {
        Format::Json => write_json(cfg.out.as_deref(), &records)?,
        Format::Csv => write_csv(cfg.out.as_deref(), &QUANTIFY_COLUMNS, records.iter().map(|r| r.csv_row()))?,
    }
    err.map_or(Ok(()), Err)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let wf = load_witness(&args.witness)?;
    let basis = load_basis(&cfg, cfg.family, Some(&wf.basis))?;
    if basis.id != wf.basis {
        return Err(Error::Config(format!("witness basis {} does not match selected basis {}", wf.basis, basis.id)));
    }
    let pts = points(&cfg)?;
    let threshold = cfg.threshold_for(cfg.family);
    let v = wf.internal_v(&basis)?;
    let mut outer = cfg.outer.clone();
    outer.k_bound = wf.k_bound;
    outer.warm_states = wf.candidates.clone();
    let results = with_pool(cfg.threads, || {
        pts.par_iter()
            .map(|pt| {
                let res = assess_witness(&pt.rho, &basis, &v, &outer)?;
                let cert = certify(&res, threshold)?;
                let (p, q) = pt.weights();
                Ok(CertificateRecord {
                    schema_version: SCHEMA_VERSION,
                    family: pt.tag().into(),
                    p,
                    q,
                    basis: wf.basis.clone(),
                    g_value: res.g_value,
                    mu_pi: res.mu_pi,
                    mu_pi_file: wf.mu_pi,
                    d_min: cert.d_min,
                    verdict: cert.verdict.to_string(),
                    threshold,
                    weights: cert.weights,
                    seed: cfg.seed(),
                })
            })
            .collect::<Vec<_>>()
    })?;
    let (records, err) = collect_ordered(results)?;
    emit(cfg.format.unwrap_or(Format::Json), cfg.out.as_deref(), &records)?;
    err.map_or(Ok(()), Err)
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    if args.m.is_some() {
        cfg.oracle.m = args.m;
    }
    if let Some(s) = args.starts {
        cfg.oracle.starts = s;
    }
    cfg.oracle.validate()?;
    let pts = points(&cfg)?;
    let results = with_pool(cfg.threads, || {
        pts.iter()
            .map(|pt| {
                let r = convex_roof_upper(&pt.rho, &cfg.oracle)?;
                let (p, q) = pt.weights();
                let terms = r
                    .terms
                    .iter()
                    .map(|(w, psi)| [*w, crate::measure::t3_pure(psi)])
                    .collect::<Vec<_>>();
                Ok(OracleRecord {
                    schema_version: SCHEMA_VERSION,
                    family: pt.tag().into(),
                    p,
                    q,
                    upper_bound: r.value,
                    m: r.params.m(),
                    starts: cfg.oracle.starts,
                    best_start: r.start,
                    seed: cfg.seed(),
                    terms,
                })
            })
            .collect::<Vec<_>>()
    })?;
    let (records, err) = collect_ordered(results)?;
    emit(cfg.format.unwrap_or(Format::Json), cfg.out.as_deref(), &records)?;
    err.map_or(Ok(()), Err)
}

pub fn cmd_sweep_k(args: &SweepKArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let pts = points(&cfg)?;
    let basis = load_basis(&cfg, cfg.family, None)?;
    let jobs: Vec<(&Point, f64)> = pts.iter().flat_map(|pt| args.k.iter().map(move |&k| (pt, k))).collect();
    let results = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(pt, k)| {
                let mut outer = cfg.outer.clone();
                outer.k_bound = k;
                let res = maximize_witness(&pt.rho, &basis, &outer)?;
                let (p, q) = pt.weights();
                Ok(SweepKRecord {
                    schema_version: SCHEMA_VERSION,
                    family: pt.tag().into(),
                    p,
                    q,
                    k_bound: k,
                    g_value: res.g_value,
                    d_min: res.d_min,
                    asymptotic: res.asymptotic,
                    seed: cfg.seed(),
                    x: basis.to_published(&res.x_coords(&basis)).0,
                })
            })
            .collect::<Vec<_>>()
    })?;
    let (records, err) = collect_ordered(results)?;
    emit(cfg.format.unwrap_or(Format::Csv), cfg.out.as_deref(), &records)?;
    err.map_or(Ok(()), Err)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub schema_version: u32,
    pub p: f64,
    pub q: f64,
    pub g_value: f64,
    pub d_min: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SliceRecord {
    pub schema_version: u32,
    pub p: f64,
    pub q: f64,
    pub g_opt: f64,
    pub d_min_opt: f64,
    pub g_les: f64,
    pub d_min_les: f64,
    pub seed: u64,
}

/// Points `(p, q)` of an `n x n` grid on `[0, 0.5]^2` with `p + q <= 1`.
pub fn surface_grid(n: usize) -> Vec<(f64, f64)> {
    let n = n.max(2);
    let h = 0.5 / (n - 1) as f64;
    (0..n).flat_map(|i| (0..n).map(move |j| (round12(i as f64 * h), round12(j as f64 * h)))).collect()
}

pub fn cmd_plotdata(args: &PlotArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let seed = cfg.seed();
    let out = cfg.out.as_deref();
    let fmt = cfg.format.unwrap_or(Format::Csv);
    let gw = basis_for(BasisId::Gw)?;
    match args.figure {
        Figure::Surface => {
            let grid = surface_grid(args.n);
            let results = with_pool(cfg.threads, || {
                grid.par_iter()
                    .map(|&(p, q)| {
                        let rho = family_state(StateFamily::Gwi { p, q })?;
                        let r = maximize_witness(&rho, &gw, &cfg.outer)?;
                        Ok(SurfaceRecord { schema_version: SCHEMA_VERSION, p, q, g_value: r.g_value, d_min: r.d_min, seed })
                    })
                    .collect::<Vec<_>>()
            })?;
            let (records, err) = collect_ordered(results)?;
            emit(fmt, out, &records)?;
            err.map_or(Ok(()), Err)
        }
        Figure::Slice => {
            let ps = match &cfg.p {
                Some(s) => parse_grid(s)?,
                None => parse_grid("0.01:0.05:0.005")?,
            };
            let q = match &cfg.q {
                Some(s) => parse_grid(s)?.first().copied().unwrap_or(GWI_Q),
                None => GWI_Q,
            };
            let results = with_pool(cfg.threads, || {
                ps.par_iter()
                    .map(|&p| {
                        let rho = family_state(StateFamily::Gwi { p, q })?;
                        let opt = maximize_witness(&rho, &gw, &cfg.outer)?;
                        let les = xles_witness(p, q, &cfg.outer)?;
                        Ok(SliceRecord {
                            schema_version: SCHEMA_VERSION,
                            p,
                            q,
                            g_opt: opt.g_value,
                            d_min_opt: opt.d_min,
                            g_les: les.g_value,
                            d_min_les: les.d_min,
                            seed,
                        })
                    })
                    .collect::<Vec<_>>()
            })?;
            let (records, err) = collect_ordered(results)?;
            emit(fmt, out, &records)?;
            err.map_or(Ok(()), Err)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Quantify(a) => cmd_quantify(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::SweepK(a) => cmd_sweep_k(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    }
}

/// Parse arguments, run, and map errors to exit codes.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
