//! Command-line front end: spectrum tables, density grids, oracle
//! verification and limiting-case regressions.
//!
//! Every option can also come from a flat JSON config file whose keys are the
//! flag names without dashes; flags win over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::oracle::{self, Tolerances, VerificationReport};
use crate::spectrum::{self, PhysicalConstants, PotentialParams, QuantumNumbers, SpectrumError};
use crate::wavefunctions::{BoundState, PhaseSign};

#[derive(Parser, Debug)]
#[command(name = "nu-ring", version, about = "Bound states of the pseudo-Coulomb plus ring-shaped potential in D dimensions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Coulomb strength in −a/r
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Inverse-square strength in b/r²
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Constant energy offset
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Ring-shaped strength in β cos²θ/(r² sin²θ)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Spatial dimension
    #[arg(long = "D", global = true)]
    pub dim: Option<u32>,
    /// Particle mass μ (default 1)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Reduced Planck constant ħ (default 1)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub hbar: Option<f64>,
    /// Radial quantum numbers, `lo..hi` inclusive or a single value
    #[arg(long = "N", global = true)]
    pub radial: Option<String>,
    /// Polar (Jacobi) quantum numbers
    #[arg(long = "n", global = true)]
    pub jacobi: Option<String>,
    /// Magnetic quantum numbers |m|
    #[arg(long = "m", global = true)]
    pub magnetic: Option<String>,
    /// Output format (verify defaults to json, the rest to csv)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat JSON object of option values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Energy table sorted by energy
    Spectrum,
    /// Sampled probability density of one state
    Wavefunction(WaveArgs),
    /// Check closed-form states against the finite-difference oracle
    Verify(VerifyArgs),
    /// Limiting-case formulas against the general spectrum
    Reduce(ReduceArgs),
}

#[derive(Args, Debug, Default)]
pub struct WaveArgs {
    /// Outer radius of the grid (default: where the radial density is 1e−8 of its peak)
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    /// Radial samples (default 100)
    #[arg(long = "r-points")]
    pub r_points: Option<usize>,
    /// Polar samples on [0, π] (default 50)
    #[arg(long = "theta-points")]
    pub theta_points: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    /// Shift the closed-form energy before checking (negative control)
    #[arg(long = "perturb-energy", allow_negative_numbers = true)]
    pub perturb_energy: Option<f64>,
    /// Relative tolerance on the radial eigenvalue (default 1e-4)
    #[arg(long = "radial-rel")]
    pub radial_rel: Option<f64>,
    /// Absolute tolerance on the separation constant (default 1e-4)
    #[arg(long = "angular-abs")]
    pub angular_abs: Option<f64>,
    /// Scaled ODE residual tolerance (default 1e-6)
    #[arg(long)]
    pub residual: Option<f64>,
    /// Normalization tolerance (default 1e-8)
    #[arg(long = "norm-tol")]
    pub norm_tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct ReduceArgs {
    /// Limiting case to check (required)
    #[arg(long, value_enum)]
    pub case: Option<ReduceCase>,
    /// Dissociation energies, comma separated
    #[arg(long = "De")]
    pub de: Option<String>,
    /// Equilibrium distances
    #[arg(long = "re")]
    pub re: Option<String>,
    /// Nuclear charges
    #[arg(long = "Z")]
    pub z: Option<String>,
    /// Elementary charges
    #[arg(long = "e-charge")]
    pub e_charge: Option<String>,
    /// Orbital quantum numbers (kratzer)
    #[arg(long)]
    pub ell: Option<String>,
    /// Ring strengths (cheng-dai, coulomb-ring)
    #[arg(long = "beta-grid")]
    pub beta_grid: Option<String>,
    /// Dimensions (ddim)
    #[arg(long)]
    pub dims: Option<String>,
    /// Scale every literal value by (1 + this) (negative control)
    #[arg(long = "perturb-literal", allow_negative_numbers = true)]
    pub perturb_literal: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReduceCase {
    ChengDai,
    Kratzer,
    Ddim,
    CoulombRing,
    All,
}

impl ReduceCase {
    fn name(self) -> &'static str {
        match self {
            Self::ChengDai => "cheng-dai",
            Self::Kratzer => "kratzer",
            Self::Ddim => "ddim",
            Self::CoulombRing => "coulomb-ring",
            Self::All => "all",
        }
    }
}

/// Inclusive range of quantum numbers; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QRange {
    pub lo: u32,
    pub hi: u32,
}

impl QRange {
    pub fn single(v: u32) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn iter(self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }

    pub fn is_single(self) -> bool {
        self.lo == self.hi
    }
}

impl fmt::Display for QRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl std::str::FromStr for QRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("expected a non-negative integer, got {t:?}"));
        match s.split_once("..") {
            Some((lo, hi)) => Ok(Self { lo: parse(lo)?, hi: parse(hi)? }),
            None => parse(s).map(Self::single),
        }
    }
}

/// One offending option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "--{}: {}", self.field, self.message)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "a", "b", "c", "beta", "D", "mu", "hbar", "N", "n", "m", "format", "out", "r-max", "r-points", "theta-points",
    "perturb-energy", "radial-rel", "angular-abs", "residual", "norm-tol", "case", "De", "re", "Z", "e-charge", "ell",
    "beta-grid", "dims", "perturb-literal",
];

/// Merges flag values over config-file values, collecting per-field errors.
struct Resolver {
    file: Map<String, Value>,
    errors: Vec<FieldError>,
}

impl Resolver {
    fn new(file: Map<String, Value>) -> Self {
        let mut errors = Vec::new();
        for key in file.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                errors.push(FieldError { field: key.clone(), message: "unknown key in config file".into() });
            }
        }
        Self { file, errors }
    }

    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError { field: field.into(), message: message.into() });
    }

    fn float(&mut self, key: &str, flag: Option<f64>, default: f64) -> f64 {
        if let Some(v) = flag {
            return v;
        }
        match self.file.get(key) {
            None => default,
            Some(Value::Number(n)) => n.as_f64().unwrap_or(default),
            Some(other) => {
                self.fail(key, format!("expected a number in config file, got {other}"));
                default
            }
        }
    }

    fn opt_float(&mut self, key: &str, flag: Option<f64>) -> Option<f64> {
        if flag.is_some() || self.file.contains_key(key) {
            Some(self.float(key, flag, f64::NAN))
        } else {
            None
        }
    }

    fn uint(&mut self, key: &str, flag: Option<u64>, default: u64) -> u64 {
        if let Some(v) = flag {
            return v;
        }
        match self.file.get(key) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(n) => n,
                None => {
                    self.fail(key, format!("expected a non-negative integer in config file, got {v}"));
                    default
                }
            },
        }
    }

    fn text(&mut self, key: &str, flag: Option<String>) -> Option<String> {
        if flag.is_some() {
            return flag;
        }
        match self.file.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            Some(Value::Array(items)) => Some(items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
            Some(other) => {
                self.fail(key, format!("expected a string in config file, got {other}"));
                None
            }
        }
    }

    fn range(&mut self, key: &str, flag: Option<String>, default: QRange) -> QRange {
        match self.text(key, flag) {
            None => default,
            Some(s) => s.parse().unwrap_or_else(|e| {
                self.fail(key, e);
                default
            }),
        }
    }

    fn list(&mut self, key: &str, flag: Option<String>, default: &[f64]) -> Vec<f64> {
        let Some(s) = self.text(key, flag) else {
            return default.to_vec();
        };
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.fail(key, format!("expected comma-separated numbers, got {item:?}"));
                    return default.to_vec();
                }
            }
        }
        if out.is_empty() {
            self.fail(key, "list is empty");
        }
        out
    }

    fn choice<T: ValueEnum>(&mut self, key: &str, flag: Option<T>) -> Option<T> {
        if flag.is_some() {
            return flag;
        }
        let s = self.text(key, None)?;
        match T::from_str(&s, false) {
            Ok(v) => Some(v),
            Err(_) => {
                let names: Vec<String> =
                    T::value_variants().iter().filter_map(|v| v.to_possible_value()).map(|p| p.get_name().to_string()).collect();
                self.fail(key, format!("expected one of {}, got {s:?}", names.join(", ")));
                None
            }
        }
    }
}

/// Fully resolved settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: PotentialParams,
    pub consts: PhysicalConstants,
    pub radial: QRange,
    pub jacobi: QRange,
    pub magnetic: QRange,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn states(&self) -> Vec<QuantumNumbers> {
        let mut v = Vec::new();
        for big_n in self.radial.iter() {
            for n in self.jacobi.iter() {
                for m in self.magnetic.iter() {
                    v.push(QuantumNumbers::new(big_n, n, m));
                }
            }
        }
        v
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn resolve_common(r: &mut Resolver, g: &GlobalArgs, default_range: QRange) -> RunConfig {
    let a = r.float("a", g.a, 1.0);
    let b = r.float("b", g.b, 0.0);
    let c = r.float("c", g.c, 0.0);
    let beta = r.float("beta", g.beta, 0.0);
    let dim = r.uint("D", g.dim.map(u64::from), 3);
    let mu = r.float("mu", g.mu, 1.0);
    let hbar = r.float("hbar", g.hbar, 1.0);
    for (key, v) in [("b", b), ("c", c)] {
        if !v.is_finite() {
            r.fail(key, format!("must be finite, got {v}"));
        }
    }
    for (key, v) in [("a", a), ("mu", mu), ("hbar", hbar)] {
        if !(v > 0.0 && v.is_finite()) {
            r.fail(key, format!("must be positive, got {v}"));
        }
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        r.fail("beta", format!("must be non-negative, got {beta}"));
    }
    if dim < 2 {
        r.fail("D", format!("must be at least 2, got {dim}"));
    }
    let radial = r.range("N", g.radial.clone(), default_range);
    let jacobi = r.range("n", g.jacobi.clone(), default_range);
    let magnetic = r.range("m", g.magnetic.clone(), default_range);
    let format = r.choice("format", g.format);
    let out = r.text("out", g.out.as_ref().map(|p| p.to_string_lossy().into_owned())).map(PathBuf::from);
    RunConfig {
        params: PotentialParams::new(a, b, c, beta, u32::try_from(dim).unwrap_or(u32::MAX)),
        consts: PhysicalConstants { mu, hbar },
        radial,
        jacobi,
        magnetic,
        format,
        out,
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(u64),
    Float(Option<f64>),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(Some(v)) => fmt_float(*v),
            Cell::Float(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_u64(*v),
            Cell::Float(Some(v)) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(_) => s.serialize_none(),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

/// Map that serializes its entries in insertion order.
#[derive(Debug, Clone, Default)]
struct Ordered(Vec<(String, Value)>);

impl Ordered {
    fn push(&mut self, key: &str, value: impl Serialize) {
        self.0.push((key.to_string(), serde_json::to_value(value).expect("meta values serialize")));
    }
}

impl Serialize for Ordered {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

struct Row<'a> {
    columns: &'a [String],
    cells: &'a [Cell],
}

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len()))?;
        for (k, v) in self.columns.iter().zip(self.cells) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Default)]
struct Table {
    meta: Ordered,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { meta: Ordered::default(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = String::new();
                for (k, v) in &self.meta.0 {
                    let text = match v {
                        Value::String(t) => t.clone(),
                        other => other.to_string(),
                    };
                    s.push_str(&format!("# {k}: {text}\n"));
                }
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<Row> = self.rows.iter().map(|cells| Row { columns: &self.columns, cells }).collect();
                let mut doc = Ordered::default();
                doc.0.push(("meta".into(), serde_json::to_value(&self.meta).expect("meta serializes")));
                doc.0.push(("rows".into(), serde_json::to_value(&rows).expect("rows serialize")));
                let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn common_meta(meta: &mut Ordered, command: &str, cfg: &RunConfig) {
    meta.push("command", command);
    meta.push("a", cfg.params.a);
    meta.push("b", cfg.params.b);
    meta.push("c", cfg.params.c);
    meta.push("beta", cfg.params.beta);
    meta.push("D", cfg.params.dim);
    meta.push("mu", cfg.consts.mu);
    meta.push("hbar", cfg.consts.hbar);
}

/// Result of one command: rendered output and process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub code: u8,
    /// Destination file; stdout when `None`.
    pub out: Option<PathBuf>,
}

/// Failure before any output was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Config(Vec<FieldError>),
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Outcome {
    let mut table = Table::new(&["N", "n", "m", "m_prime", "ell_prime", "L", "N_prime", "epsilon", "E", "status"]);
    common_meta(&mut table.meta, "spectrum", cfg);
    table.meta.push("N", cfg.radial.to_string());
    table.meta.push("n", cfg.jacobi.to_string());
    table.meta.push("m", cfg.magnetic.to_string());

    let mut bound = Vec::new();
    let mut rest = Vec::new();
    for q in cfg.states() {
        let base = [Cell::Int(q.radial.into()), Cell::Int(q.jacobi.into()), Cell::Int(q.magnetic.into())];
        match spectrum::energy(&cfg.params, &cfg.consts, q) {
            Ok(e) => {
                let status = if e.domain_extension { "domain-extension" } else { "ok" };
                let mut row = base.to_vec();
                row.extend([
                    Cell::Float(Some(e.eff.m_prime)),
                    Cell::Float(Some(e.eff.ell_prime)),
                    Cell::Float(Some(e.eff.big_l)),
                    Cell::Float(Some(e.eff.n_prime)),
                    Cell::Float(Some(e.epsilon)),
                    Cell::Float(Some(e.energy)),
                    Cell::Text(status.into()),
                ]);
                bound.push((e.energy, row));
            }
            Err(err) => {
                let mp = spectrum::m_prime(q.magnetic, cfg.params.beta, &cfg.consts);
                let lp = spectrum::ell_prime(q.jacobi, mp, cfg.params.dim);
                let status = match err {
                    SpectrumError::FallToCenter { .. } => "fall-to-center".to_string(),
                    SpectrumError::NoBoundState { .. } => "no-bound-state".to_string(),
                    other => format!("error: {other}"),
                };
                let mut row = base.to_vec();
                row.extend([
                    Cell::Float(Some(mp)),
                    Cell::Float(Some(lp)),
                    Cell::Float(None),
                    Cell::Float(None),
                    Cell::Float(None),
                    Cell::Float(None),
                    Cell::Text(status),
                ]);
                rest.push(row);
            }
        }
    }
    // stable: equal energies keep (N, n, m) order
    bound.sort_by(|x, y| x.0.total_cmp(&y.0));
    table.rows = bound.into_iter().map(|(_, r)| r).chain(rest).collect();
    Outcome { output: table.render(cfg.format_or(Format::Csv)), code: 0, out: None }
}

fn cmd_wavefunction(cfg: &RunConfig, args: &WaveArgs, r: &mut Resolver) -> Result<Outcome, CliError> {
    let r_max = r.opt_float("r-max", args.r_max);
    let r_points = r.uint("r-points", args.r_points.map(|v| v as u64), 100) as usize;
    let theta_points = r.uint("theta-points", args.theta_points.map(|v| v as u64), 50) as usize;
    for (key, v) in [("N", cfg.radial), ("n", cfg.jacobi), ("m", cfg.magnetic)] {
        if !v.is_single() {
            r.fail(key, format!("wavefunction needs a single value, got {v}"));
        }
    }
    if r_points < 2 {
        r.fail("r-points", format!("must be at least 2, got {r_points}"));
    }
    if theta_points < 2 {
        r.fail("theta-points", format!("must be at least 2, got {theta_points}"));
    }
    if let Some(v) = r_max {
        if !(v > 0.0 && v.is_finite()) {
            r.fail("r-max", format!("must be positive, got {v}"));
        }
    }
    let q = QuantumNumbers::new(cfg.radial.lo, cfg.jacobi.lo, cfg.magnetic.lo);
    let state = match BoundState::new(&cfg.params, &cfg.consts, q, PhaseSign::Plus) {
        Ok(s) => Some(s),
        Err(e) => {
            r.fail("N", format!("state (N, n, m) = ({}, {}, {}) has no wavefunction: {e}", q.radial, q.jacobi, q.magnetic));
            None
        }
    };
    let errors = std::mem::take(&mut r.errors);
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let state = state.expect("checked above");
    let entry = &state.entry;
    let power = 2.0 * entry.eff.big_l + 2.0 * f64::from(q.radial) + 2.0;
    let r_max = r_max.unwrap_or_else(|| crate::quadrature::radial_cutoff(entry.epsilon, power, 1e-8));

    let mut table = Table::new(&["r", "theta", "density"]);
    common_meta(&mut table.meta, "wavefunction", cfg);
    let meta = &mut table.meta;
    meta.push("N", q.radial);
    meta.push("n", q.jacobi);
    meta.push("m", q.magnetic);
    meta.push("m_prime", entry.eff.m_prime);
    meta.push("ell_prime", entry.eff.ell_prime);
    meta.push("L", entry.eff.big_l);
    meta.push("N_prime", entry.eff.n_prime);
    meta.push("epsilon", entry.epsilon);
    meta.push("E", entry.energy);
    meta.push("radial_norm", state.radial.norm);
    meta.push("polar_norm", state.angular.norm);
    meta.push("polar_renormalized", state.angular.renormalized);
    meta.push("domain_extension", entry.domain_extension);
    meta.push("r_max", r_max);
    meta.push("r_points", r_points);
    meta.push("theta_points", theta_points);
    meta.push("density", "|psi|^2 r^(D-1) sin(theta)");

    let dr = r_max / (r_points - 1) as f64;
    let dt = std::f64::consts::PI / (theta_points - 1) as f64;
    for i in 0..r_points {
        let rv = dr * i as f64;
        for j in 0..theta_points {
            // land exactly on the poles
            let t = if j + 1 == theta_points { std::f64::consts::PI } else { dt * j as f64 };
            let density = if j == 0 || j + 1 == theta_points { 0.0 } else { state.density(rv, t) };
            table.rows.push(vec![Cell::Float(Some(rv)), Cell::Float(Some(t)), Cell::Float(Some(density))]);
        }
    }
    Ok(Outcome { output: table.render(cfg.format_or(Format::Csv)), code: 0, out: None })
}

#[derive(Serialize)]
struct StateReport<'a> {
    passed: bool,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

#[derive(Serialize)]
struct SpectrumFailure {
    state: QuantumNumbers,
    passed: bool,
    error: String,
}

fn cmd_verify(cfg: &RunConfig, args: &VerifyArgs, r: &mut Resolver) -> Result<Outcome, CliError> {
    let defaults = Tolerances::default();
    let tol = Tolerances {
        radial_rel: r.float("radial-rel", args.radial_rel, defaults.radial_rel),
        angular_abs: r.float("angular-abs", args.angular_abs, defaults.angular_abs),
        residual: r.float("residual", args.residual, defaults.residual),
        norm: r.float("norm-tol", args.norm_tol, defaults.norm),
    };
    let perturb = r.float("perturb-energy", args.perturb_energy, 0.0);
    for (key, v) in [("radial-rel", tol.radial_rel), ("angular-abs", tol.angular_abs), ("residual", tol.residual), ("norm-tol", tol.norm)] {
        if !(v > 0.0 && v.is_finite()) {
            r.fail(key, format!("must be positive, got {v}"));
        }
    }
    if !perturb.is_finite() {
        r.fail("perturb-energy", format!("must be finite, got {perturb}"));
    }
    let errors = std::mem::take(&mut r.errors);
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }

    let states = cfg.states();
    let results: Vec<Result<VerificationReport, (QuantumNumbers, SpectrumError)>> = states
        .par_iter()
        .map(|&q| {
            let mut entry = spectrum::energy(&cfg.params, &cfg.consts, q).map_err(|e| (q, e))?;
            entry.energy += perturb;
            Ok(oracle::verify_entry(&cfg.params, &cfg.consts, &entry, &tol))
        })
        .collect();
    let all_passed = !results.is_empty() && results.iter().all(|r| matches!(r, Ok(rep) if rep.passed()));
    let code = if all_passed { 0 } else { 1 };

    let output = match cfg.format_or(Format::Json) {
        Format::Json => {
            let mut doc = Ordered::default();
            let mut meta = Ordered::default();
            common_meta(&mut meta, "verify", cfg);
            meta.push("N", cfg.radial.to_string());
            meta.push("n", cfg.jacobi.to_string());
            meta.push("m", cfg.magnetic.to_string());
            meta.push("tolerances", tol);
            meta.push("perturb_energy", perturb);
            doc.push("meta", meta);
            doc.push("passed", all_passed);
            let values: Vec<Value> = results
                .iter()
                .map(|res| match res {
                    Ok(rep) => serde_json::to_value(StateReport { passed: rep.passed(), report: rep }),
                    Err((q, e)) => serde_json::to_value(SpectrumFailure { state: *q, passed: false, error: e.to_string() }),
                })
                .collect::<Result<_, _>>()
                .expect("reports serialize");
            if values.len() == 1 {
                // single state: the report's fields sit at the top level
                if let Value::Object(map) = &values[0] {
                    for (k, v) in map {
                        if k != "passed" {
                            doc.0.push((k.clone(), v.clone()));
                        }
                    }
                }
            } else {
                doc.push("reports", values);
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut table = Table::new(&["N", "n", "m", "name", "status", "value", "target", "tolerance", "error_estimate", "note"]);
            common_meta(&mut table.meta, "verify", cfg);
            table.meta.push("passed", all_passed);
            for res in &results {
                match res {
                    Ok(rep) => {
                        let q = rep.state;
                        for c in &rep.checks {
                            table.rows.push(vec![
                                Cell::Int(q.radial.into()),
                                Cell::Int(q.jacobi.into()),
                                Cell::Int(q.magnetic.into()),
                                Cell::Text(c.name.clone()),
                                Cell::Text(if c.passed() { "pass" } else { "fail" }.into()),
                                Cell::Float(Some(c.value)),
                                Cell::Float(Some(c.target)),
                                Cell::Float(Some(c.tolerance)),
                                Cell::Float(Some(c.error_estimate)),
                                Cell::Text(c.note.clone().unwrap_or_default().replace(',', ";")),
                            ]);
                        }
                    }
                    Err((q, e)) => table.rows.push(vec![
                        Cell::Int(q.radial.into()),
                        Cell::Int(q.jacobi.into()),
                        Cell::Int(q.magnetic.into()),
                        Cell::Text("spectrum".into()),
                        Cell::Text("fail".into()),
                        Cell::Float(None),
                        Cell::Float(None),
                        Cell::Float(None),
                        Cell::Float(None),
                        Cell::Text(e.to_string().replace(',', ";")),
                    ]),
                }
            }
            table.render(Format::Csv)
        }
    };
    Ok(Outcome { output, code, out: None })
}

/// Relative agreement required between literal and general evaluations.
pub const REDUCE_TOL: f64 = 1e-12;

fn cmd_reduce(cfg: &RunConfig, args: &ReduceArgs, g: &GlobalArgs, r: &mut Resolver) -> Result<Outcome, CliError> {
    let case = r.choice("case", args.case);
    if case.is_none() && !r.errors.iter().any(|e| e.field == "case") {
        r.fail("case", "required: one of cheng-dai, kratzer, ddim, coulomb-ring, all");
    }
    let de = r.list("De", args.de.clone(), &[0.5, 1.0, 2.0]);
    let re = r.list("re", args.re.clone(), &[0.5, 1.0, 1.5]);
    let z = r.list("Z", args.z.clone(), &[1.0, 2.0, 3.0]);
    let e_charge = r.list("e-charge", args.e_charge.clone(), &[0.5, 1.0, 1.5]);
    let ell = r.list("ell", args.ell.clone(), &[0.0, 1.0, 2.0]);
    let beta_given = args.beta_grid.is_some() || r.file.contains_key("beta-grid");
    let beta_grid = r.list("beta-grid", args.beta_grid.clone(), &[0.0, 1.0, 2.0]);
    let dims = r.list("dims", args.dims.clone(), &[3.0, 4.0, 5.0]);
    let perturb = r.float("perturb-literal", args.perturb_literal, 0.0);

    for (key, list) in [("De", &de), ("re", &re), ("Z", &z), ("e-charge", &e_charge)] {
        if list.iter().any(|v| !(*v > 0.0)) {
            r.fail(key, "values must be positive");
        }
    }
    if beta_grid.iter().any(|v| !(*v >= 0.0)) {
        r.fail("beta-grid", "values must be non-negative");
    }
    if ell.iter().chain(&dims).any(|v| v.fract() != 0.0 || *v < 0.0) {
        let key = if ell.iter().any(|v| v.fract() != 0.0 || *v < 0.0) { "ell" } else { "dims" };
        r.fail(key, "values must be non-negative integers");
    }
    if dims.iter().any(|v| *v < 2.0) {
        r.fail("dims", "dimensions must be at least 2");
    }
    if !perturb.is_finite() {
        r.fail("perturb-literal", format!("must be finite, got {perturb}"));
    }
    if case == Some(ReduceCase::Kratzer) {
        let beta_flag = g.beta.is_some() || r.file.contains_key("beta");
        if beta_flag && cfg.params.beta != 0.0 {
            r.fail("beta", "the kratzer case has no ring term; beta must be 0");
        }
        if beta_given && beta_grid.iter().any(|v| *v != 0.0) {
            r.fail("beta-grid", "the kratzer case has no ring term; beta must be 0");
        }
    }
    let errors = std::mem::take(&mut r.errors);
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let case = case.expect("checked above");
    let cases: Vec<ReduceCase> = match case {
        ReduceCase::All => vec![ReduceCase::ChengDai, ReduceCase::Kratzer, ReduceCase::Ddim, ReduceCase::CoulombRing],
        c => vec![c],
    };

    let mut table = Table::new(&["case", "p1", "p2", "p3", "N", "n", "m", "literal", "general", "abs_diff", "rel_diff", "status"]);
    common_meta(&mut table.meta, "reduce", cfg);
    table.meta.push("case", case.name());
    table.meta.push("axes", axes_meta(&cases));
    table.meta.push("tolerance", REDUCE_TOL);
    table.meta.push("perturb_literal", perturb);

    let consts = cfg.consts;
    let states = cfg.states();
    let mut all_ok = true;
    let mut shells: BTreeMap<(String, u32), Vec<f64>> = BTreeMap::new();
    for &c in &cases {
        let (xs, ys, ws): (&[f64], &[f64], &[f64]) = match c {
            ReduceCase::ChengDai => (&de, &re, &beta_grid),
            ReduceCase::Kratzer => (&de, &re, &ell),
            ReduceCase::Ddim => (&de, &re, &dims),
            ReduceCase::CoulombRing => (&z, &e_charge, &beta_grid),
            ReduceCase::All => unreachable!(),
        };
        let kratzer_states: Vec<QuantumNumbers> = cfg.radial.iter().map(|big_n| QuantumNumbers::new(big_n, 0, 0)).collect();
        for &x in xs {
            for &y in ys {
                for &w in ws {
                    let qs = if c == ReduceCase::Kratzer { &kratzer_states } else { &states };
                    for &q in qs {
                        let (q_shown, result) = match c {
                            ReduceCase::ChengDai => (q, spectrum::reduce_cheng_dai(x, y, w, &consts, q)),
                            ReduceCase::Kratzer => {
                                let shown = QuantumNumbers::new(q.radial, w as u32, 0);
                                (shown, spectrum::reduce_kratzer(x, y, &consts, q.radial, w as u32))
                            }
                            ReduceCase::Ddim => (q, spectrum::reduce_ddim(x, y, cfg.params.beta, &consts, q, w as u32)),
                            ReduceCase::CoulombRing => (q, spectrum::reduce_coulomb_ring(x, y, w, &consts, q)),
                            ReduceCase::All => unreachable!(),
                        };
                        let mut row = vec![
                            Cell::Text(c.name().into()),
                            Cell::Float(Some(x)),
                            Cell::Float(Some(y)),
                            Cell::Float(Some(w)),
                            Cell::Int(q_shown.radial.into()),
                            Cell::Int(q_shown.jacobi.into()),
                            Cell::Int(q_shown.magnetic.into()),
                        ];
                        match result {
                            Ok(mut dp) => {
                                dp.literal *= 1.0 + perturb;
                                let ok = dp.abs_diff() <= REDUCE_TOL * dp.general.abs();
                                all_ok &= ok;
                                if c == ReduceCase::CoulombRing && w == 0.0 {
                                    let key = (format!("Z={x:?},e={y:?}"), q.radial + q.jacobi + q.magnetic);
                                    shells.entry(key).or_default().push(dp.general);
                                }
                                row.extend([
                                    Cell::Float(Some(dp.literal)),
                                    Cell::Float(Some(dp.general)),
                                    Cell::Float(Some(dp.abs_diff())),
                                    Cell::Float(Some(dp.rel_diff())),
                                    Cell::Text(if ok { "pass" } else { "fail" }.into()),
                                ]);
                            }
                            Err(e) => {
                                all_ok = false;
                                row.extend([
                                    Cell::Float(None),
                                    Cell::Float(None),
                                    Cell::Float(None),
                                    Cell::Float(None),
                                    Cell::Text(format!("error: {e}").replace(',', ";")),
                                ]);
                            }
                        }
                        table.rows.push(row);
                    }
                }
            }
        }
    }
    if !shells.is_empty() {
        let mut listing = Vec::new();
        for ((point, shell), energies) in &shells {
            let exact = energies.iter().all(|e| e.to_bits() == energies[0].to_bits());
            all_ok &= exact;
            listing.push(DegeneracyShell { point: point.clone(), shell: *shell, states: energies.len(), energy: energies[0], exact });
        }
        table.meta.push("coulomb_ring_degeneracy", listing);
    }
    table.meta.push("passed", all_ok);
    Ok(Outcome { output: table.render(cfg.format_or(Format::Csv)), code: if all_ok { 0 } else { 1 }, out: None })
}

#[derive(Serialize)]
struct DegeneracyShell {
    point: String,
    shell: u32,
    states: usize,
    energy: f64,
    exact: bool,
}

fn axes_meta(cases: &[ReduceCase]) -> BTreeMap<&'static str, [&'static str; 3]> {
    cases
        .iter()
        .map(|c| {
            let axes = match c {
                ReduceCase::ChengDai => ["De", "re", "beta"],
                ReduceCase::Kratzer => ["De", "re", "ell"],
                ReduceCase::Ddim => ["De", "re", "D"],
                ReduceCase::CoulombRing => ["Z", "e-charge", "beta"],
                ReduceCase::All => unreachable!(),
            };
            (c.name(), axes)
        })
        .collect()
}

fn load_config(path: &std::path::Path) -> Result<Map<String, Value>, FieldError> {
    let fail = |message: String| FieldError { field: "config".into(), message };
    let text = std::fs::read_to_string(path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(fail(format!("{} must hold a flat JSON object", path.display()))),
        Err(e) => Err(fail(format!("{} is not valid JSON: {e}", path.display()))),
    }
}

/// Resolves the configuration and runs the selected command.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let file = match &cli.global.config {
        Some(path) => load_config(path).map_err(|e| CliError::Config(vec![e]))?,
        None => Map::new(),
    };
    let mut r = Resolver::new(file);
    let default_range = match cli.command {
        Command::Reduce(_) => QRange { lo: 0, hi: 1 },
        _ => QRange::single(0),
    };
    let cfg = resolve_common(&mut r, &cli.global, default_range);
    let mut outcome = match &cli.command {
        Command::Spectrum => {
            let errors = std::mem::take(&mut r.errors);
            if !errors.is_empty() {
                return Err(CliError::Config(errors));
            }
            cmd_spectrum(&cfg)
        }
        Command::Wavefunction(args) => cmd_wavefunction(&cfg, args, &mut r)?,
        Command::Verify(args) => cmd_verify(&cfg, args, &mut r)?,
        Command::Reduce(args) => cmd_reduce(&cfg, args, &cli.global, &mut r)?,
    };
    outcome.out = cfg.out;
    Ok(outcome)
}

fn error_prefix(color: bool) -> &'static str {
    if color { "\x1b[1;31merror\x1b[0m" } else { "error" }
}

/// Full CLI run over `args`, writing to the given streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write, color: bool) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = if color { e.render().ansi().to_string() } else { e.render().to_string() };
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return u8::try_from(e.exit_code()).unwrap_or(2);
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let written = match &outcome.out {
                Some(path) => std::fs::write(path, &outcome.output).map_err(|e| format!("--out: cannot write {}: {e}", path.display())),
                None => stdout.write_all(outcome.output.as_bytes()).map_err(|e| format!("cannot write output: {e}")),
            };
            match written {
                Ok(()) => outcome.code,
                Err(msg) => {
                    let _ = writeln!(stderr, "{}: {msg}", error_prefix(color));
                    2
                }
            }
        }
        Err(CliError::Config(errors)) => {
            for e in errors {
                let _ = writeln!(stderr, "{}: {e}", error_prefix(color));
            }
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["nu-ring"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err, false);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn range_parsing() {
        assert_eq!("0..2".parse::<QRange>().unwrap(), QRange { lo: 0, hi: 2 });
        assert_eq!("3".parse::<QRange>().unwrap(), QRange::single(3));
        assert_eq!("2..1".parse::<QRange>().unwrap().iter().count(), 0);
        assert!("-1..2".parse::<QRange>().is_err());
        assert!("a".parse::<QRange>().is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -0.5, 1e-20, 123456789.123, 1.0 / 3.0, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn hydrogen_spectrum_table() {
        let (code, out, _) = run_ok(&["spectrum", "--a", "1", "--D", "3", "--N", "0..2", "--n", "0..2", "--m", "0..1"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 18);
        assert!(rows[0].starts_with("0,0,0,"));
        assert!(rows[0].contains(",-0.5,ok"));
    }

    #[test]
    fn empty_range_gives_empty_table() {
        let (code, out, _) = run_ok(&["spectrum", "--N", "1..0"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 1);
    }

    #[test]
    fn fall_to_center_row_is_flagged() {
        let (code, out, _) = run_ok(&["spectrum", "--b", "-1", "--format", "json"]);
        assert_eq!(code, 0);
        let doc: Value = serde_json::from_str(&out).unwrap();
        let row = &doc["rows"][0];
        assert_eq!(row["status"], "fall-to-center");
        assert!(row["E"].is_null());
    }

    #[test]
    fn config_errors_one_line_each() {
        let (code, out, err) = run_ok(&["spectrum", "--a", "-1", "--mu", "0", "--beta", "-2"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        let lines: Vec<&str> = err.lines().collect();
        assert_eq!(lines.len(), 3, "{err}");
        assert!(lines.iter().all(|l| l.starts_with("error: --")));
        assert!(!err.contains('\x1b'));
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"a": 2.0, "N": "0..1", "format": "json"}"#).unwrap();
        let p = path.to_str().unwrap();
        let (code, out, _) = run_ok(&["spectrum", "--config", p]);
        assert_eq!(code, 0);
        let doc: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["meta"]["a"], 2.0);
        assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
        let (_, out, _) = run_ok(&["spectrum", "--config", p, "--a", "3"]);
        let doc: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["meta"]["a"], 3.0);

        std::fs::write(&path, r#"{"a": "x", "bogus": 1}"#).unwrap();
        let (code, _, err) = run_ok(&["spectrum", "--config", p]);
        assert_eq!(code, 2);
        assert_eq!(err.lines().count(), 2, "{err}");
    }

    #[test]
    fn kratzer_rejects_ring_term() {
        let (code, _, err) = run_ok(&["reduce", "--case", "kratzer", "--beta", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("--beta"), "{err}");
    }

    #[test]
    fn reduce_cases_pass_and_negative_control_fails() {
        let (code, out, _) = run_ok(&["reduce", "--case", "all"]);
        assert_eq!(code, 0, "{out}");
        let (code, _, _) = run_ok(&["reduce", "--case", "cheng-dai", "--perturb-literal", "1e-6"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn missing_case_is_config_error() {
        let (code, _, err) = run_ok(&["reduce"]);
        assert_eq!(code, 2);
        assert!(err.contains("--case"));
    }
}
