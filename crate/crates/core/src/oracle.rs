//! Finite-difference Sturm–Liouville eigensolvers for the radial and polar
//! equations, plus the per-state verification report.
//!
//! Nothing here calls the closed-form energy or separation-constant formulas;
//! those values enter only as comparison targets and to size the radial box.

pub mod tridiag;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::spectrum::{self, PhysicalConstants, PotentialParams, QuantumNumbers, SpectrumEntry};
use crate::wavefunctions::{AngularState, RadialState};
use tridiag::SymTridiag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
    #[error("gamma = {0} < 0 is outside the oracle's domain")]
    NegativeGamma(f64),
    #[error("eigenvalue {index} does not converge under refinement (differences {diffs:?})")]
    GridTooCoarse { index: usize, diffs: Vec<f64> },
    #[error("eigenvalue {index} oscillates under refinement (differences {diffs:?})")]
    SpectrumPollution { index: usize, diffs: Vec<f64> },
}

/// Uniform grid on `[x_min, x_max]`, refined by halving the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    /// Interior unknowns on the coarsest level.
    pub n_points: usize,
    pub refinement_levels: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, refinement_levels: usize) -> Result<Self, OracleError> {
        let g = Self { x_min, x_max, n_points, refinement_levels };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(OracleError::InvalidGrid(format!("need x_min < x_max, got [{}, {}]", self.x_min, self.x_max)));
        }
        if self.n_points < 64 {
            return Err(OracleError::InvalidGrid(format!("n_points = {} < 64", self.n_points)));
        }
        if self.refinement_levels < 2 {
            return Err(OracleError::InvalidGrid(format!("refinement_levels = {} < 2", self.refinement_levels)));
        }
        Ok(())
    }

    /// Radial box `[0, x_max]` with a step fine enough for the Coulomb scale `1/α`.
    pub fn radial(alpha: f64, x_max: f64) -> Self {
        let h = (0.05 / alpha).min(x_max / 4000.0);
        let n = ((x_max / h).ceil() as usize).max(64);
        Self { x_min: 0.0, x_max, n_points: n, refinement_levels: 3 }
    }

    /// Full polar interval `[0, π]`.
    pub fn angular() -> Self {
        Self { x_min: 0.0, x_max: PI, n_points: 1000, refinement_levels: 3 }
    }
}

/// Eigenvalues on every refinement level and their Richardson extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEigenResult {
    pub grid: GridSpec,
    /// Finest-level eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub richardson_estimates: Vec<f64>,
    pub est_error: Vec<f64>,
    /// `levels[j][i]`: eigenvalue `i` on refinement level `j`.
    pub levels: Vec<Vec<f64>>,
    /// Ratios of successive level differences per eigenvalue (≈ 4 for a
    /// second-order scheme).
    pub convergence_ratios: Vec<Vec<f64>>,
}

impl GridEigenResult {
    /// Eigenvalues below `threshold` on the finest level.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e < threshold).count()
    }
}

fn romberg(values: &[f64]) -> (f64, f64) {
    let mut prev = values.to_vec();
    let mut last = (values[values.len() - 1], (values[values.len() - 1] - values[values.len() - 2]).abs());
    for k in 1..values.len() {
        let factor = 4f64.powi(k as i32) - 1.0;
        let next: Vec<f64> = prev.windows(2).map(|w| w[1] + (w[1] - w[0]) / factor).collect();
        let best = next[next.len() - 1];
        last = (best, (best - prev[prev.len() - 1]).abs());
        prev = next;
    }
    last
}

/// Differences below `noise` are bisection round-off and are not judged.
fn check_convergence(index: usize, values: &[f64], noise: f64) -> Result<Vec<f64>, OracleError> {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let floor = noise.max(1e-11 * values[values.len() - 1].abs());
    let mut ratios = Vec::new();
    for w in diffs.windows(2) {
        let (d0, d1) = (w[0], w[1]);
        if d1.abs() <= floor {
            continue;
        }
        ratios.push(d0 / d1);
        if d0.abs() <= d1.abs() {
            if d0.signum() == d1.signum() {
                return Err(OracleError::GridTooCoarse { index, diffs });
            }
            return Err(OracleError::SpectrumPollution { index, diffs });
        }
    }
    Ok(ratios)
}

fn solve_levels<F>(grid: GridSpec, k_states: usize, build: F) -> Result<GridEigenResult, OracleError>
where
    F: Fn(usize) -> SymTridiag + Sync,
{
    grid.validate()?;
    if k_states == 0 {
        return Err(OracleError::InvalidInput("k_states must be positive".into()));
    }
    let solved: Vec<(Vec<f64>, f64)> = (0..grid.refinement_levels)
        .into_par_iter()
        .map(|j| {
            let m = build(j);
            let (lo, hi) = m.gershgorin();
            (m.lowest(k_states), lo.abs().max(hi.abs()))
        })
        .collect();
    let noise = 64.0 * f64::EPSILON * solved.iter().map(|s| s.1).fold(0.0, f64::max);
    let levels: Vec<Vec<f64>> = solved.into_iter().map(|s| s.0).collect();
    let mut richardson_estimates = Vec::with_capacity(k_states);
    let mut est_error = Vec::with_capacity(k_states);
    let mut convergence_ratios = Vec::with_capacity(k_states);
    for i in 0..k_states {
        let column: Vec<f64> = levels.iter().map(|l| l[i]).collect();
        convergence_ratios.push(check_convergence(i, &column, noise)?);
        let (value, err) = romberg(&column);
        richardson_estimates.push(value);
        est_error.push(err);
    }
    Ok(GridEigenResult {
        grid,
        eigenvalues: levels[levels.len() - 1].clone(),
        richardson_estimates,
        est_error,
        levels,
        convergence_ratios,
    })
}

/// Lowest `k_states` eigenvalues `e` of `−g″ + (γ/r² − α/r) g = e g` with
/// Dirichlet conditions at `x_min` and `x_max`.
pub fn radial_eigen(alpha: f64, gamma: f64, grid: GridSpec, k_states: usize) -> Result<GridEigenResult, OracleError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(OracleError::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if !(gamma >= 0.0) {
        return Err(OracleError::NegativeGamma(gamma));
    }
    if grid.x_min < 0.0 {
        return Err(OracleError::InvalidGrid(format!("radial x_min = {} < 0", grid.x_min)));
    }
    solve_levels(grid, k_states, |level| {
        let cells = (grid.n_points + 1) << level;
        let h = (grid.x_max - grid.x_min) / cells as f64;
        let inv_h2 = 1.0 / (h * h);
        let diag = (1..cells)
            .map(|i| {
                let r = grid.x_min + h * i as f64;
                2.0 * inv_h2 + gamma / (r * r) - alpha / r
            })
            .collect();
        SymTridiag::new(diag, vec![-inv_h2; cells - 2])
    })
}

/// Lowest `k_states` separation constants `Λ` of
/// `(sin θ H′)′ + [Λ sin θ − (m² + κ cos²θ)/sin θ] H = 0`, `κ = 2μβ/ħ²`.
///
/// Both poles are regular singular points with indicial exponent
/// `p = √(m² + κ)`; the solver writes `H = sin^p θ · u`, which leaves `u`
/// smooth, and discretizes the resulting self-adjoint problem for `u`
/// cell-centred with Dirichlet faces at `x_min` and `x_max`. Faces on a pole
/// carry zero flux weight, so the full interval `[0, π]` needs no truncation.
pub fn angular_eigen(
    m: u32,
    beta: f64,
    consts: &PhysicalConstants,
    grid: GridSpec,
    k_states: usize,
) -> Result<GridEigenResult, OracleError> {
    if !(beta >= 0.0) {
        return Err(OracleError::InvalidInput(format!("beta must be non-negative, got {beta}")));
    }
    if grid.x_min < 0.0 || grid.x_max > PI {
        return Err(OracleError::InvalidGrid(format!("polar grid [{}, {}] leaves [0, π]", grid.x_min, grid.x_max)));
    }
    let kappa = 2.0 * consts.mu * beta / (consts.hbar * consts.hbar);
    let m2 = f64::from(m * m);
    // (m² + κ cos²θ)/sin²θ, the term multiplying H after dividing by sin θ
    let centrifugal = move |t: f64| {
        let (s, c) = t.sin_cos();
        (m2 + kappa * c * c) / (s * s)
    };
    // sin²θ · centrifugal(θ) at the pole
    let p = (m2 + kappa).sqrt();
    solve_levels(grid, k_states, |level| {
        let n = grid.n_points << level;
        let h = (grid.x_max - grid.x_min) / n as f64;
        let inv_h2 = 1.0 / (h * h);
        let face = |i: usize| {
            let t = grid.x_min + h * i as f64;
            if t <= 0.0 || t >= PI { 0.0 } else { t.sin() }
        };
        let centre = |i: usize| (grid.x_min + h * (i as f64 + 0.5)).sin();
        // flux weight sin^{2p+1} at a face over the weight at cell centres
        let ratio = |f: f64, c2: f64| if f == 0.0 { 0.0 } else { (f * f / c2).powf(p + 0.5) };
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let t = grid.x_min + h * (i as f64 + 0.5);
            let (s, c) = t.sin_cos();
            // boundary faces are Dirichlet: ghost value −u doubles the face weight
            let left = ratio(face(i), s * s) * if i == 0 { 2.0 } else { 1.0 };
            let right = ratio(face(i + 1), s * s) * if i + 1 == n { 2.0 } else { 1.0 };
            let potential = centrifugal(t) - p * p * c * c / (s * s) + p;
            diag.push((left + right) * inv_h2 + potential);
        }
        let off = (1..n).map(|i| -ratio(face(i), centre(i - 1) * centre(i)) * inv_h2).collect();
        SymTridiag::new(diag, off)
    })
}

/// Maximum pointwise ODE residual and its normalizing scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 { self.max_abs / self.scale } else { self.max_abs }
    }
}

const FD_STEP: f64 = 1e-3;

fn d1(f: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = FD_STEP;
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn d2(f: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = FD_STEP;
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

fn sample(lo: f64, hi: f64, samples: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (samples - 1).max(1) as f64;
    (0..samples).map(move |i| lo + step * i as f64)
}

/// Residual of `g″ + (e + α/r − γ/r²) g = 0` on `samples` points of `[lo, hi]`.
pub fn radial_residual(g: impl Fn(f64) -> f64, e: f64, alpha: f64, gamma: f64, lo: f64, hi: f64, samples: usize) -> Residual {
    let (mut max_abs, mut max_g, mut max_coef) = (0.0f64, 0.0f64, 0.0f64);
    for r in sample(lo, hi, samples) {
        let coef = e + alpha / r - gamma / (r * r);
        let gv = g(r);
        max_abs = max_abs.max((d2(&g, r) + coef * gv).abs());
        max_g = max_g.max(gv.abs());
        max_coef = max_coef.max(1.0).max(e.abs()).max((alpha / r).abs()).max((gamma / (r * r)).abs());
    }
    Residual { max_abs, scale: max_g * max_coef }
}

/// Residual of `H″ + cot θ H′ + [Λ − (m² + κ cos²θ)/sin²θ] H = 0`.
pub fn angular_residual(h: impl Fn(f64) -> f64, lambda: f64, m: u32, kappa: f64, lo: f64, hi: f64, samples: usize) -> Residual {
    let m2 = f64::from(m * m);
    let (mut max_abs, mut max_h, mut max_coef) = (0.0f64, 0.0f64, 0.0f64);
    for t in sample(lo, hi, samples) {
        let (s, c) = t.sin_cos();
        let cot = c / s;
        let centrifugal = (m2 + kappa * c * c) / (s * s);
        let hv = h(t);
        let res = d2(&h, t) + cot * d1(&h, t) + (lambda - centrifugal) * hv;
        max_abs = max_abs.max(res.abs());
        max_h = max_h.max(hv.abs());
        max_coef = max_coef.max(1.0).max(cot.abs()).max(lambda.abs()).max(centrifugal);
    }
    Residual { max_abs, scale: max_h * max_coef }
}

/// Acceptance thresholds for [`verify_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative deviation of the radial eigenvalue `e = 2μ(E−c)/ħ²`.
    pub radial_rel: f64,
    /// Absolute deviation of the separation constant.
    pub angular_abs: f64,
    /// ODE residual relative to its scale.
    pub residual: f64,
    /// Deviation of norm integrals from 1.
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { radial_rel: 1e-4, angular_abs: 1e-4, residual: 1e-6, norm: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub error_estimate: f64,
    pub comparison: Comparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn compare(name: &str, value: f64, target: f64, tolerance: f64, error_estimate: f64, comparison: Comparison) -> Self {
        let dev = match comparison {
            Comparison::Absolute => (value - target).abs(),
            Comparison::Relative => (value - target).abs() / target.abs().max(f64::MIN_POSITIVE),
        };
        let status = if dev <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, value, target, tolerance, error_estimate, comparison, note: None }
    }

    fn failed(name: &str, target: f64, tolerance: f64, comparison: Comparison, note: String) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            value: f64::NAN,
            target,
            tolerance,
            error_estimate: f64::NAN,
            comparison,
            note: Some(note),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub state: QuantumNumbers,
    pub params: PotentialParams,
    pub consts: PhysicalConstants,
    pub target_energy: f64,
    /// `c + ħ² e / 2μ` from the radial oracle, when it ran.
    pub oracle_energy: Option<f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Residual sampling window and density.
const RADIAL_WINDOW: (f64, f64) = (0.1, 20.0);
const ANGULAR_WINDOW: (f64, f64) = (0.1, PI - 0.1);
const RESIDUAL_SAMPLES: usize = 400;

/// Verifies the closed-form state `q` against both oracles.
pub fn verify_state(
    params: &PotentialParams,
    consts: &PhysicalConstants,
    q: QuantumNumbers,
    tol: &Tolerances,
) -> Result<VerificationReport, spectrum::SpectrumError> {
    let entry = spectrum::energy(params, consts, q)?;
    Ok(verify_entry(params, consts, &entry, tol))
}

/// Verifies a given spectrum entry, which may have been altered (for
/// negative controls); the oracle results never depend on `entry.energy`.
pub fn verify_entry(params: &PotentialParams, consts: &PhysicalConstants, entry: &SpectrumEntry, tol: &Tolerances) -> VerificationReport {
    let q = entry.quantum;
    let k = 2.0 * consts.mu / (consts.hbar * consts.hbar);
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    if !(3..=5).contains(&params.dim) {
        notes.push(format!("D = {} is outside the oracle's validated range 3..=5", params.dim));
    }
    if entry.domain_extension {
        notes.push("parameters lie in the domain extension (negative b, c or separation constant)".into());
    }

    // Polar separation constant.
    let lambda_target = entry.eff.lambda;
    let angular = angular_eigen(q.magnetic, params.beta, consts, GridSpec::angular(), q.jacobi as usize + 1);
    let lambda_oracle = match &angular {
        Ok(res) => {
            let i = q.jacobi as usize;
            checks.push(Check::compare(
                "angular_eigenvalue",
                res.richardson_estimates[i],
                lambda_target,
                tol.angular_abs,
                res.est_error[i],
                Comparison::Absolute,
            ));
            Some((res.richardson_estimates[i], res.est_error[i]))
        }
        Err(e) => {
            checks.push(Check::failed("angular_eigenvalue", lambda_target, tol.angular_abs, Comparison::Absolute, e.to_string()));
            None
        }
    };

    // Radial eigenvalue, driven by the oracle's separation constant.
    let e_target = k * (entry.energy - params.c);
    let mut oracle_energy = None;
    match lambda_oracle {
        Some((lambda, lambda_err)) => {
            let d2 = f64::from(params.dim) - 2.0;
            let mut gamma = 0.25 * (d2 * d2 + 4.0 * lambda - 1.0) + k * params.b;
            // Λ carries the polar oracle's error; a γ within it of zero is zero
            if gamma < 0.0 && gamma.abs() <= lambda_err.max(1e-9) {
                notes.push(format!("gamma = {gamma:e} from the polar oracle rounded to 0"));
                gamma = 0.0;
            }
            let alpha = k * params.a;
            let x_max = radial_box(entry, params.dim);
            let n = q.radial as usize;
            match radial_eigen(alpha, gamma, GridSpec::radial(alpha, x_max), n + 1) {
                Ok(res) => {
                    oracle_energy = Some(params.c + res.richardson_estimates[n] / k);
                    checks.push(Check::compare(
                        "radial_eigenvalue",
                        res.richardson_estimates[n],
                        e_target,
                        tol.radial_rel,
                        res.est_error[n],
                        Comparison::Relative,
                    ));
                }
                Err(e) => checks.push(Check::failed("radial_eigenvalue", e_target, tol.radial_rel, Comparison::Relative, e.to_string())),
            }
        }
        None => checks.push(Check::failed(
            "radial_eigenvalue",
            e_target,
            tol.radial_rel,
            Comparison::Relative,
            "not run: no oracle separation constant".into(),
        )),
    }

    wavefunction_checks(params, consts, entry, tol, &mut checks, &mut notes);

    VerificationReport {
        state: q,
        params: *params,
        consts: *consts,
        target_energy: entry.energy,
        oracle_energy,
        checks,
        notes,
    }
}

fn radial_box(entry: &SpectrumEntry, dim: u32) -> f64 {
    let decay = 40.0 / entry.epsilon;
    match RadialState::new(entry.quantum.radial, entry.eff.big_l, entry.epsilon, dim) {
        Ok(state) => decay.max(state.cutoff()),
        Err(_) => decay,
    }
}

fn wavefunction_checks(
    params: &PotentialParams,
    consts: &PhysicalConstants,
    entry: &SpectrumEntry,
    tol: &Tolerances,
    checks: &mut Vec<Check>,
    notes: &mut Vec<String>,
) {
    let k = 2.0 * consts.mu / (consts.hbar * consts.hbar);
    let q = entry.quantum;
    match RadialState::from_entry(entry, params.dim) {
        Ok(radial) => {
            let e = -entry.epsilon * entry.epsilon;
            let res = radial_residual(
                |r| radial.reduced(r),
                e,
                entry.eff.alpha,
                entry.eff.gamma,
                RADIAL_WINDOW.0,
                RADIAL_WINDOW.1,
                RESIDUAL_SAMPLES,
            );
            checks.push(Check::compare("radial_residual", res.relative(), 0.0, tol.residual, res.max_abs, Comparison::Absolute));
            match radial.norm_integral() {
                Ok(v) => checks.push(Check::compare("radial_norm", v, 1.0, tol.norm, 0.0, Comparison::Absolute)),
                Err(err) => checks.push(Check::failed("radial_norm", 1.0, tol.norm, Comparison::Absolute, err.to_string())),
            }
        }
        Err(err) => {
            checks.push(Check::failed("radial_residual", 0.0, tol.residual, Comparison::Absolute, err.to_string()));
        }
    }
    match AngularState::from_entry(entry) {
        Ok(angular) => {
            let res = angular_residual(
                |t| angular.eval(t),
                entry.eff.lambda,
                q.magnetic,
                k * params.beta,
                ANGULAR_WINDOW.0,
                ANGULAR_WINDOW.1,
                RESIDUAL_SAMPLES,
            );
            checks.push(Check::compare("angular_residual", res.relative(), 0.0, tol.residual, res.max_abs, Comparison::Absolute));
            match angular.norm_integral() {
                Ok(v) => checks.push(Check::compare("angular_norm", v, 1.0, tol.norm, 0.0, Comparison::Absolute)),
                Err(err) => checks.push(Check::failed("angular_norm", 1.0, tol.norm, Comparison::Absolute, err.to_string())),
            }
            if angular.renormalized {
                notes.push(match angular.printed_norm_integral {
                    Some(i) => format!("printed polar prefactor gives norm {i}; renormalized by quadrature"),
                    None => "printed polar prefactor undefined (negative factorial argument); normalized by quadrature".into(),
                });
            }
        }
        Err(err) => checks.push(Check::failed("angular_residual", 0.0, tol.residual, Comparison::Absolute, err.to_string())),
    }
}
