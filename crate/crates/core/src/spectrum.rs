//! Bound-state spectrum of `V = −a/r + b/r² + β cos²θ/(r² sin²θ) + c` in `D`
//! dimensions.
//!
//! The azimuthal and polar equations produce the effective indices `m′` and
//! `ℓ′`, which feed the separation constant `Λ` of the radial equation
//! `g'' + [2μ(E−c)/ħ² + α/r − γ/r²] g = 0`. The radial problem is
//! hydrogen-like, so every level has the Coulombic form `c − μa²/(2ħ²N′²)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("4*gamma + 1 = {disc} < 0: fall to the center")]
    FallToCenter { disc: f64 },
    #[error("no bound state: the Coulomb strength a must be positive (got {a})")]
    NoBoundState { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub mu: f64,
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { mu: 1.0, hbar: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(mu: f64, hbar: f64) -> Result<Self, SpectrumError> {
        let c = Self { mu, hbar };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(SpectrumError::InvalidParams {
                field: "mu",
                reason: format!("must be positive and finite, got {}", self.mu),
            });
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(SpectrumError::InvalidParams {
                field: "hbar",
                reason: format!("must be positive and finite, got {}", self.hbar),
            });
        }
        Ok(())
    }

    /// `2μ/ħ²`, the factor turning energies into squared wavenumbers.
    pub fn two_mu_over_hbar2(&self) -> f64 {
        2.0 * self.mu / (self.hbar * self.hbar)
    }
}

/// Strengths of the four potential terms and the space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub beta: f64,
    pub dim: u32,
}

impl PotentialParams {
    pub fn new(a: f64, b: f64, c: f64, beta: f64, dim: u32) -> Self {
        Self { a, b, c, beta, dim }
    }

    /// Pure Coulomb in three dimensions.
    pub fn coulomb(a: f64) -> Self {
        Self::new(a, 0.0, 0.0, 0.0, 3)
    }

    /// Checks finiteness, `β ≥ 0` and `D ≥ 2`. Negative `b` or `c` are
    /// accepted and later flagged as a domain extension.
    pub fn validate(&self) -> Result<(), SpectrumError> {
        for (field, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("beta", self.beta)] {
            if !v.is_finite() {
                return Err(SpectrumError::InvalidParams {
                    field,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.beta < 0.0 {
            return Err(SpectrumError::InvalidParams {
                field: "beta",
                reason: format!("must be non-negative, got {}", self.beta),
            });
        }
        if self.dim < 2 {
            return Err(SpectrumError::InvalidParams {
                field: "D",
                reason: format!("dimension must be at least 2, got {}", self.dim),
            });
        }
        Ok(())
    }
}

/// Radial index `N`, Jacobi index `n` and magnetic index `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub radial: u32,
    pub jacobi: u32,
    pub magnetic: u32,
}

impl QuantumNumbers {
    pub fn new(radial: u32, jacobi: u32, magnetic: u32) -> Self {
        Self { radial, jacobi, magnetic }
    }
}

/// Derived, generally non-integer, indices of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveIndices {
    pub m_prime: f64,
    pub ell_prime: f64,
    /// Separation constant `ℓ(ℓ+D−2)` shared by the polar and radial equations.
    pub lambda: f64,
    /// Real root `ℓ ≥ −(D−2)/2` of `ℓ(ℓ+D−2) = Λ`, when it exists.
    pub ell: Option<f64>,
    pub big_m: Option<f64>,
    pub nu_tilde: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub big_l: f64,
    pub n_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub energy: f64,
    pub epsilon: f64,
    pub quantum: QuantumNumbers,
    pub eff: EffectiveIndices,
    /// 2 for `m > 0` (the `±m` pair shares the energy), 1 for `m = 0`.
    pub m_degeneracy: u8,
    /// Set when `b < 0`, `c < 0` or `Λ < 0`.
    pub domain_extension: bool,
}

/// `m′ = √(m² + 2μβ/ħ²)`.
pub fn m_prime(m: u32, beta: f64, consts: &PhysicalConstants) -> f64 {
    let m = f64::from(m);
    (m * m + consts.two_mu_over_hbar2() * beta).sqrt()
}

/// `ℓ′ = −(D−2)/2 + ½√((D−2)² + 4(n+m′)(n+m′+1))`.
pub fn ell_prime(n: u32, m_prime: f64, dim: u32) -> f64 {
    let d2 = f64::from(dim) - 2.0;
    let j = f64::from(n) + m_prime;
    -0.5 * d2 + 0.5 * (d2 * d2 + 4.0 * j * (j + 1.0)).sqrt()
}

/// Inverse of [`ell_prime`]: `n = −(1+2m′)/2 + ½√((2ℓ′+1)² + 4ℓ′(D−3))`.
pub fn jacobi_index(ell_prime: f64, m_prime: f64, dim: u32) -> f64 {
    let d3 = f64::from(dim) - 3.0;
    let t = 2.0 * ell_prime + 1.0;
    -0.5 * (1.0 + 2.0 * m_prime) + 0.5 * (t * t + 4.0 * ell_prime * d3).sqrt()
}

/// `Λ = ℓ′(ℓ′+D−2) − 2μβ/ħ²`.
pub fn separation_constant(ell_prime: f64, dim: u32, beta: f64, consts: &PhysicalConstants) -> f64 {
    let d2 = f64::from(dim) - 2.0;
    ell_prime * (ell_prime + d2) - consts.two_mu_over_hbar2() * beta
}

/// The root `ℓ ≥ −(D−2)/2` of `ℓ(ℓ+D−2) = Λ`, if real.
pub fn orbital_ell(lambda: f64, dim: u32) -> Option<f64> {
    let d2 = f64::from(dim) - 2.0;
    let disc = d2 * d2 + 4.0 * lambda;
    (disc >= 0.0).then(|| -0.5 * d2 + 0.5 * disc.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialParams {
    pub alpha: f64,
    pub gamma: f64,
    pub nu_tilde: f64,
    pub big_m: Option<f64>,
}

/// Coefficients of `g'' + [e + α/r − γ/r²] g = 0` for separation constant `Λ`.
pub fn radial_params(params: &PotentialParams, consts: &PhysicalConstants, lambda: f64) -> Result<RadialParams, SpectrumError> {
    let k = consts.two_mu_over_hbar2();
    let d2 = f64::from(params.dim) - 2.0;
    let nu_tilde = 0.25 * (d2 * d2 + 4.0 * lambda - 1.0);
    let gamma = nu_tilde + k * params.b;
    let disc = 4.0 * gamma + 1.0;
    if disc < 0.0 {
        return Err(SpectrumError::FallToCenter { disc });
    }
    Ok(RadialParams {
        alpha: k * params.a,
        gamma,
        nu_tilde,
        big_m: orbital_ell(lambda, params.dim).map(|ell| f64::from(params.dim) + 2.0 * ell),
    })
}

/// Effective indices of state `q`, without the energy.
pub fn effective_indices(params: &PotentialParams, consts: &PhysicalConstants, q: QuantumNumbers) -> Result<EffectiveIndices, SpectrumError> {
    params.validate()?;
    consts.validate()?;
    let mp = m_prime(q.magnetic, params.beta, consts);
    let lp = ell_prime(q.jacobi, mp, params.dim);
    let lambda = separation_constant(lp, params.dim, params.beta, consts);
    let rp = radial_params(params, consts, lambda)?;
    let big_l = big_l(params, consts, lp);
    Ok(EffectiveIndices {
        m_prime: mp,
        ell_prime: lp,
        lambda,
        ell: orbital_ell(lambda, params.dim),
        big_m: rp.big_m,
        nu_tilde: rp.nu_tilde,
        gamma: rp.gamma,
        alpha: rp.alpha,
        big_l,
        n_prime: f64::from(q.radial) + big_l + 1.0,
    })
}

/// `L = ½[√((D−2)² + 4ℓ′(ℓ′+D−2) + 8μ(b−β)/ħ²) − 1]`.
fn big_l(params: &PotentialParams, consts: &PhysicalConstants, ell_prime: f64) -> f64 {
    let d2 = f64::from(params.dim) - 2.0;
    let k = consts.two_mu_over_hbar2();
    let inner = d2 * d2 + 4.0 * ell_prime * (ell_prime + d2) + 4.0 * k * (params.b - params.beta);
    0.5 * (inner.sqrt() - 1.0)
}

/// Bound-state energy of `q`, evaluated as
/// `E = c − (2μa²/ħ²) / (2N + 1 + √((M−1)(M−3) + 8μb/ħ² + 1))²`
/// with `(M−1)(M−3)` rewritten through `ℓ′`.
pub fn energy(params: &PotentialParams, consts: &PhysicalConstants, q: QuantumNumbers) -> Result<SpectrumEntry, SpectrumError> {
    let eff = effective_indices(params, consts, q)?;
    if !(params.a > 0.0) {
        return Err(SpectrumError::NoBoundState { a: params.a });
    }
    let k = consts.two_mu_over_hbar2();
    let d2 = f64::from(params.dim) - 2.0;
    let m1m3 = d2 * d2 + 4.0 * eff.ell_prime * (eff.ell_prime + d2) - 4.0 * k * params.beta - 1.0;
    let inner = m1m3 + 4.0 * k * params.b + 1.0;
    let denom = 2.0 * f64::from(q.radial) + 1.0 + inner.sqrt();
    let energy = params.c - k * params.a * params.a / (denom * denom);
    let epsilon = consts.mu * params.a / (consts.hbar * consts.hbar * eff.n_prime);
    Ok(SpectrumEntry {
        energy,
        epsilon,
        quantum: q,
        eff,
        m_degeneracy: if q.magnetic == 0 { 1 } else { 2 },
        domain_extension: params.b < 0.0 || params.c < 0.0 || eff.lambda < 0.0,
    })
}

/// Coulombic form `E = c − μa²/(2ħ²N′²)`, `N′ = N + L + 1`.
pub fn energy_coulombic(params: &PotentialParams, consts: &PhysicalConstants, q: QuantumNumbers) -> Result<f64, SpectrumError> {
    let eff = effective_indices(params, consts, q)?;
    if !(params.a > 0.0) {
        return Err(SpectrumError::NoBoundState { a: params.a });
    }
    let np = eff.n_prime;
    Ok(params.c - consts.mu * params.a * params.a / (2.0 * consts.hbar * consts.hbar * np * np))
}

/// A literal transcription of a limiting-case formula next to the general
/// evaluation with the substituted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualPath {
    pub literal: f64,
    pub general: f64,
}

impl DualPath {
    pub fn abs_diff(&self) -> f64 {
        (self.literal - self.general).abs()
    }

    pub fn rel_diff(&self) -> f64 {
        let scale = self.general.abs();
        if scale == 0.0 {
            self.abs_diff()
        } else {
            self.abs_diff() / scale
        }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<(), SpectrumError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SpectrumError::InvalidParams {
            field,
            reason: format!("must be positive, got {v}"),
        })
    }
}

/// Kratzer-type substitution `a = 2Dₑrₑ`, `b = Dₑrₑ²`, `c = Dₑ`.
pub fn kratzer_params(de: f64, re: f64, beta: f64, dim: u32) -> PotentialParams {
    PotentialParams::new(2.0 * de * re, de * re * re, de, beta, dim)
}

/// Modified Kratzer plus ring-shaped potential in three dimensions.
pub fn reduce_cheng_dai(de: f64, re: f64, beta: f64, consts: &PhysicalConstants, q: QuantumNumbers) -> Result<DualPath, SpectrumError> {
    check_positive("De", de)?;
    check_positive("re", re)?;
    let general = energy(&kratzer_params(de, re, beta, 3), consts, q)?.energy;
    let mu_h = consts.mu / (consts.hbar * consts.hbar);
    let (n, m, big_n) = (f64::from(q.jacobi), f64::from(q.magnetic), f64::from(q.radial));
    let root = (2.0 * n + 1.0).powi(2)
        + 4.0 * m * m
        + 4.0 * (2.0 * n + 1.0) * (m * m + 2.0 * mu_h * beta).sqrt()
        + 8.0 * mu_h * de * re * re;
    let denom = 2.0 * big_n + 1.0 + root.sqrt();
    let literal = de - 8.0 * mu_h * de * de * re * re / (denom * denom);
    Ok(DualPath { literal, general })
}

/// Modified Kratzer potential (`β = 0`, `D = 3`) for radial index `N` and
/// integer angular momentum `ℓ`.
pub fn reduce_kratzer(de: f64, re: f64, consts: &PhysicalConstants, radial: u32, ell: u32) -> Result<DualPath, SpectrumError> {
    check_positive("De", de)?;
    check_positive("re", re)?;
    // At D = 3 and β = 0, ℓ′ = n + m, so (n, m) = (ℓ, 0) gives ℓ′ = ℓ.
    let general = energy(&kratzer_params(de, re, 0.0, 3), consts, QuantumNumbers::new(radial, ell, 0))?.energy;
    let mu_h = consts.mu / (consts.hbar * consts.hbar);
    let b = de * re * re;
    let l = f64::from(ell);
    let denom = 1.0 + 2.0 * f64::from(radial) + (1.0 + 4.0 * l * (l + 1.0) + 8.0 * mu_h * b).sqrt();
    let literal = de - 8.0 * mu_h * de * de * re * re / (denom * denom);
    Ok(DualPath { literal, general })
}

/// Kratzer plus ring-shaped potential in `D` dimensions.
pub fn reduce_ddim(de: f64, re: f64, beta: f64, consts: &PhysicalConstants, q: QuantumNumbers, dim: u32) -> Result<DualPath, SpectrumError> {
    check_positive("De", de)?;
    check_positive("re", re)?;
    let general = energy(&kratzer_params(de, re, beta, dim), consts, q)?.energy;
    let mu_h = consts.mu / (consts.hbar * consts.hbar);
    let d2 = f64::from(dim) - 2.0;
    let lp = ell_prime(q.jacobi, m_prime(q.magnetic, beta, consts), dim);
    let root = d2 * d2 + 4.0 * lp * (lp + d2) + 8.0 * mu_h * (de * re * re - beta);
    let denom = 2.0 * f64::from(q.radial) + 1.0 + root.sqrt();
    let literal = de - 8.0 * mu_h * de * de * re * re / (denom * denom);
    Ok(DualPath { literal, general })
}

/// Coulomb plus ring-shaped potential: `a = Ze²`, `b = c = 0`, `D = 3`.
pub fn reduce_coulomb_ring(z: f64, e_charge: f64, beta: f64, consts: &PhysicalConstants, q: QuantumNumbers) -> Result<DualPath, SpectrumError> {
    check_positive("Z", z)?;
    check_positive("e", e_charge)?;
    let e2 = e_charge * e_charge;
    let general = energy(&PotentialParams::new(z * e2, 0.0, 0.0, beta, 3), consts, q)?.energy;
    let mu_h = consts.mu / (consts.hbar * consts.hbar);
    let (n, m) = (f64::from(q.jacobi), f64::from(q.magnetic));
    let mp = (m * m + 2.0 * mu_h * beta).sqrt();
    let inner = 1.0 + 4.0 * ((n + mp) * (n + mp + 1.0) - 2.0 * mu_h * beta);
    let denom = 2.0 * f64::from(q.radial) + 1.0 + inner.sqrt();
    let literal = -2.0 * mu_h * z * z * e2 * e2 / (denom * denom);
    Ok(DualPath { literal, general })
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: PhysicalConstants = PhysicalConstants { mu: 1.0, hbar: 1.0 };

    #[test]
    fn m_prime_examples() {
        assert_eq!(m_prime(4, 0.0, &UNIT), 4.0);
        assert_eq!(m_prime(3, 8.0, &UNIT), 5.0);
        assert_eq!(m_prime(0, 2.0, &UNIT), 2.0);
    }

    #[test]
    fn ell_prime_examples() {
        assert_eq!(ell_prime(0, 0.0, 3), 0.0);
        for n in 0..=5 {
            for m in 0..=5 {
                assert!((ell_prime(n, f64::from(m), 3) - f64::from(n + m)).abs() < 1e-12);
            }
        }
        let expected = (-3.0 + 57f64.sqrt()) / 2.0;
        assert!((ell_prime(1, 2.0, 5) - expected).abs() < 1e-14);
        assert!((expected - 2.27492).abs() < 1e-5);
    }

    #[test]
    fn jacobi_index_examples() {
        assert_eq!(jacobi_index(0.0, 0.0, 3), 0.0);
        assert!((jacobi_index(3.0, 1.0, 3) - 2.0).abs() < 1e-14);
        let lp = ell_prime(2, 1.5, 6);
        assert!((jacobi_index(lp, 1.5, 6) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn separation_constant_examples() {
        let mp = m_prime(0, 2.0, &UNIT);
        let lp = ell_prime(0, mp, 3);
        assert!((separation_constant(lp, 3, 2.0, &UNIT) - 2.0).abs() < 1e-13);
        let lp = ell_prime(1, 1.0, 4);
        assert!((separation_constant(lp, 4, 0.0, &UNIT) - 6.0).abs() < 1e-13);
        let lp = ell_prime(2, 0.0, 3);
        assert_eq!(separation_constant(lp, 3, 0.0, &UNIT), 6.0);
    }

    #[test]
    fn radial_params_examples() {
        let p = PotentialParams::new(1.5, 0.0, 0.0, 0.0, 3);
        let rp = radial_params(&p, &UNIT, 2.0).unwrap();
        assert_eq!(rp.gamma, 2.0);
        assert_eq!(rp.alpha, 3.0);

        let p = PotentialParams::new(1.0, 0.0, 0.0, 0.0, 5);
        let rp = radial_params(&p, &UNIT, 0.0).unwrap();
        assert_eq!(rp.big_m, Some(5.0));
        assert_eq!(rp.nu_tilde, 2.0);

        let p = PotentialParams::new(1.0, 1.0, 0.0, 0.0, 3);
        assert_eq!(radial_params(&p, &UNIT, 0.0).unwrap().gamma, 2.0);

        let p = PotentialParams::new(1.0, 0.0, 0.0, 0.0, 3);
        assert!(matches!(radial_params(&p, &UNIT, -1.0), Err(SpectrumError::FallToCenter { .. })));
    }

    #[test]
    fn hydrogen_levels() {
        let p = PotentialParams::coulomb(1.0);
        let e = energy(&p, &UNIT, QuantumNumbers::new(0, 0, 0)).unwrap();
        assert!((e.energy + 0.5).abs() < 1e-15);
        assert!((e.epsilon - 1.0).abs() < 1e-15);
        let e = energy(&p, &UNIT, QuantumNumbers::new(0, 1, 0)).unwrap();
        assert!((e.energy + 0.125).abs() < 1e-15);
        assert!(!e.domain_extension);
    }

    #[test]
    fn constant_shift_is_additive() {
        let q = QuantumNumbers::new(1, 2, 1);
        let base = PotentialParams::new(1.3, 0.4, 0.0, 0.7, 4);
        let shifted = PotentialParams { c: 2.5, ..base };
        let e0 = energy(&base, &UNIT, q).unwrap().energy;
        let e1 = energy(&shifted, &UNIT, q).unwrap().energy;
        assert!((e1 - e0 - 2.5).abs() < 1e-14);
    }

    #[test]
    fn bound_state_relation_holds() {
        let consts = PhysicalConstants::new(0.7, 1.3).unwrap();
        let p = PotentialParams::new(2.0, 0.5, 0.3, 1.1, 5);
        let e = energy(&p, &consts, QuantumNumbers::new(2, 1, 2)).unwrap();
        assert!(e.energy < p.c && e.epsilon > 0.0);
        let from_eps = p.c - consts.hbar.powi(2) * e.epsilon.powi(2) / (2.0 * consts.mu);
        assert!((from_eps - e.energy).abs() < 1e-14);
    }

    #[test]
    fn errors_and_flags() {
        let q = QuantumNumbers::new(0, 0, 0);
        assert!(matches!(
            energy(&PotentialParams::new(0.0, 0.0, 0.0, 0.0, 3), &UNIT, q),
            Err(SpectrumError::NoBoundState { .. })
        ));
        assert!(matches!(
            energy(&PotentialParams::new(1.0, 0.0, 0.0, 0.0, 1), &UNIT, q),
            Err(SpectrumError::InvalidParams { field: "D", .. })
        ));
        assert!(matches!(
            energy(&PotentialParams::new(1.0, 0.0, 0.0, -1.0, 3), &UNIT, q),
            Err(SpectrumError::InvalidParams { field: "beta", .. })
        ));
        assert!(matches!(
            energy(&PotentialParams::new(1.0, -1.0, 0.0, 0.0, 3), &UNIT, q),
            Err(SpectrumError::FallToCenter { .. })
        ));
        let e = energy(&PotentialParams::new(1.0, -0.1, -2.0, 0.0, 3), &UNIT, q).unwrap();
        assert!(e.domain_extension);
        assert!(PhysicalConstants::new(0.0, 1.0).is_err());
    }

    #[test]
    fn energy_increases_with_radial_index() {
        let p = PotentialParams::new(1.7, 0.3, 0.2, 0.9, 4);
        let mut last = f64::NEG_INFINITY;
        for big_n in 0..8 {
            let e = energy(&p, &UNIT, QuantumNumbers::new(big_n, 1, 1)).unwrap().energy;
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn reductions_agree_on_examples() {
        let q0 = QuantumNumbers::new(0, 0, 0);
        let r = reduce_cheng_dai(1.0, 1.0, 0.0, &UNIT, q0).unwrap();
        assert!(r.rel_diff() <= 1e-12);
        let r = reduce_cheng_dai(1.0, 1.0, 2.0, &UNIT, q0).unwrap();
        assert!(r.rel_diff() <= 1e-12);
        let r = reduce_kratzer(2.0, 1.0, &UNIT, 1, 1).unwrap();
        assert!(r.rel_diff() <= 1e-12);
        let k = reduce_kratzer(1.0, 1.0, &UNIT, 0, 0).unwrap();
        let cd = reduce_cheng_dai(1.0, 1.0, 0.0, &UNIT, q0).unwrap();
        assert_eq!(k.general, cd.general);
        for (dim, beta) in [(3, 0.0), (5, 1.0), (4, 2.0)] {
            let r = reduce_ddim(1.2, 0.8, beta, &UNIT, QuantumNumbers::new(1, 1, 1), dim).unwrap();
            assert!(r.rel_diff() <= 1e-12, "{r:?}");
        }
        let r = reduce_coulomb_ring(1.0, 1.0, 0.0, &UNIT, q0).unwrap();
        assert!((r.literal + 0.5).abs() < 1e-15 && (r.general + 0.5).abs() < 1e-15);
    }

    #[test]
    fn vanishing_kratzer_depth() {
        let r = reduce_kratzer(1e-12, 1.0, &UNIT, 0, 0).unwrap();
        assert!(r.literal.abs() < 1e-11);
        assert!(reduce_kratzer(0.0, 1.0, &UNIT, 0, 0).is_err());
    }

    #[test]
    fn coulomb_ring_degeneracy() {
        let mut seen = Vec::new();
        for big_n in 0..=2u32 {
            for n in 0..=2u32 {
                for m in 0..=2u32 {
                    if big_n + n + m == 2 {
                        let r = reduce_coulomb_ring(1.0, 1.0, 0.0, &UNIT, QuantumNumbers::new(big_n, n, m)).unwrap();
                        seen.push(r.literal);
                        assert_eq!(r.literal, r.general);
                    }
                }
            }
        }
        assert_eq!(seen.len(), 6);
        assert!(seen.iter().all(|&e| e == -1.0 / 18.0));
    }

    #[test]
    fn ring_term_raises_energy() {
        for q in [QuantumNumbers::new(0, 0, 0), QuantumNumbers::new(1, 2, 1), QuantumNumbers::new(2, 0, 2)] {
            let mut last = reduce_coulomb_ring(1.0, 1.0, 0.0, &UNIT, q).unwrap().literal;
            for i in 1..=20 {
                let e = reduce_coulomb_ring(1.0, 1.0, 0.25 * f64::from(i), &UNIT, q).unwrap().literal;
                assert!(e > last, "{q:?} beta step {i}");
                last = e;
            }
        }
    }
}
