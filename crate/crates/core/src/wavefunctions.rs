//! Normalized radial, polar, azimuthal and total wavefunctions.
//!
//! Factorials of the generally irrational indices `ℓ′ ± m′`, `L` are read as
//! `Γ(x + 1)` and evaluated in the log domain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{self, Domain, QuadError};
use crate::special::{jacobi, laguerre, ln_factorial, ln_gamma_signed};
use crate::spectrum::{self, PhysicalConstants, PotentialParams, QuantumNumbers, SpectrumEntry, SpectrumError};

/// Largest tolerated deviation of the printed polar prefactor from unit norm.
pub const ANGULAR_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("L = {0} is below -1/2")]
    InvalidL(f64),
    #[error("decay rate must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("m' must be non-negative, got {0}")]
    InvalidMPrime(f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// `C_{N,L} = √((2ε)^{2L+3} N! / (2 (N+L+1) (N+2L+1)!))`.
pub fn normalization_c(radial: u32, big_l: f64, epsilon: f64) -> f64 {
    let n = f64::from(radial);
    let ln_c2 = (2.0 * big_l + 3.0) * (2.0 * epsilon).ln() + ln_factorial(n)
        - (2.0 * (n + big_l + 1.0)).ln()
        - ln_factorial(n + 2.0 * big_l + 1.0);
    (0.5 * ln_c2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialState {
    pub radial: u32,
    pub big_l: f64,
    pub epsilon: f64,
    pub dim: u32,
    pub norm: f64,
}

impl RadialState {
    pub fn new(radial: u32, big_l: f64, epsilon: f64, dim: u32) -> Result<Self, WaveError> {
        if !(big_l >= -0.5) {
            return Err(WaveError::InvalidL(big_l));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(WaveError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            radial,
            big_l,
            epsilon,
            dim,
            norm: normalization_c(radial, big_l, epsilon),
        })
    }

    pub fn from_entry(entry: &SpectrumEntry, dim: u32) -> Result<Self, WaveError> {
        Self::new(entry.quantum.radial, entry.eff.big_l, entry.epsilon, dim)
    }

    fn eta(&self) -> f64 {
        2.0 * self.big_l + 1.0
    }

    /// `R(r) = C r^{L−(D−3)/2} e^{−εr} L_N^{2L+1}(2εr)`.
    pub fn eval(&self, r: f64) -> f64 {
        let power = self.big_l - 0.5 * (f64::from(self.dim) - 3.0);
        self.norm * r.powf(power) * (-self.epsilon * r).exp() * laguerre(self.radial, self.eta(), 2.0 * self.epsilon * r)
    }

    /// `g(r) = r^{(D−1)/2} R(r) = C r^{L+1} e^{−εr} L_N^{2L+1}(2εr)`.
    pub fn reduced(&self, r: f64) -> f64 {
        self.norm * r.powf(self.big_l + 1.0) * (-self.epsilon * r).exp() * laguerre(self.radial, self.eta(), 2.0 * self.epsilon * r)
    }

    /// Radius past which the radial density is negligible.
    pub fn cutoff(&self) -> f64 {
        let power = 2.0 * self.big_l + f64::from(self.dim) - 1.0 + 2.0 * f64::from(self.radial);
        quadrature::radial_cutoff(self.epsilon, power, 1e-18)
    }

    /// `∫₀^∞ R² r^{D−1} dr` by adaptive quadrature.
    pub fn norm_integral(&self) -> Result<f64, WaveError> {
        let dm1 = f64::from(self.dim) - 1.0;
        let est = quadrature::quadrature_norm(
            |r| self.eval(r),
            |r| r.powf(dm1),
            Domain::Truncated { lo: 0.0, cutoff: self.cutoff() },
            1e-12,
        )?;
        Ok(est.value)
    }
}

/// Polar factor `H(θ) ∝ sin^{m′}θ P_n^{(m′,m′)}(cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularState {
    pub jacobi: u32,
    pub m_prime: f64,
    pub ell_prime: f64,
    /// `√((2ℓ′+1)(ℓ′−m′)! / (2(ℓ′+m′)!))`, when the factorials are defined
    /// and the radicand is positive.
    pub printed_norm: Option<f64>,
    /// Prefactor actually used.
    pub norm: f64,
    /// `∫ H² sin θ dθ` with the printed prefactor (`None` if there is none).
    pub printed_norm_integral: Option<f64>,
    /// Whether the prefactor was replaced by the quadrature normalization.
    pub renormalized: bool,
}

fn printed_angular_prefactor(m_prime: f64, ell_prime: f64) -> Option<f64> {
    let (lg_minus, sign_minus) = ln_gamma_signed(ell_prime - m_prime + 1.0);
    let (lg_plus, sign_plus) = ln_gamma_signed(ell_prime + m_prime + 1.0);
    let lead = 2.0 * ell_prime + 1.0;
    let sign = sign_minus * sign_plus * lead.signum();
    if sign <= 0.0 || !lg_minus.is_finite() || !lg_plus.is_finite() {
        return None;
    }
    Some((0.5 * (lead.abs().ln() + lg_minus - lg_plus - 2f64.ln())).exp())
}

impl AngularState {
    pub fn new(index: u32, m_prime: f64, ell_prime: f64) -> Result<Self, WaveError> {
        if !(m_prime >= 0.0) {
            return Err(WaveError::InvalidMPrime(m_prime));
        }
        // ∫₀^π sin^{2m′}θ P² sin θ dθ = ∫_{−1}^{1} (1−x²)^{m′} P(x)² dx
        let raw = quadrature::integrate(
            |x| (1.0 - x * x).max(0.0).powf(m_prime) * jacobi(index, m_prime, m_prime, x).powi(2),
            -1.0,
            1.0,
            8,
            1e-14,
        )?
        .value;
        let printed = printed_angular_prefactor(m_prime, ell_prime);
        let printed_integral = printed.map(|p| p * p * raw);
        let (norm, renormalized) = match (printed, printed_integral) {
            (Some(p), Some(i)) if (i - 1.0).abs() <= ANGULAR_NORM_TOL => (p, false),
            _ => (raw.sqrt().recip(), true),
        };
        Ok(Self {
            jacobi: index,
            m_prime,
            ell_prime,
            printed_norm: printed,
            norm,
            printed_norm_integral: printed_integral,
            renormalized,
        })
    }

    pub fn from_entry(entry: &SpectrumEntry) -> Result<Self, WaveError> {
        Self::new(entry.quantum.jacobi, entry.eff.m_prime, entry.eff.ell_prime)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        // powf(0, 0) = 1, which is the m′ → 0 limit at the poles.
        self.norm * theta.sin().abs().powf(self.m_prime) * jacobi(self.jacobi, self.m_prime, self.m_prime, theta.cos())
    }

    /// `∫₀^π H² sin θ dθ` with the prefactor in use.
    pub fn norm_integral(&self) -> Result<f64, WaveError> {
        let est = quadrature::quadrature_norm(|t| self.eval(t), f64::sin, Domain::Finite { lo: 0.0, hi: PI }, 1e-13)?;
        Ok(est.value)
    }
}

/// Direction of the azimuthal phase `e^{±imφ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PhaseSign {
    #[default]
    Plus,
    Minus,
}

/// `Φ(φ) = (2π)^{−1/2} e^{±imφ}`.
pub fn azimuthal_phi(m: u32, sign: PhaseSign, phi: f64) -> Complex64 {
    let s = match sign {
        PhaseSign::Plus => 1.0,
        PhaseSign::Minus => -1.0,
    };
    Complex64::from_polar((2.0 * PI).sqrt().recip(), s * f64::from(m) * phi)
}

/// Point in `(r, θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

/// A fully specified bound state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub entry: SpectrumEntry,
    pub radial: RadialState,
    pub angular: AngularState,
    pub sign: PhaseSign,
}

impl BoundState {
    pub fn new(params: &PotentialParams, consts: &PhysicalConstants, q: QuantumNumbers, sign: PhaseSign) -> Result<Self, WaveError> {
        let entry = spectrum::energy(params, consts, q)?;
        Ok(Self {
            entry,
            radial: RadialState::from_entry(&entry, params.dim)?,
            angular: AngularState::from_entry(&entry)?,
            sign,
        })
    }

    /// Product of the radial, polar and azimuthal prefactors.
    pub fn prefactor(&self) -> f64 {
        self.radial.norm * self.angular.norm / (2.0 * PI).sqrt()
    }

    /// `ψ(r, θ, φ)` with the combined prefactor pulled out front.
    pub fn psi(&self, p: EvalPoint) -> Complex64 {
        let rs = &self.radial;
        let ang = &self.angular;
        let power = rs.big_l - 0.5 * (f64::from(rs.dim) - 3.0);
        let radial = p.r.powf(power) * (-rs.epsilon * p.r).exp() * laguerre(rs.radial, rs.eta(), 2.0 * rs.epsilon * p.r);
        let polar = p.theta.sin().abs().powf(ang.m_prime) * jacobi(ang.jacobi, ang.m_prime, ang.m_prime, p.theta.cos());
        let s = match self.sign {
            PhaseSign::Plus => 1.0,
            PhaseSign::Minus => -1.0,
        };
        let phase = s * f64::from(self.entry.quantum.magnetic) * p.phi;
        Complex64::from_polar(self.prefactor() * radial * polar, phase)
    }

    /// `|ψ|² r^{D−1} sin θ`, independent of φ.
    pub fn density(&self, r: f64, theta: f64) -> f64 {
        let rv = self.radial.eval(r);
        let hv = self.angular.eval(theta);
        rv * rv * hv * hv / (2.0 * PI) * r.powf(f64::from(self.radial.dim) - 1.0) * theta.sin()
    }
}

/// `ψ` at `point` for state `q`.
pub fn total_psi(params: &PotentialParams, consts: &PhysicalConstants, q: QuantumNumbers, sign: PhaseSign, point: EvalPoint) -> Result<Complex64, WaveError> {
    Ok(BoundState::new(params, consts, q, sign)?.psi(point))
}
