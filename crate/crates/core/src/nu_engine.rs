//! Nikiforov–Uvarov reduction for equations of hypergeometric type.
//!
//! An equation `ψ'' + (τ̃/σ) ψ' + (σ̃/σ²) ψ = 0` with `deg σ, deg σ̃ ≤ 2` and
//! `deg τ̃ ≤ 1` is reduced to `σ y'' + τ y' + λ y = 0`. The constant `k` is
//! fixed by demanding that the radicand under the square root defining `π`
//! is a perfect square, and the physical branch is the one whose `τ` has a
//! negative slope.
//!
//! Everything is generic over [`Scalar`] so the same code runs on exact
//! rationals (identity checks) and on `f64` (parameter sweeps).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Absolute/relative tolerance used by the floating-point field.
pub const FLOAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NuError {
    #[error("sigma is identically zero")]
    DegenerateSigma,
    #[error("tau_tilde must have degree <= 1 (got {0})")]
    TauTildeDegree(usize),
    #[error("the k-equation has no real roots")]
    NoRealK,
    #[error("the k-equation is satisfied identically; k is undetermined")]
    DegenerateKEquation,
    #[error("radicand is not a perfect square (residual {residual:e})")]
    NotPerfectSquare { residual: f64 },
    #[error("square root of {0} is not exact in the rational field")]
    InexactRoot(String),
    #[error("no branch has a negative tau slope")]
    NoValidBranch,
    #[error("{} branches satisfy the selection rule: {branches:?}", branches.len())]
    AmbiguousBranch {
        /// `(k, tau slope, tau zero)` of every surviving branch.
        branches: Vec<(f64, f64, f64)>,
    },
    #[error("gamma = {gamma} gives 4*gamma + 1 < 0 (fall to the center)")]
    InvalidGamma { gamma: f64 },
    #[error("alpha must be positive (got {0})")]
    InvalidAlpha(f64),
    #[error("bisection and closed-form epsilon disagree: {bisection} vs {closed_form}")]
    QuantizationMismatch { bisection: f64, closed_form: f64 },
}

/// Coefficient field for the engine.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;

    /// Non-negative square root, `None` if it does not exist in the field.
    fn sqrt_exact(&self) -> Option<Self>;

    /// Whether `self` is zero relative to `scale` (exact for rationals).
    fn negligible(&self, scale: &Self) -> bool;

    fn to_f64(&self) -> f64;

    fn half() -> Self {
        Self::one() / Self::from_i64(2)
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn sqrt_exact(&self) -> Option<Self> {
        if *self >= 0.0 {
            Some(self.sqrt())
        } else {
            None
        }
    }

    fn negligible(&self, scale: &Self) -> bool {
        self.abs() <= FLOAT_TOL * scale.abs().max(1.0)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let (n, d) = (self.numer(), self.denom());
        let (rn, rd) = (n.sqrt(), d.sqrt());
        if &(&rn * &rn) == n && &(&rd * &rd) == d {
            Some(BigRational::new(rn, rd))
        } else {
            None
        }
    }

    fn negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn abs_max<T: Scalar>(values: &[&T]) -> T {
    let mut best = T::zero();
    for v in values {
        let a = if **v < T::zero() { -(*v).clone() } else { (*v).clone() };
        if a > best {
            best = a;
        }
    }
    best
}

fn sqrt_or_err<T: Scalar>(v: &T) -> Result<T, NuError> {
    v.sqrt_exact().ok_or_else(|| {
        if v.to_f64() < 0.0 {
            NuError::NoRealK
        } else {
            NuError::InexactRoot(format!("{v:?}"))
        }
    })
}

/// Polynomial `c0 + c1 s + c2 s²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2<T> {
    pub c0: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Scalar> Poly2<T> {
    pub fn new(c0: T, c1: T, c2: T) -> Self {
        Self { c0, c1, c2 }
    }

    pub fn constant(c0: T) -> Self {
        Self::new(c0, T::zero(), T::zero())
    }

    pub fn linear(c0: T, c1: T) -> Self {
        Self::new(c0, c1, T::zero())
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// Highest index with a nonzero coefficient; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        if !self.c2.is_zero() {
            2
        } else if !self.c1.is_zero() {
            1
        } else {
            0
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero() && self.c2.is_zero()
    }

    pub fn eval(&self, s: T) -> T {
        (self.c2.clone() * s.clone() + self.c1.clone()) * s + self.c0.clone()
    }

    pub fn derivative(&self) -> Self {
        Self::linear(self.c1.clone(), T::from_i64(2) * self.c2.clone())
    }

    pub fn scale(&self, f: T) -> Self {
        Self::new(
            self.c0.clone() * f.clone(),
            self.c1.clone() * f.clone(),
            self.c2.clone() * f,
        )
    }

    /// Product of two polynomials of degree at most one.
    pub fn mul_linear(&self, other: &Self) -> Self {
        debug_assert!(self.c2.is_zero() && other.c2.is_zero());
        Self::new(
            self.c0.clone() * other.c0.clone(),
            self.c0.clone() * other.c1.clone() + self.c1.clone() * other.c0.clone(),
            self.c1.clone() * other.c1.clone(),
        )
    }

    fn scale_magnitude(&self) -> T {
        abs_max(&[&self.c0, &self.c1, &self.c2])
    }
}

impl<T: Scalar> Add for Poly2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.c0 + o.c0, self.c1 + o.c1, self.c2 + o.c2)
    }
}

impl<T: Scalar> Sub for Poly2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.c0 - o.c0, self.c1 - o.c1, self.c2 - o.c2)
    }
}

impl<T: Scalar> Poly2<T> {
    fn to_f64_poly(&self) -> Poly2<f64> {
        Poly2::new(self.c0.to_f64(), self.c1.to_f64(), self.c2.to_f64())
    }
}

/// Open interval on which the orthogonal-polynomial solution lives.
/// `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Scalar> Interval<T> {
    pub fn real_line() -> Self {
        Self { lo: None, hi: None }
    }

    pub fn positive_half_line() -> Self {
        Self {
            lo: Some(T::zero()),
            hi: None,
        }
    }

    pub fn contains_open(&self, x: &T) -> bool {
        self.lo.as_ref().is_none_or(|lo| x > lo) && self.hi.as_ref().is_none_or(|hi| x < hi)
    }
}

/// `ψ'' + (τ̃/σ) ψ' + (σ̃/σ²) ψ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NUProblem<T> {
    pub sigma: Poly2<T>,
    pub sigma_tilde: Poly2<T>,
    pub tau_tilde: Poly2<T>,
    /// Where the solution lives; only consulted to break ties between
    /// branches that all have a negative `τ` slope.
    pub interval: Interval<T>,
}

impl<T: Scalar> NUProblem<T> {
    pub fn new(sigma: Poly2<T>, sigma_tilde: Poly2<T>, tau_tilde: Poly2<T>) -> Result<Self, NuError> {
        if sigma.is_zero() {
            return Err(NuError::DegenerateSigma);
        }
        if tau_tilde.degree() > 1 {
            return Err(NuError::TauTildeDegree(tau_tilde.degree()));
        }
        Ok(Self {
            sigma,
            sigma_tilde,
            tau_tilde,
            interval: Interval::real_line(),
        })
    }

    pub fn with_interval(mut self, interval: Interval<T>) -> Self {
        self.interval = interval;
        self
    }

    /// The radial Coulomb-like problem `g'' + (−ε² r² + α r − γ)/r² g = 0`:
    /// `σ = r`, `τ̃ = 0`, `σ̃ = −ε² r² + α r − γ`, on `(0, ∞)`.
    pub fn radial(epsilon: T, alpha: T, gamma: T) -> Self {
        let sigma = Poly2::linear(T::zero(), T::one());
        let sigma_tilde = Poly2::new(-gamma, alpha, -(epsilon.clone() * epsilon));
        Self {
            sigma,
            sigma_tilde,
            tau_tilde: Poly2::zero(),
            interval: Interval::positive_half_line(),
        }
    }

    /// `(σ' − τ̃)/2`, the polynomial part of `π` outside the root.
    pub fn half_drift(&self) -> Poly2<T> {
        (self.sigma.derivative() - self.tau_tilde.clone()).scale(T::half())
    }

    /// `((σ' − τ̃)/2)² − σ̃ + kσ`.
    pub fn radicand(&self, k: &T) -> Poly2<T> {
        let q = self.half_drift();
        q.mul_linear(&q) - self.sigma_tilde.clone() + self.sigma.scale(k.clone())
    }

    fn coefficient_scale(&self) -> T {
        abs_max(&[
            &self.sigma.scale_magnitude(),
            &self.sigma_tilde.scale_magnitude(),
            &self.tau_tilde.scale_magnitude(),
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCandidate<T> {
    pub k: T,
    /// 2 when the k-equation has a double root.
    pub multiplicity: u8,
}

/// All real `k` for which the radicand's discriminant in `s` vanishes,
/// sorted ascending.
pub fn k_candidates<T: Scalar>(p: &NUProblem<T>) -> Result<Vec<KCandidate<T>>, NuError> {
    if p.sigma.is_zero() {
        return Err(NuError::DegenerateSigma);
    }
    // Radicand coefficients are affine in k: X(k) = X0 + X1 k.
    let base = p.radicand(&T::zero());
    let (a0, a1) = (base.c2.clone(), p.sigma.c2.clone());
    let (b0, b1) = (base.c1.clone(), p.sigma.c1.clone());
    let (c0, c1) = (base.c0.clone(), p.sigma.c0.clone());
    let four = T::from_i64(4);
    let two = T::from_i64(2);

    // disc(k) = B(k)² − 4 A(k) C(k) = q2 k² + q1 k + q0
    let q2 = b1.clone() * b1.clone() - four.clone() * a1.clone() * c1.clone();
    let q1 = two.clone() * b0.clone() * b1.clone()
        - four.clone() * (a0.clone() * c1.clone() + a1.clone() * c0.clone());
    let q0 = b0.clone() * b0.clone() - four.clone() * a0.clone() * c0.clone();
    let scale = abs_max(&[&q2, &q1, &q0, &p.coefficient_scale()]);

    if !q2.negligible(&scale) {
        let d = q1.clone() * q1.clone() - four * q2.clone() * q0;
        let d_scale = q1.clone() * q1.clone() + scale.clone() * scale;
        if d.negligible(&d_scale) {
            return Ok(vec![KCandidate {
                k: -q1 / (two * q2),
                multiplicity: 2,
            }]);
        }
        if d < T::zero() {
            return Err(NuError::NoRealK);
        }
        let root = sqrt_or_err(&d)?;
        let denom = two * q2;
        let mut ks = vec![
            (-q1.clone() - root.clone()) / denom.clone(),
            (-q1 + root) / denom,
        ];
        ks.sort_by(|x, y| x.partial_cmp(y).expect("k candidates are comparable"));
        return Ok(ks
            .into_iter()
            .map(|k| KCandidate { k, multiplicity: 1 })
            .collect());
    }
    if !q1.negligible(&scale) {
        return Ok(vec![KCandidate {
            k: -q0 / q1,
            multiplicity: 1,
        }]);
    }
    if q0.negligible(&scale) {
        Err(NuError::DegenerateKEquation)
    } else {
        Err(NuError::NoRealK)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Both `π = (σ' − τ̃)/2 ± √(radicand)` for a given `k`, with the square root
/// collapsed to its linear polynomial. Plus branch first.
pub fn pi_candidates<T: Scalar>(p: &NUProblem<T>, k: &T) -> Result<Vec<(Sign, Poly2<T>)>, NuError> {
    let rad = p.radicand(k);
    let scale = abs_max(&[&rad.scale_magnitude(), &p.coefficient_scale(), &T::one()]);
    let root = if !rad.c2.negligible(&scale) {
        let u = rad
            .c2
            .sqrt_exact()
            .ok_or(NuError::NotPerfectSquare { residual: rad.c2.to_f64() })?;
        let v = rad.c1.clone() / (T::from_i64(2) * u.clone());
        Poly2::linear(v, u)
    } else {
        if !rad.c1.negligible(&scale) {
            return Err(NuError::NotPerfectSquare {
                residual: rad.c1.to_f64(),
            });
        }
        // Tiny negative constants are roundoff at a double root.
        let c = if rad.c0.negligible(&scale) { T::zero() } else { rad.c0.clone() };
        let v = c.sqrt_exact().ok_or(NuError::NotPerfectSquare {
            residual: rad.c0.to_f64(),
        })?;
        Poly2::constant(v)
    };
    let residual = rad - root.mul_linear(&root);
    let worst = residual.scale_magnitude();
    if !worst.negligible(&scale) {
        return Err(NuError::NotPerfectSquare {
            residual: worst.to_f64(),
        });
    }
    let q = p.half_drift();
    Ok(vec![
        (Sign::Plus, q.clone() + root.clone()),
        (Sign::Minus, q - root),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NUBranch<T> {
    pub k: T,
    pub pi: Poly2<T>,
    pub tau: Poly2<T>,
    pub sign: Sign,
    pub multiplicity: u8,
}

impl<T: Scalar> NUBranch<T> {
    pub fn tau_slope(&self) -> T {
        self.tau.c1.clone()
    }

    /// Zero of `τ`, if `τ` is not constant.
    pub fn tau_zero(&self) -> Option<T> {
        if self.tau.c1.is_zero() {
            None
        } else {
            Some(-self.tau.c0.clone() / self.tau.c1.clone())
        }
    }
}

/// Every `(k, ±)` combination, with `τ = τ̃ + 2π`.
pub fn enumerate_branches<T: Scalar>(p: &NUProblem<T>) -> Result<Vec<NUBranch<T>>, NuError> {
    let mut out = Vec::with_capacity(4);
    for cand in k_candidates(p)? {
        for (sign, pi) in pi_candidates(p, &cand.k)? {
            let tau = p.tau_tilde.clone() + pi.scale(T::from_i64(2));
            out.push(NUBranch {
                k: cand.k.clone(),
                pi,
                tau,
                sign,
                multiplicity: cand.multiplicity,
            });
        }
    }
    Ok(out)
}

/// Picks the branch with `τ' < 0`. When several qualify, keeps those whose
/// `τ` vanishes inside the problem interval; anything still ambiguous is
/// reported rather than guessed.
pub fn select_branch<T: Scalar>(p: &NUProblem<T>, candidates: &[NUBranch<T>]) -> Result<NUBranch<T>, NuError> {
    let scale = p.coefficient_scale();
    let negative: Vec<&NUBranch<T>> = candidates
        .iter()
        .filter(|b| {
            let slope = b.tau_slope();
            slope < T::zero() && !slope.negligible(&scale)
        })
        .collect();
    let survivors: Vec<&NUBranch<T>> = if negative.len() > 1 {
        negative
            .iter()
            .copied()
            .filter(|b| b.tau_zero().is_some_and(|z| p.interval.contains_open(&z)))
            .collect()
    } else {
        negative.clone()
    };
    match survivors.len() {
        1 => Ok(survivors[0].clone()),
        0 if negative.is_empty() => Err(NuError::NoValidBranch),
        _ => {
            let listed = if survivors.is_empty() { &negative } else { &survivors };
            Err(NuError::AmbiguousBranch {
                branches: listed
                    .iter()
                    .map(|b| {
                        (
                            b.k.to_f64(),
                            b.tau_slope().to_f64(),
                            b.tau_zero().map_or(f64::NAN, |z| z.to_f64()),
                        )
                    })
                    .collect(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NUSolution<T> {
    pub sigma: Poly2<T>,
    pub branch: NUBranch<T>,
}

impl<T: Scalar> NUSolution<T> {
    /// `λ_n = −n τ' − n(n−1)/2 σ''`.
    pub fn lambda_n(&self, n: u32) -> T {
        let n_t = T::from_i64(i64::from(n));
        let tau_prime = self.branch.tau.derivative().c0;
        let sigma_second = self.sigma.derivative().derivative().c0;
        let pairs = T::from_i64(i64::from(n) * (i64::from(n) - 1)) * T::half();
        -(n_t * tau_prime) - pairs * sigma_second
    }

    /// `λ = k + π'`.
    pub fn lambda_const(&self) -> T {
        self.branch.k.clone() + self.branch.pi.derivative().c0
    }

    pub fn tau_f64(&self) -> Poly2<f64> {
        self.branch.tau.to_f64_poly()
    }
}

/// Full pipeline: k candidates, π branches, selection.
pub fn solve<T: Scalar>(p: &NUProblem<T>) -> Result<NUSolution<T>, NuError> {
    let branches = enumerate_branches(p)?;
    let branch = select_branch(p, &branches)?;
    Ok(NUSolution {
        sigma: p.sigma.clone(),
        branch,
    })
}

fn check_alpha_gamma(alpha: f64, gamma: f64) -> Result<f64, NuError> {
    if !(alpha > 0.0) {
        return Err(NuError::InvalidAlpha(alpha));
    }
    let disc = 4.0 * gamma + 1.0;
    if !(disc >= 0.0) {
        return Err(NuError::InvalidGamma { gamma });
    }
    Ok(disc.sqrt())
}

/// `ε = α / (2N + 1 + √(4γ+1))`.
pub fn quantize_epsilon_closed(alpha: f64, gamma: f64, n: u32) -> Result<f64, NuError> {
    let s = check_alpha_gamma(alpha, gamma)?;
    Ok(alpha / (2.0 * f64::from(n) + 1.0 + s))
}

/// Finds ε by bisection on `λ(ε) − λ_N(ε)`, running the full engine at every
/// trial ε.
pub fn quantize_epsilon_bisection(alpha: f64, gamma: f64, n: u32) -> Result<f64, NuError> {
    check_alpha_gamma(alpha, gamma)?;
    let mismatch = |eps: f64| -> Result<f64, NuError> {
        let sol = solve(&NUProblem::radial(eps, alpha, gamma))?;
        Ok(sol.lambda_const() - sol.lambda_n(n))
    };
    let mut hi = 2.0 * alpha;
    let mut lo = 0.5 * alpha;
    while mismatch(lo)? <= 0.0 {
        hi = lo;
        lo *= 0.5;
    }
    while mismatch(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mismatch(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Quantized decay rate, closed form cross-checked against bisection.
pub fn quantize_epsilon(alpha: f64, gamma: f64, n: u32) -> Result<f64, NuError> {
    let closed = quantize_epsilon_closed(alpha, gamma, n)?;
    let bisected = quantize_epsilon_bisection(alpha, gamma, n)?;
    if (bisected - closed).abs() > 1e-12 * closed {
        return Err(NuError::QuantizationMismatch {
            bisection: bisected,
            closed_form: closed,
        });
    }
    Ok(closed)
}
