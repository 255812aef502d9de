//! Special-function kernels: log-Gamma and the classical orthogonal
//! polynomials evaluated by their three-term recurrences.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln |Γ(x)|` and the sign of `Γ(x)`. Poles return `(+∞, 0.0)`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x <= 0.0 && x == x.floor() {
        return (f64::INFINITY, 0.0);
    }
    if x < 0.5 {
        // Γ(x) Γ(1−x) = π / sin(πx)
        let s = (PI * x).sin();
        let (lg, sg) = ln_gamma_signed(1.0 - x);
        return (PI.ln() - s.abs().ln() - lg, s.signum() * sg);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let value = 0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln();
    (value, 1.0)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument, got {x}");
    ln_gamma_signed(x).0
}

/// `ln(x!)` read as `ln Γ(x + 1)`.
pub fn ln_factorial(x: f64) -> f64 {
    ln_gamma(x + 1.0)
}

/// Generalized Laguerre polynomial `L_n^{(η)}(x)`.
pub fn laguerre(n: u32, eta: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + eta - x;
    for k in 1..n {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + eta - x) * cur - (k + eta) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Jacobi polynomial `P_n^{(a,b)}(x)`.
pub fn jacobi(n: u32, a: f64, b: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for k in 1..n {
        let k = f64::from(k);
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * s;
        let c2 = (s + 1.0) * ((s + 2.0) * s * x + a * a - b * b);
        let c3 = 2.0 * (k + a) * (k + b) * (s + 2.0);
        let next = (c2 * cur - c3 * prev) / c1;
        prev = cur;
        cur = next;
    }
    cur
}
