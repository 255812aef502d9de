//! Composite Gauss–Legendre quadrature with adaptive bisection.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: best estimate {estimate} (error ~{error:e})")]
    NoConvergence { estimate: f64, error: f64 },
}

/// An integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Fixed-order Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order as f64;
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if order == 1 { x } else { p1 };
                let pn1 = if order == 1 { 1.0 } else { p0 };
                dp = n * (x * pn - pn1) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[order - 1 - i] = x;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn standard() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

const MAX_DEPTH: u32 = 40;

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: &F, a: f64, b: f64, whole: f64, tol: f64, floor: f64, depth: u32) -> (f64, f64, bool) {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    let refined = left + right;
    let err = (refined - whole).abs();
    // errors at round-off level of the whole panel cannot be improved
    let tol = tol.max(floor);
    if err <= tol || depth >= MAX_DEPTH {
        return (refined, err, err <= tol);
    }
    let (l, el, okl) = adapt(rule, f, a, m, left, 0.5 * tol, floor, depth + 1);
    let (r, er, okr) = adapt(rule, f, m, b, right, 0.5 * tol, floor, depth + 1);
    (l + r, el + er, okl && okr)
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`, starting
/// from `panels` equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> Result<Estimate, QuadError> {
    let rule = GaussLegendre::standard();
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        let whole = rule.integrate(lo, hi, &f);
        let floor = 4.0 * f64::EPSILON * whole.abs();
        let (v, e, ok) = adapt(rule, &f, lo, hi, whole, tol / panels as f64, floor, 0);
        value += v;
        error += e;
        converged &= ok;
    }
    if converged && value.is_finite() {
        Ok(Estimate { value, error })
    } else {
        Err(QuadError::NoConvergence { estimate: value, error })
    }
}

/// Integration domain for [`quadrature_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite { lo: f64, hi: f64 },
    /// `[lo, ∞)`, truncated at `cutoff`.
    Truncated { lo: f64, cutoff: f64 },
}

/// `∫ f(x)² w(x) dx` over `domain` to absolute tolerance `tol`.
pub fn quadrature_norm<F, W>(f: F, measure: W, domain: Domain, tol: f64) -> Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let (lo, hi) = match domain {
        Domain::Finite { lo, hi } => (lo, hi),
        Domain::Truncated { lo, cutoff } => (lo, cutoff),
    };
    integrate(|x| f(x).powi(2) * measure(x), lo, hi, 16, tol)
}

/// Radius beyond which `r^power e^{−2εr}` has fallen below `rel` of its peak.
pub fn radial_cutoff(epsilon: f64, power: f64, rel: f64) -> f64 {
    assert!(epsilon > 0.0 && rel > 0.0 && rel < 1.0);
    let power = power.max(0.0);
    let peak = power / (2.0 * epsilon);
    let log_env = |r: f64| {
        let p = if power > 0.0 { power * r.ln() } else { 0.0 };
        p - 2.0 * epsilon * r
    };
    let target = log_env(peak.max(f64::MIN_POSITIVE)) + rel.ln();
    let mut lo = peak;
    let mut hi = peak + 1.0 / epsilon;
    while log_env(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_env(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(5);
        // degree 9 is exact for 5 nodes
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let w: f64 = GaussLegendre::new(20).weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_integral() {
        let cutoff = radial_cutoff(1.0, 2.0, 1e-18);
        let est = quadrature_norm(|r| (-r).exp(), |r| r * r, Domain::Truncated { lo: 0.0, cutoff }, 1e-13).unwrap();
        assert!((est.value - 0.25).abs() < 1e-10);
    }

    #[test]
    fn cutoff_respects_envelope() {
        let (eps, p) = (0.3, 6.0);
        let r = radial_cutoff(eps, p, 1e-18);
        let env = |x: f64| x.powf(p) * (-2.0 * eps * x).exp();
        let ratio = env(r) / env(p / (2.0 * eps));
        assert!(ratio <= 1e-18 * (1.0 + 1e-9) && ratio > 1e-19, "{ratio}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, 1, 1e-12).unwrap_err();
        assert!(matches!(err, QuadError::NoConvergence { .. }));
    }
}
