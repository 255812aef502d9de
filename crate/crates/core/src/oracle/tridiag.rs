//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

/// Symmetric tridiagonal matrix: `diag[0..n]`, `off[0..n-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (negative LDLᵀ pivots).
    pub fn sturm_count(&self, x: f64) -> usize {
        let guard = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let safe = if q.abs() < guard { guard.copysign(q) } else { q };
            let e = self.off[i - 1];
            q = (self.diag[i] - x) - e * e / safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn lowest(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
        let floor = 4.0 * f64::EPSILON * scale;
        let mut out = Vec::with_capacity(k);
        let mut lo_start = glo;
        for idx in 0..k {
            let (mut lo, mut hi) = (lo_start, ghi);
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= floor || mid <= lo || mid >= hi {
                    break;
                }
                if self.sturm_count(mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let value = 0.5 * (lo + hi);
            out.push(value);
            lo_start = lo;
        }
        out
    }
}
