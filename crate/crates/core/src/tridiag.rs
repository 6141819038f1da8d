//! Real symmetric tridiagonal matrices: Sturm-sequence counts and bisection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pivmin: f64,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::invalid("off-diagonal must be one shorter than the diagonal"));
        }
        if diag.iter().chain(off.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tridiagonal entries must be finite"));
        }
        let emax = off.iter().fold(1.0_f64, |m, e| m.max(e * e));
        Ok(SymTridiagonal {
            diag,
            off,
            pivmin: f64::MIN_POSITIVE * emax,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let e = self.off[i - 1];
            q = (self.diag[i] - x) - e * e / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based), bisected inside `[lo, hi]`
    /// which must bracket it.
    pub fn kth_in(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn kth_eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::invalid(format!("eigenvalue index {k} out of range")));
        }
        let (lo, hi) = self.bounds();
        Ok(self.kth_in(k, lo - 1e-12, hi + 1e-12))
    }

    /// Eigenvalues in `[lo, hi)` with their global indices, ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        let a = self.count_below(lo);
        let b = self.count_below(hi);
        (a..b).map(|k| (k, self.kth_in(k, lo, hi))).collect()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        self.eigenvalues_in(lo - 1e-12, hi + 1e-12).into_iter().map(|(_, e)| e).collect()
    }

    /// True when no off-diagonal entry vanishes, so all eigenvalues are simple.
    pub fn is_irreducible(&self, tiny: f64) -> bool {
        self.off.iter().all(|e| e.abs() > tiny)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }
}
