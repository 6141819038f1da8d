//! Periodic kernels `K(i, j) = f₁(i) g(i−j) f₂(j)`, their factorization
//! through `|ĝ|^{1/2}` and the trace-norm bound `‖K‖₁ ≤ ‖f₁‖₂‖f₂‖₂‖ĝ‖₁`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Unitary forward transform `ĝ(m) = n^{−1/2} Σ_j g(j) e^{−2πi mj/n}`.
pub fn unitary_dft(g: &[Complex64]) -> Vec<Complex64> {
    transform(g, false)
}

pub fn unitary_idft(g: &[Complex64]) -> Vec<Complex64> {
    transform(g, true)
}

fn transform(g: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = g.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut buf = g.to_vec();
    fft.process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// `(a ∗ b)(i) = Σ_k a(k) b(i−k mod n)`
pub fn circular_convolution(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|k| a[k] * b[(i + n - k) % n]).sum())
        .collect()
}

/// `‖ĝ‖₁ = n^{−1/2} Σ|ĝ(m)|`
pub fn fourier_l1(g: &[Complex64]) -> f64 {
    let n = g.len() as f64;
    unitary_dft(g).iter().map(|z| z.norm()).sum::<f64>() / n.sqrt()
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(h₁, h₂)` with `h₁ ∗ h₂ = g`: `ĥ₁ = n^{−1/4}|ĝ|^{1/2}`,
/// `ĥ₂ = n^{−1/4}|ĝ|^{1/2} sgn ĝ`.
pub fn factorize(g: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = g.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let gh = unitary_dft(g);
    let s = (n as f64).powf(-0.25);
    let h1: Vec<Complex64> = gh.iter().map(|z| Complex64::new(s * z.norm().sqrt(), 0.0)).collect();
    let h2: Vec<Complex64> = gh
        .iter()
        .map(|z| {
            let r = z.norm();
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z / r * (s * r.sqrt())
            }
        })
        .collect();
    (unitary_idft(&h1), unitary_idft(&h2))
}

/// Kernel on a periodic grid of `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub g: Vec<Complex64>,
}

impl DiscreteKernel {
    pub fn new(f1: Vec<Complex64>, g: Vec<Complex64>, f2: Vec<Complex64>) -> Result<Self> {
        let n = g.len();
        if n == 0 || f1.len() != n || f2.len() != n {
            return Err(Error::invalid("kernel vectors must share a nonzero length"));
        }
        Ok(DiscreteKernel { f1, f2, g })
    }

    pub fn from_real(f1: &[f64], g: &[f64], f2: &[f64]) -> Result<Self> {
        let c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(c(f1), c(g), c(f2))
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.f1[i] * self.g[(i + n - j) % n] * self.f2[j])
    }

    /// `L₁(i, k) = f₁(i) h₁(i−k)` and `L₂(k, j) = h₂(k−j) f₂(j)`.
    pub fn factors(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let n = self.n();
        let (h1, h2) = factorize(&self.g);
        let l1 = DMatrix::from_fn(n, n, |i, k| self.f1[i] * h1[(i + n - k) % n]);
        let l2 = DMatrix::from_fn(n, n, |k, j| h2[(k + n - j) % n] * self.f2[j]);
        (l1, l2)
    }

    /// `‖f₁‖₂‖f₂‖₂‖ĝ‖₁`
    pub fn bound(&self) -> f64 {
        l2_norm(&self.f1) * l2_norm(&self.f2) * fourier_l1(&self.g)
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    m.singular_values().iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceNormCheck {
    pub trace_norm: f64,
    pub bound: f64,
    /// `‖L₁‖_HS ‖L₂‖_HS`
    pub hilbert_schmidt: f64,
    /// `max |L₁L₂ − K|`
    pub factorization_residual: f64,
}

impl TraceNormCheck {
    pub fn holds(&self) -> bool {
        self.trace_norm <= self.bound * (1.0 + 1e-10)
    }
}

pub fn trace_norm_bound_check(dk: &DiscreteKernel) -> TraceNormCheck {
    let k = dk.matrix();
    let (l1, l2) = dk.factors();
    let residual = (&l1 * &l2 - &k).iter().map(|z| z.norm()).fold(0.0, f64::max);
    TraceNormCheck {
        trace_norm: trace_norm(&k),
        bound: dk.bound(),
        hilbert_schmidt: l1.norm() * l2.norm(),
        factorization_residual: residual,
    }
}
