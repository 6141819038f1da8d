//! Seeded random matrices for the index and projector batteries.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

fn entry<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Unitary from the QR factor of a random complex matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
    a.qr().q()
}

/// Projection onto the first `k` columns of `u`.
pub fn random_projector(u: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let v = u.columns(0, k);
    v * v.adjoint()
}

/// Unit-norm positive semidefinite matrix `BB†/‖BB†‖`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let b = DMatrix::from_fn(n, n, |_, _| entry(rng));
    let m = &b * b.adjoint();
    let norm = m.symmetric_eigenvalues().iter().fold(0.0_f64, |a, &e| a.max(e.abs()));
    let m = m / Complex64::new(norm, 0.0);
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `(H₀, Φ)` with `H₀` having spectrum in `[γ−4, γ−g] ∪ [γ+g, γ+4]`, both
/// sides occupied, and `Φ` a unit-norm PSD perturbation.
pub fn random_gapped_model<R: Rng>(rng: &mut R, n: usize, gamma: f64, half_gap: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let width = (4.0 - half_gap).max(0.5);
    let ev = DVector::from_fn(n, |i, _| {
        let mag = half_gap + width * rng.random_range(0.0..1.0);
        let side = if i % 2 == 0 { -1.0 } else { 1.0 };
        Complex64::new(gamma + side * mag, 0.0)
    });
    let u = random_unitary(rng, n);
    let h = &u * DMatrix::from_diagonal(&ev) * u.adjoint();
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    (h, random_psd(rng, n))
}
