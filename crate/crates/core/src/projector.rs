//! Spectral projectors of Hermitian matrices, the index of a pair of
//! projections, odd-power traces, the resolvent expansion of `P_γ^λ − P_γ⁰`
//! and the matrix-level spectral-flow check.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::parallel;
use crate::quadrature::{integrate_real_line, integrate_real_line_symmetric, EtaRule};

/// Scalars the projector routines accept: `f64` and `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Eigenvalues closer than this to γ make the projector ill-defined.
pub const THRESHOLD_GUARD: f64 = 1e-9;
/// Eigenvalues of `P − Q` beyond `±(1 − INDEX_EPS)` count towards the index.
pub const INDEX_EPS: f64 = 1e-8;

/// A Hermitian matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Scalar> {
    m: DMatrix<T>,
}

impl<T: Scalar> HermitianOperator<T> {
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("operator must be a nonempty square matrix"));
        }
        let half = T::from_real(0.5);
        let sym = (&m + m.adjoint()) * half;
        Ok(HermitianOperator { m: sym })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Ascending eigenvalues and matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<T>) {
        sorted_eigen(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.m.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `self − s·other`
    pub fn shifted(&self, s: f64, other: &HermitianOperator<T>) -> HermitianOperator<T> {
        HermitianOperator {
            m: &self.m - &other.m * T::from_real(s),
        }
    }

    pub fn to_complex(&self) -> HermitianOperator<Complex64> {
        HermitianOperator {
            m: self.m.map(to_c64),
        }
    }
}

fn to_c64<T: Scalar>(x: T) -> Complex64 {
    Complex64::new(x.real(), x.imaginary())
}

fn sorted_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| se.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Distance from γ to the spectrum.
pub fn spectral_distance(eigenvalues: &[f64], gamma: f64) -> f64 {
    eigenvalues.iter().map(|e| (e - gamma).abs()).fold(f64::INFINITY, f64::min)
}

/// `Σ_{e < γ} |v⟩⟨v|` from the eigendecomposition.
pub fn spectral_projector<T: Scalar>(h: &HermitianOperator<T>, gamma: f64) -> Result<DMatrix<T>> {
    let (vals, vecs) = h.eigen();
    projector_from_eigen(&vals, &vecs, gamma)
}

pub fn projector_from_eigen<T: Scalar>(vals: &[f64], vecs: &DMatrix<T>, gamma: f64) -> Result<DMatrix<T>> {
    if spectral_distance(vals, gamma) < THRESHOLD_GUARD {
        return Err(Error::EigenvalueAtThreshold {
            threshold: gamma,
            tolerance: THRESHOLD_GUARD,
        });
    }
    let k = vals.iter().filter(|&&e| e < gamma).count();
    let v = vecs.columns(0, k);
    Ok(v * v.adjoint())
}

/// Number of eigenvalues below γ.
pub fn count_below<T: Scalar>(h: &HermitianOperator<T>, gamma: f64) -> usize {
    h.eigenvalues().iter().filter(|&&e| e < gamma).count()
}

/// `P_γ = ½ − (1/2π)∫dη (H − γ + iη)⁻¹` to operator-norm accuracy `tol`.
pub fn projector_via_eta_integral(h: &HermitianOperator<Complex64>, gamma: f64, tol: f64) -> Result<DMatrix<Complex64>> {
    projector_via_eta_integral_with(h, gamma, EtaRule::adaptive(entry_tolerance(tol, h.dim())))
}

/// Entrywise quadrature tolerance that keeps the operator norm of the error below `tol`.
pub fn entry_tolerance(tol: f64, n: usize) -> f64 {
    2.0 * PI * tol / (4.0 * n as f64)
}

/// `P_γ = ½ − (1/2π)∫dη (H − γ + iη)⁻¹`, with the η and −η contributions
/// paired so the slowly decaying odd part cancels exactly.
pub fn projector_via_eta_integral_with(h: &HermitianOperator<Complex64>, gamma: f64, rule: EtaRule) -> Result<DMatrix<Complex64>> {
    let n = h.dim();
    let shifted = h.matrix() - DMatrix::<Complex64>::identity(n, n) * Complex64::new(gamma, 0.0);
    let integral: DMatrix<Complex64> = integrate_real_line_symmetric(
        |eta: f64| {
            resolvent(&shifted, eta).unwrap_or_else(|| DMatrix::from_element(n, n, Complex64::new(f64::NAN, 0.0)))
        },
        rule,
    )?;
    if integral.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularResolvent(format!("H − γ is singular at γ = {gamma}")));
    }
    let half = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.5, 0.0);
    let p = half - integral * Complex64::new(1.0 / (2.0 * PI), 0.0);
    Ok((&p + p.adjoint()) * Complex64::new(0.5, 0.0))
}

/// `(A + iη)⁻¹` by LU.
fn resolvent(a: &DMatrix<Complex64>, eta: f64) -> Option<DMatrix<Complex64>> {
    let n = a.nrows();
    let m = a + DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, eta);
    m.lu().try_inverse()
}

/// Two orthogonal projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair<T: Scalar> {
    pub p: DMatrix<T>,
    pub q: DMatrix<T>,
}

/// `max |P² − P|` and `max |P − P†|`.
pub fn projector_defect<T: Scalar>(p: &DMatrix<T>) -> f64 {
    let idem = (p * p - p).iter().map(|x| x.modulus()).fold(0.0, f64::max);
    let herm = (p - p.adjoint()).iter().map(|x| x.modulus()).fold(0.0, f64::max);
    idem.max(herm)
}

impl<T: Scalar> ProjectorPair<T> {
    /// Checked with idempotency tolerance 1e−10.
    pub fn new(p: DMatrix<T>, q: DMatrix<T>) -> Result<Self> {
        Self::with_tolerance(p, q, 1e-10)
    }

    pub fn with_tolerance(p: DMatrix<T>, q: DMatrix<T>, tol: f64) -> Result<Self> {
        if p.shape() != q.shape() || p.nrows() != p.ncols() {
            return Err(Error::invalid("projectors must be square and of equal size"));
        }
        for (name, m) in [("P", &p), ("Q", &q)] {
            let d = projector_defect(m);
            if d > tol {
                return Err(Error::invalid(format!("{name} is not an orthogonal projection (defect {d:.3e})")));
            }
        }
        Ok(ProjectorPair { p, q })
    }

    pub fn difference(&self) -> DMatrix<T> {
        &self.p - &self.q
    }
}

/// `dim(Ker Q ∩ Ran P) − dim(Ker P ∩ Ran Q)`: eigenvalues of `P − Q` at
/// `+1` minus those at `−1`.
pub fn pair_index<T: Scalar>(pp: &ProjectorPair<T>) -> i64 {
    let d = pp.difference();
    let ev = d.symmetric_eigenvalues();
    let plus = ev.iter().filter(|&&e| e > 1.0 - INDEX_EPS).count() as i64;
    let minus = ev.iter().filter(|&&e| e < -(1.0 - INDEX_EPS)).count() as i64;
    plus - minus
}

/// `tr (P − Q)^{2m+1}` by repeated products.
pub fn odd_power_trace<T: Scalar>(pp: &ProjectorPair<T>, m: u32) -> Result<f64> {
    if m < 1 {
        return Err(Error::invalid("power index m must be ≥ 1"));
    }
    Ok(odd_power_traces(&pp.difference(), m)[m as usize - 1])
}

/// `tr X^{2m+1}` for `m = 1..=m_max`, sharing the products.
pub fn odd_power_traces<T: Scalar>(x: &DMatrix<T>, m_max: u32) -> Vec<f64> {
    let x2 = x * x;
    let mut pow = x * &x2;
    let mut out = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        out.push(pow.trace().real());
        if m < m_max {
            pow = &pow * &x2;
        }
    }
    out
}

/// `(ind(P, R), ind(P, Q) + ind(Q, R))`.
pub fn index_additivity<T: Scalar>(p: &DMatrix<T>, q: &DMatrix<T>, r: &DMatrix<T>) -> Result<(i64, i64)> {
    let tol = 1e-8;
    let pr = ProjectorPair::with_tolerance(p.clone(), r.clone(), tol)?;
    let pq = ProjectorPair::with_tolerance(p.clone(), q.clone(), tol)?;
    let qr = ProjectorPair::with_tolerance(q.clone(), r.clone(), tol)?;
    Ok((pair_index(&pr), pair_index(&pq) + pair_index(&qr)))
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.symmetric_eigenvalues().iter().map(|e| e.abs()).fold(0.0, f64::max)
}

/// Spectral norm of any matrix.
pub fn operator_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Arithmetic–geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() <= 4.0 * f64::EPSILON * an {
            return an;
        }
        a = an;
        b = bn;
    }
    0.5 * (a + b)
}

/// `∫dη [(δ₁²+η²)(δ₂²+η²)]^{−1/2} = π/AGM(δ₁, δ₂)`.
pub fn continuity_integral(d1: f64, d2: f64) -> f64 {
    PI / agm(d1, d2)
}

pub fn continuity_integral_quadrature(d1: f64, d2: f64, abs_tol: f64) -> Result<f64> {
    integrate_real_line(
        |eta: f64| 1.0 / ((d1 * d1 + eta * eta) * (d2 * d2 + eta * eta)).sqrt(),
        EtaRule::adaptive(abs_tol),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    /// `‖P_γ^λ − P_γ^μ‖`
    pub actual: f64,
    /// `|λ−μ|·‖Φ‖·∫dη [(δ₁²+η²)(δ₂²+η²)]^{−1/2}`
    pub bound: f64,
    pub delta_lambda: f64,
    pub delta_mu: f64,
}

/// Compare `‖P_γ^λ − P_γ^μ‖` with the resolvent-expansion bound.
pub fn norm_continuity_bound<T: Scalar>(
    h0: &HermitianOperator<T>,
    phi: &HermitianOperator<T>,
    lambda: f64,
    mu: f64,
    gamma: f64,
) -> Result<ContinuityReport> {
    let hl = h0.shifted(lambda, phi);
    let hm = h0.shifted(mu, phi);
    let (vl, el) = hl.eigen();
    let (vm, em) = hm.eigen();
    let dl = spectral_distance(&vl, gamma);
    let dm = spectral_distance(&vm, gamma);
    if dl < THRESHOLD_GUARD || dm < THRESHOLD_GUARD {
        return Err(Error::GapViolation(format!(
            "γ = {gamma} is within {:.1e} of the spectrum at λ = {lambda} or μ = {mu}",
            dl.min(dm)
        )));
    }
    let pl = projector_from_eigen(&vl, &el, gamma)?;
    let pm = projector_from_eigen(&vm, &em, gamma)?;
    let actual = hermitian_norm(&(pl - pm));
    let bound = if lambda == mu {
        0.0
    } else {
        (lambda - mu).abs() * hermitian_norm(phi.matrix()) * continuity_integral(dl, dm)
    };
    Ok(ContinuityReport {
        actual,
        bound,
        delta_lambda: dl,
        delta_mu: dm,
    })
}

/// Terms of `P_γ^λ − P_γ⁰ = λQ₁ + λ²Q₂ + λ³Q₃ + λ⁴Q₄^λ` with
/// `Q_j = −(1/2π)∫ R₀(ΦR₀)^j`, `R₀ = (H₀ + iη)⁻¹` for `j ≤ 3`, and
/// `Q₄^λ = −(1/2π)∫ R₀ΦR₀ΦR_λΦR₀ΦR₀` with all resolvents at `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub lambda: f64,
    pub q1: DMatrix<Complex64>,
    pub q2: DMatrix<Complex64>,
    pub q3: DMatrix<Complex64>,
    pub q4: DMatrix<Complex64>,
    /// Fourth order with the free resolvent in the middle slot.
    pub q4_free: DMatrix<Complex64>,
}

impl Decomposition {
    /// `[λQ₁, λ²Q₂, λ³Q₃, λ⁴Q₄^λ]`
    pub fn terms(&self) -> [DMatrix<Complex64>; 4] {
        let l = self.lambda;
        let s = |m: &DMatrix<Complex64>, p: i32| m * Complex64::new(l.powi(p), 0.0);
        [s(&self.q1, 1), s(&self.q2, 2), s(&self.q3, 3), s(&self.q4, 4)]
    }

    pub fn sum(&self) -> DMatrix<Complex64> {
        let [a, b, c, d] = self.terms();
        a + b + c + d
    }
}

/// Resolvent expansion with entrywise accuracy fixed by `tol`.
pub fn perturbative_decomposition(
    h0: &HermitianOperator<Complex64>,
    phi: &HermitianOperator<Complex64>,
    lambda: f64,
    gamma: f64,
    tol: f64,
) -> Result<Decomposition> {
    perturbative_decomposition_with(h0, phi, lambda, gamma, EtaRule::adaptive(entry_tolerance(tol, h0.dim())))
}

/// Resolvent expansion of the projector difference by η-quadrature.
///
/// Dropping γ from `Q₁…Q₃` is a contour shift, valid when `H₀` has no
/// eigenvalue between 0 and γ.
pub fn perturbative_decomposition_with(
    h0: &HermitianOperator<Complex64>,
    phi: &HermitianOperator<Complex64>,
    lambda: f64,
    gamma: f64,
    rule: EtaRule,
) -> Result<Decomposition> {
    let n = h0.dim();
    let ev0 = h0.eigenvalues();
    let (lo, hi) = (gamma.min(0.0), gamma.max(0.0));
    if ev0.iter().any(|&e| e >= lo - THRESHOLD_GUARD && e <= hi + THRESHOLD_GUARD) {
        return Err(Error::GapViolation(format!("H₀ has an eigenvalue between 0 and γ = {gamma}")));
    }
    let hl = h0.shifted(lambda, phi);
    if spectral_distance(&hl.eigenvalues(), gamma) < THRESHOLD_GUARD {
        return Err(Error::GapViolation(format!("H₀ − λΦ has an eigenvalue at γ = {gamma}")));
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let g = id.clone() * Complex64::new(gamma, 0.0);
    let a0 = h0.matrix().clone();
    let a0g = h0.matrix() - &g;
    let alg = hl.matrix() - &g;
    let ph = phi.matrix().clone();
    // All five integrands side by side in one n × 5n block.
    let integral: DMatrix<Complex64> = integrate_real_line(
        |eta: f64| {
            let nan = || DMatrix::from_element(n, 5 * n, Complex64::new(f64::NAN, 0.0));
            let (Some(r0), Some(r0g), Some(rl)) = (resolvent(&a0, eta), resolvent(&a0g, eta), resolvent(&alg, eta)) else {
                return nan();
            };
            let b = &ph * &r0;
            let t1 = &r0 * &b;
            let t2 = &t1 * &b;
            let t3 = &t2 * &b;
            let t4f = &t3 * &b;
            let left = &r0g * &ph * &r0g * &ph;
            let right = &ph * &r0g * &ph * &r0g;
            let t4 = &left * &rl * &right;
            let mut out = DMatrix::zeros(n, 5 * n);
            for (k, t) in [t1, t2, t3, t4, t4f].iter().enumerate() {
                out.columns_mut(k * n, n).copy_from(t);
            }
            out
        },
        rule,
    )?;
    if integral.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularResolvent("resolvent singular on the η line".into()));
    }
    let scale = Complex64::new(-1.0 / (2.0 * PI), 0.0);
    let block = |k: usize| integral.columns(k * n, n).into_owned() * scale;
    Ok(Decomposition {
        lambda,
        q1: block(0),
        q2: block(1),
        q3: block(2),
        q4: block(3),
        q4_free: block(4),
    })
}

/// One row of the matrix spectral-flow check.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRow {
    pub lambda: f64,
    /// Eigenvalues that crossed below γ since λ = 0.
    pub crossings: i64,
    /// `tr (P_γ^λ − P_γ⁰)^{2m+1}`, m = 1, 2, 3.
    pub traces: [f64; 3],
    pub index: i64,
}

impl FlowRow {
    /// Largest deviation of the traces from each other, from the nearest
    /// integer and from the crossing count.
    pub fn max_defect(&self) -> f64 {
        let c = self.crossings as f64;
        let mut worst: f64 = 0.0;
        for (i, t) in self.traces.iter().enumerate() {
            worst = worst.max((t - t.round()).abs()).max((t - c).abs());
            for u in &self.traces[i + 1..] {
                worst = worst.max((t - u).abs());
            }
        }
        worst
    }

    pub fn consistent(&self, tol: f64) -> bool {
        self.max_defect() <= tol && self.index == self.crossings
    }
}

/// For each λ: odd-power traces of `P_γ^λ − P_γ⁰`, the pair index and the
/// directly counted crossings. Fails when an eigenvalue sits on γ at a grid
/// point.
pub fn matrix_flow_theorem<T: Scalar>(
    h0: &HermitianOperator<T>,
    phi: &HermitianOperator<T>,
    lambdas: &[f64],
    gamma: f64,
) -> Result<Vec<FlowRow>> {
    let (v0, e0) = h0.eigen();
    let p0 = projector_from_eigen(&v0, &e0, gamma)?;
    let n0 = v0.iter().filter(|&&e| e < gamma).count() as i64;
    parallel::try_map_ordered(lambdas, |&lambda| {
        let (v, e) = h0.shifted(lambda, phi).eigen();
        let p = projector_from_eigen(&v, &e, gamma)?;
        let crossings = v.iter().filter(|&&x| x < gamma).count() as i64 - n0;
        let pair = ProjectorPair { p, q: p0.clone() };
        let tr = odd_power_traces(&pair.difference(), 3);
        Ok(FlowRow {
            lambda,
            crossings,
            traces: [tr[0], tr[1], tr[2]],
            index: pair_index(&pair),
        })
    })
}
