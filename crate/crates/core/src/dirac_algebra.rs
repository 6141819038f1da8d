//! 4×4 Dirac algebra in the standard representation, free symbols
//! `D_p = α·p + β`, plane-wave spinors and the η-integrals built from them.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nuclear::ChargeDensity;
use crate::quadrature::{integrate_real_line, EtaRule};

pub type Mat4 = Matrix4<Complex64>;
pub type Spinor4 = Vector4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A momentum in units of the electron mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum3(pub [f64; 3]);

impl Momentum3 {
    pub const ZERO: Momentum3 = Momentum3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::invalid("momentum components must be finite"));
        }
        Ok(Momentum3([x, y, z]))
    }

    pub fn dot(&self, o: &Momentum3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Momentum3) -> Momentum3 {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        Momentum3([b * z - c * y, c * x - a * z, a * y - b * x])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sub(&self, o: &Momentum3) -> Momentum3 {
        Momentum3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn scale(&self, s: f64) -> Momentum3 {
        Momentum3([s * self.0[0], s * self.0[1], s * self.0[2]])
    }

    /// Unit vector along `self`, `ẑ` at the origin.
    pub fn direction(&self) -> Momentum3 {
        let n = self.norm();
        if n == 0.0 {
            Momentum3([0.0, 0.0, 1.0])
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Relativistic energy `√(p² + 1)`.
    pub fn energy(&self) -> f64 {
        (self.dot(self) + 1.0).sqrt()
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sigma_dot(p: &Momentum3) -> Matrix2<Complex64> {
    let [x, y, z] = p.0;
    Matrix2::new(c(z), Complex64::new(x, -y), Complex64::new(x, y), c(-z))
}

fn block(tl: Matrix2<Complex64>, tr: Matrix2<Complex64>, bl: Matrix2<Complex64>, br: Matrix2<Complex64>) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&tl);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&tr);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&bl);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&br);
    m
}

/// `(α₁, α₂, α₃, β)` in the standard representation.
pub fn dirac_matrices() -> ([Mat4; 3], Mat4) {
    let z = Matrix2::<Complex64>::zeros();
    let sx = Matrix2::new(ZERO, ONE, ONE, ZERO);
    let sy = Matrix2::new(ZERO, -I, I, ZERO);
    let sz = Matrix2::new(ONE, ZERO, ZERO, -ONE);
    let alpha = [block(z, sx, sx, z), block(z, sy, sy, z), block(z, sz, sz, z)];
    let beta = Mat4::from_diagonal(&Vector4::new(ONE, ONE, -ONE, -ONE));
    (alpha, beta)
}

/// Free Dirac symbol at a fixed momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracSymbol {
    pub p: Momentum3,
    pub matrix: Mat4,
    pub energy: f64,
}

impl DiracSymbol {
    pub fn new(p: Momentum3) -> Self {
        let s = sigma_dot(&p);
        let one = Matrix2::<Complex64>::identity();
        let matrix = block(one, s, s, -one);
        DiracSymbol {
            p,
            matrix,
            energy: p.energy(),
        }
    }
}

/// `(D_p − γ + iη)⁻¹`, from `D_p² = E²`:
/// `(D_p − z)⁻¹ = (D_p + z)/(E² − z²)` with `z = γ − iη`.
pub fn free_resolvent(p: &Momentum3, gamma: f64, eta: f64) -> Result<Mat4> {
    let d = DiracSymbol::new(*p);
    let z = Complex64::new(gamma, -eta);
    let denom = c(d.energy * d.energy) - z * z;
    if eta == 0.0 && (gamma.abs() - d.energy).abs() <= 4.0 * f64::EPSILON * d.energy {
        return Err(Error::SingularResolvent(format!(
            "γ = {gamma} is an eigenvalue ±{} of D_p",
            d.energy
        )));
    }
    let inv = ONE / denom;
    Ok((d.matrix + Mat4::identity() * z) * inv)
}

/// A normalized eigenvector of `D_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveSpinor {
    pub p: Momentum3,
    pub tau: u8,
    pub vector: Spinor4,
    /// `+1` for τ ∈ {1, 2}, `−1` for τ ∈ {3, 4}.
    pub sign: i8,
}

/// Plane-wave spinor `u_τ(p)`, τ ∈ {1, 2, 3, 4}.
///
/// τ = 1, 2 is `(σ·p e, (E−1) e)/N₊` and τ = 3, 4 is `(σ·p e, −(E+1) e)/N₋`.
/// At `p = 0` the positive-energy pair is the limit along `ẑ`.
pub fn spinor(p: &Momentum3, tau: u8) -> Result<PlaneWaveSpinor> {
    if !(1..=4).contains(&tau) {
        return Err(Error::invalid(format!("spinor index {tau} outside 1..=4")));
    }
    let e = if tau % 2 == 1 {
        Vector2::new(ONE, ZERO)
    } else {
        Vector2::new(ZERO, ONE)
    };
    let en = p.energy();
    let pn = p.norm();
    let (upper, lower, sign) = if tau <= 2 {
        // Divide through by |p|: (σ·p̂ e, |p|/(E+1) e)/√(2E/(E+1)).
        let n = (2.0 * en / (en + 1.0)).sqrt();
        let up = sigma_dot(&p.direction()) * e / c(n);
        let lo = e * c(pn / (en + 1.0) / n);
        (up, lo, 1)
    } else {
        let n = (2.0 * en * (en + 1.0)).sqrt();
        let up = sigma_dot(p) * e / c(n);
        let lo = e * c(-(en + 1.0) / n);
        (up, lo, -1)
    };
    Ok(PlaneWaveSpinor {
        p: *p,
        tau,
        vector: Spinor4::new(upper[0], upper[1], lower[0], lower[1]),
        sign,
    })
}

/// All four spinors at `p`.
pub fn spinor_basis(p: &Momentum3) -> [PlaneWaveSpinor; 4] {
    [1, 2, 3, 4].map(|t| spinor(p, t).expect("valid index"))
}

/// Spectral projector of `D_p` onto the sign `a = ±1` eigenspace,
/// `(1 + a D_p/E)/2`.
pub fn sign_projector(p: &Momentum3, a: i8) -> Mat4 {
    let d = DiracSymbol::new(*p);
    (Mat4::identity() + d.matrix * c(a as f64 / d.energy)) * c(0.5)
}

/// Pointwise trace `tr[(D_p+iη)⁻¹(D_{p₁}+iη)⁻¹(D_q+iη)⁻¹]`.
pub fn q2_integrand(p: &Momentum3, p1: &Momentum3, q: &Momentum3, eta: f64) -> Result<Complex64> {
    // (D + iη)⁻¹ is the resolvent at γ = 0 with η → η
    let a = free_resolvent(p, 0.0, eta)?;
    let b = free_resolvent(p1, 0.0, eta)?;
    let d = free_resolvent(q, 0.0, eta)?;
    Ok((a * b * d).trace())
}

/// `∫dη tr[(D_p+iη)⁻¹(D_{p₁}+iη)⁻¹(D_q+iη)⁻¹]` over the real line.
///
/// The trace is odd in η, so the result vanishes to quadrature accuracy.
/// Returned as a complex number since the integrand is purely imaginary.
pub fn q2_eta_trace_integral(p: &Momentum3, p1: &Momentum3, q: &Momentum3) -> Result<Complex64> {
    q2_eta_trace_integral_with(p, p1, q, EtaRule::adaptive(1e-10))
}

pub fn q2_eta_trace_integral_with(p: &Momentum3, p1: &Momentum3, q: &Momentum3, rule: EtaRule) -> Result<Complex64> {
    integrate_real_line(
        |eta: f64| q2_integrand(p, p1, q, eta).expect("η ≠ 0 or γ = 0 inside the gap"),
        rule,
    )
}

/// Sign pattern `(a₀, a₁, a₂)` of a three-spinor product.
pub type Signs = (i8, i8, i8);

fn check_signs(s: Signs) -> Result<()> {
    for a in [s.0, s.1, s.2] {
        if a != 1 && a != -1 {
            return Err(Error::invalid("signs must be ±1"));
        }
    }
    Ok(())
}

fn check_energies(e: [f64; 3]) -> Result<()> {
    if e.iter().any(|x| !(x.is_finite() && *x >= 1.0)) {
        return Err(Error::invalid("energies must be finite and ≥ 1"));
    }
    Ok(())
}

/// `(1/2π)∫dη [(ia₀E−η)²(ia₁E₁−η)(ia₂E₂−η)]⁻¹` by residues.
///
/// Poles sit at `iaE`; closing in the upper half plane picks up those with
/// `a = +1`. Whichever half plane holds at most two poles (with multiplicity)
/// is used, so no partial fractions between nearby poles appear.
pub fn quartic_eta_integral(e: f64, e1: f64, e2: f64, signs: Signs) -> Result<f64> {
    check_signs(signs)?;
    check_energies([e, e1, e2])?;
    let nodes = [
        I * (signs.0 as f64 * e),
        I * (signs.0 as f64 * e),
        I * (signs.1 as f64 * e1),
        I * (signs.2 as f64 * e2),
    ];
    let upper: Vec<Complex64> = nodes.iter().copied().filter(|z| z.im > 0.0).collect();
    let lower: Vec<Complex64> = nodes.iter().copied().filter(|z| z.im < 0.0).collect();
    // (1/2π)∫ = i Σ_upper Res = −i Σ_lower Res
    let value = match (upper.len(), lower.len()) {
        (0, _) | (_, 0) => ZERO,
        (1, 3) => I * residue_single(upper[0], &lower),
        (3, 1) => -I * residue_single(lower[0], &upper),
        (2, 2) => I * residue_pair(upper[0], upper[1], lower[0], lower[1]),
        _ => unreachable!("four poles in total"),
    };
    debug_assert!(value.im.abs() <= 1e-12 * value.re.abs().max(1e-300) + 1e-300);
    Ok(value.re)
}

/// Residue at a simple pole `u` of `1/((η−u)·Π(η−w))`.
fn residue_single(u: Complex64, others: &[Complex64]) -> Complex64 {
    ONE / others.iter().fold(ONE, |acc, w| acc * (u - w))
}

/// Sum of residues at `u₁, u₂` (possibly equal) of `1/((η−u₁)(η−u₂)P(η))` with
/// `P = (η−w₁)(η−w₂)`: the divided difference `(1/P)[u₁, u₂] = −P[u₁, u₂]/(P(u₁)P(u₂))`.
fn residue_pair(u1: Complex64, u2: Complex64, w1: Complex64, w2: Complex64) -> Complex64 {
    let p = |x: Complex64| (x - w1) * (x - w2);
    let dd = u1 + u2 - w1 - w2;
    -dd / (p(u1) * p(u2))
}

/// The quartic integral by residues and by direct quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticReport {
    pub residue: f64,
    pub quadrature: f64,
}

/// Direct η-quadrature of the quartic integral, the cross-check for
/// [`quartic_eta_integral`].
pub fn quartic_eta_integral_quadrature(e: f64, e1: f64, e2: f64, signs: Signs, abs_tol: f64) -> Result<f64> {
    check_signs(signs)?;
    check_energies([e, e1, e2])?;
    let f = |eta: f64| {
        let z0 = Complex64::new(-eta, signs.0 as f64 * e);
        let z1 = Complex64::new(-eta, signs.1 as f64 * e1);
        let z2 = Complex64::new(-eta, signs.2 as f64 * e2);
        ONE / (z0 * z0 * z1 * z2)
    };
    let v: Complex64 = integrate_real_line(f, EtaRule::adaptive(abs_tol))?;
    Ok(v.re / (2.0 * std::f64::consts::PI))
}

pub fn quartic_eta_report(e: f64, e1: f64, e2: f64, signs: Signs) -> Result<QuarticReport> {
    Ok(QuarticReport {
        residue: quartic_eta_integral(e, e1, e2, signs)?,
        quadrature: quartic_eta_integral_quadrature(e, e1, e2, signs, 1e-13)?,
    })
}

const ALL_SIGNS: [Signs; 8] = [
    (1, 1, 1),
    (1, 1, -1),
    (1, -1, 1),
    (1, -1, -1),
    (-1, 1, 1),
    (-1, 1, -1),
    (-1, -1, 1),
    (-1, -1, -1),
];

fn phi_hat(density: &ChargeDensity, k: &Momentum3) -> Result<f64> {
    let kn = k.norm();
    if kn == 0.0 {
        return Err(Error::SingularPotential);
    }
    Ok(density.coulomb_fourier(kn))
}

/// Summand of the third-order density trace at momenta `(p, p₁, p₂)`:
///
/// `(2π)⁻³ φ̂(p−p₁)φ̂(p₁−p₂)φ̂(p₂−p) Σ_τ J(a_τ) ⟨u_τ₀(p)|u_τ₁(p₁)⟩⟨u_τ₁(p₁)|u_τ₂(p₂)⟩⟨u_τ₂(p₂)|u_τ₀(p)⟩`
///
/// with `J` the quartic η-integral. Complex in general; swapping `p₁ ↔ p₂`
/// conjugates it.
pub fn q3_integrand_trace(p: &Momentum3, p1: &Momentum3, p2: &Momentum3, density: &ChargeDensity) -> Result<Complex64> {
    let pref = q3_prefactor(p, p1, p2, density)?;
    let (b0, b1, b2) = (spinor_basis(p), spinor_basis(p1), spinor_basis(p2));
    let (e, e1, e2) = (p.energy(), p1.energy(), p2.energy());
    let mut sum = ZERO;
    for s0 in &b0 {
        for s1 in &b1 {
            for s2 in &b2 {
                if s0.sign == s1.sign && s1.sign == s2.sign {
                    continue;
                }
                let j = quartic_eta_integral(e, e1, e2, (s0.sign, s1.sign, s2.sign))?;
                let o01 = s0.vector.dotc(&s1.vector);
                let o12 = s1.vector.dotc(&s2.vector);
                let o20 = s2.vector.dotc(&s0.vector);
                sum += o01 * o12 * o20 * j;
            }
        }
    }
    Ok(sum * pref)
}

fn q3_prefactor(p: &Momentum3, p1: &Momentum3, p2: &Momentum3, density: &ChargeDensity) -> Result<f64> {
    let f = phi_hat(density, &p.sub(p1))? * phi_hat(density, &p1.sub(p2))? * phi_hat(density, &p2.sub(p))?;
    Ok(f / (2.0 * std::f64::consts::PI).powi(3))
}

/// Same summand written with sign projectors:
/// `Σ_signs J · tr(Π_{a₀}(p) Π_{a₁}(p₁) Π_{a₂}(p₂))`.
pub fn q3_integrand_trace_projectors(p: &Momentum3, p1: &Momentum3, p2: &Momentum3, density: &ChargeDensity) -> Result<Complex64> {
    let pref = q3_prefactor(p, p1, p2, density)?;
    let (e, e1, e2) = (p.energy(), p1.energy(), p2.energy());
    let mut sum = ZERO;
    for s in ALL_SIGNS {
        let j = quartic_eta_integral(e, e1, e2, s)?;
        if j == 0.0 {
            continue;
        }
        let t = (sign_projector(p, s.0) * sign_projector(p1, s.1) * sign_projector(p2, s.2)).trace();
        sum += t * j;
    }
    Ok(sum * pref)
}

/// `‖Π₊(p) Π₋(q)‖ = √(c² + |p×q|²)/(N₊(p) N₋(q))`, `c = p·q − (E_p−1)(1+E_q)`,
/// evaluated with `|p|` divided out so that `p = 0` is regular.
pub fn cross_sign_overlap_norm(p: &Momentum3, q: &Momentum3) -> f64 {
    let ep = p.energy();
    let eq = q.energy();
    let pn = p.norm();
    let ph = p.direction();
    let cc = ph.dot(q) - pn / (ep + 1.0) * (1.0 + eq);
    let w = ph.cross(q);
    let np = (2.0 * ep / (ep + 1.0)).sqrt();
    let nq = (2.0 * eq * (eq + 1.0)).sqrt();
    (cc * cc + w.dot(&w)).sqrt() / (np * nq)
}

/// Dominating expression for [`q3_integrand_trace`]: for each mixed sign
/// pattern, `2|J|` times the smallest `‖Π_a Π_b‖` over cyclically adjacent
/// momenta carrying opposite signs.
pub fn q3_bound(p: &Momentum3, p1: &Momentum3, p2: &Momentum3, density: &ChargeDensity) -> Result<f64> {
    let pref = q3_prefactor(p, p1, p2, density)?.abs();
    let (e, e1, e2) = (p.energy(), p1.energy(), p2.energy());
    let moms = [p, p1, p2];
    let mut total = 0.0;
    for s in ALL_SIGNS {
        let j = quartic_eta_integral(e, e1, e2, s)?;
        if j == 0.0 {
            continue;
        }
        let a = [s.0, s.1, s.2];
        let mut best = 1.0_f64;
        for i in 0..3 {
            let k = (i + 1) % 3;
            if a[i] != a[k] {
                let (plus, minus) = if a[i] > 0 { (moms[i], moms[k]) } else { (moms[k], moms[i]) };
                best = best.min(cross_sign_overlap_norm(plus, minus));
            }
        }
        total += 2.0 * j.abs() * best;
    }
    Ok(pref * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mnorm(m: &Mat4) -> f64 {
        m.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn mom(v: [f64; 3]) -> Momentum3 {
        Momentum3(v)
    }

    #[test]
    fn anticommutation_relations_are_exact() {
        let (a, b) = dirac_matrices();
        let id = Mat4::identity();
        for i in 0..3 {
            for j in 0..3 {
                let ac = a[i] * a[j] + a[j] * a[i];
                let want = if i == j { id * c(2.0) } else { Mat4::zeros() };
                assert_eq!(ac, want);
            }
            assert_eq!(a[i] * b + b * a[i], Mat4::zeros());
            assert_eq!(a[i].trace(), ZERO);
            assert_eq!(a[i].adjoint(), a[i]);
        }
        assert_eq!(b * b, id);
        assert_eq!((a[0] * a[1] * a[2]).trace(), ZERO);
    }

    #[test]
    fn symbol_trace_product() {
        let da = DiracSymbol::new(mom([1.0, 0.0, 0.0]));
        let db = DiracSymbol::new(mom([0.0, 1.0, 0.0]));
        assert!(((da.matrix * db.matrix).trace() - c(4.0)).norm() < 1e-15);
        let (a, b) = dirac_matrices();
        let p = mom([0.3, -1.2, 2.0]);
        let built = a[0] * c(0.3) + a[1] * c(-1.2) + a[2] * c(2.0) + b;
        assert!(mnorm(&(built - DiracSymbol::new(p).matrix)) < 1e-15);
    }

    #[test]
    fn resolvent_examples() {
        let r = free_resolvent(&Momentum3::ZERO, 0.0, 1.0).unwrap();
        // (β + i)⁻¹ = (β − i)/2
        let (_, beta) = dirac_matrices();
        assert!(mnorm(&(r - (beta - Mat4::identity() * I) * c(0.5))) < 1e-15);
        let p = mom([3.0, 0.0, 0.0]);
        let r = free_resolvent(&p, 0.0, 2.0).unwrap();
        let d = DiracSymbol::new(p).matrix + Mat4::identity() * (I * 2.0);
        assert!(mnorm(&(d * r - Mat4::identity())) < 1e-12);
        // independent oracle: LU inverse
        let lu = d.try_inverse().unwrap();
        assert!(mnorm(&(lu - r)) < 1e-13);
        assert!(matches!(free_resolvent(&Momentum3::ZERO, 1.0, 0.0), Err(Error::SingularResolvent(_))));
    }

    #[test]
    fn spinor_examples() {
        let u = spinor(&Momentum3::ZERO, 3).unwrap();
        assert_eq!(u.vector, Spinor4::new(ZERO, ZERO, -ONE, ZERO));
        assert_eq!(u.sign, -1);
        assert_eq!(spinor(&Momentum3::ZERO, 1).unwrap().vector, Spinor4::new(ONE, ZERO, ZERO, ZERO));
        assert_eq!(spinor(&Momentum3::ZERO, 2).unwrap().vector, Spinor4::new(ZERO, -ONE, ZERO, ZERO));
        let p = mom([0.0, 0.0, 1.0]);
        let u = spinor(&p, 1).unwrap();
        let d = DiracSymbol::new(p).matrix;
        assert!((d * u.vector - u.vector * c(2f64.sqrt())).norm() < 1e-12);
        assert!(spinor(&p, 0).is_err());
    }

    #[test]
    fn q2_integrand_is_odd_and_imaginary() {
        let (p, p1, q) = (mom([0.4, 1.0, -2.0]), mom([3.0, 0.1, 0.2]), mom([-1.0, -1.0, 0.5]));
        for eta in [0.1, 0.7, 3.0, 40.0] {
            let a = q2_integrand(&p, &p1, &q, eta).unwrap();
            let b = q2_integrand(&p, &p1, &q, -eta).unwrap();
            assert!((a + b).norm() < 1e-12);
            assert!(a.re.abs() < 1e-14);
        }
        let v = q2_eta_trace_integral(&Momentum3::ZERO, &Momentum3::ZERO, &Momentum3::ZERO).unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn quartic_same_sign_vanishes_and_unit_energies() {
        assert_eq!(quartic_eta_integral(1.3, 2.0, 5.0, (1, 1, 1)).unwrap(), 0.0);
        assert_eq!(quartic_eta_integral(1.3, 2.0, 5.0, (-1, -1, -1)).unwrap(), 0.0);
        let r = quartic_eta_integral(1.0, 1.0, 1.0, (1, 1, -1)).unwrap();
        // residue at the single lower pole −i: −i/(−2i)³
        assert!((r + 0.125).abs() < 1e-15);
        let q = quartic_eta_integral_quadrature(1.0, 1.0, 1.0, (1, 1, -1), 1e-13).unwrap();
        assert!((r - q).abs() <= 1e-9 * r.abs());
        assert!(quartic_eta_integral(0.5, 1.0, 1.0, (1, 1, -1)).is_err());
    }

    #[test]
    fn quartic_sign_flip_is_conjugation() {
        // η → −η maps the (a) pattern onto (−a) with the complex conjugate integrand
        let a = quartic_eta_integral(1.2, 3.4, 1.7, (-1, -1, 1)).unwrap();
        let b = quartic_eta_integral(1.2, 3.4, 1.7, (1, 1, -1)).unwrap();
        assert!((a - b).abs() < 1e-15);
        let qa = quartic_eta_integral_quadrature(1.2, 3.4, 1.7, (-1, -1, 1), 1e-13).unwrap();
        assert!((a - qa).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn q3_spinor_and_projector_forms_agree() {
        let d = ChargeDensity::gaussian(0.3).unwrap();
        let (p, p1, p2) = (mom([0.2, 0.5, -0.1]), mom([1.0, -0.3, 0.4]), mom([-0.6, 0.2, 1.1]));
        let a = q3_integrand_trace(&p, &p1, &p2, &d).unwrap();
        let b = q3_integrand_trace_projectors(&p, &p1, &p2, &d).unwrap();
        assert!((a - b).norm() < 1e-13 * a.norm().max(1e-30));
        let swapped = q3_integrand_trace(&p, &p2, &p1, &d).unwrap();
        assert!((swapped - a.conj()).norm() < 1e-13 * a.norm());
        assert!(a.norm() <= q3_bound(&p, &p1, &p2, &d).unwrap());
        assert!(matches!(q3_integrand_trace(&p, &p, &p2, &d), Err(Error::SingularPotential)));
    }

    #[test]
    fn overlap_norm_matches_svd() {
        for (p, q) in [
            (mom([0.3, -0.2, 1.5]), mom([2.0, 0.1, -0.7])),
            (Momentum3::ZERO, mom([0.5, 0.5, 0.5])),
            (mom([1.0, 0.0, 0.0]), Momentum3::ZERO),
        ] {
            let m = sign_projector(&p, 1) * sign_projector(&q, -1);
            let svd = m.singular_values().max();
            assert!((svd - cross_sign_overlap_norm(&p, &q)).abs() < 1e-12);
        }
    }

    fn arb_mom(r: f64) -> impl Strategy<Value = Momentum3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Momentum3([x, y, z]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_symbol_squares_to_energy(p in arb_mom(10.0)) {
            let d = DiracSymbol::new(p);
            let sq = d.matrix * d.matrix - Mat4::identity() * c(d.energy * d.energy);
            prop_assert!(mnorm(&sq) < 1e-12 * d.energy * d.energy);
            prop_assert!(mnorm(&(d.matrix - d.matrix.adjoint())) == 0.0);
            prop_assert!(d.matrix.trace().norm() < 1e-15);
        }

        #[test]
        fn prop_spinors_diagonalize_symbol(p in arb_mom(8.0)) {
            let d = DiracSymbol::new(p);
            let basis = spinor_basis(&p);
            let mut rebuilt = Mat4::zeros();
            for (i, u) in basis.iter().enumerate() {
                let ev = d.matrix * u.vector - u.vector * c(u.sign as f64 * d.energy);
                prop_assert!(ev.norm() < 1e-12 * d.energy);
                for (j, v) in basis.iter().enumerate() {
                    let ip = u.vector.dotc(&v.vector);
                    let want = if i == j { ONE } else { ZERO };
                    prop_assert!((ip - want).norm() < 1e-13);
                }
                rebuilt += u.vector * u.vector.adjoint() * c(u.sign as f64 * d.energy);
            }
            prop_assert!(mnorm(&(rebuilt - d.matrix)) < 1e-12 * d.energy);
        }

        #[test]
        fn prop_first_resolvent_identity(p in arb_mom(5.0), g in -3.0..3.0f64, e1 in 0.05..4.0f64, e2 in -4.0..-0.05f64) {
            let r1 = free_resolvent(&p, g, e1).unwrap();
            let r2 = free_resolvent(&p, g, e2).unwrap();
            // (D − γ + iη)⁻¹: R(η₁) − R(η₂) = (iη₂ − iη₁) R(η₁) R(η₂)
            let lhs = r1 - r2;
            let rhs = r1 * r2 * (I * (e2 - e1));
            prop_assert!(mnorm(&(lhs - rhs)) < 1e-11);
        }

        #[test]
        fn prop_quartic_residue_matches_quadrature(
            e in 1.0..6.0f64, e1 in 1.0..6.0f64, e2 in 1.0..6.0f64,
            s0 in prop::bool::ANY, s1 in prop::bool::ANY, s2 in prop::bool::ANY,
        ) {
            let sg = |b: bool| if b { 1 } else { -1 };
            let signs = (sg(s0), sg(s1), sg(s2));
            let r = quartic_eta_report(e, e1, e2, signs).unwrap();
            prop_assert!((r.residue - r.quadrature).abs() <= 1e-9 * r.residue.abs() + 1e-14);
        }

        #[test]
        fn prop_q3_bounded(p in arb_mom(3.0), p1 in arb_mom(3.0), p2 in arb_mom(3.0)) {
            let d = ChargeDensity::gaussian(0.5).unwrap();
            let v = q3_integrand_trace(&p, &p1, &p2, &d).unwrap();
            let b = q3_bound(&p, &p1, &p2, &d).unwrap();
            prop_assert!(v.norm() <= b * (1.0 + 1e-12));
        }
    }
}
