//! One-dimensional periodic lattice Dirac model: a charge-conjugation
//! symmetric test bed, the momentum-cutoff potentials `K^ε` and the
//! trapped-eigenvalue index triple.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::projector::{hermitian_norm, pair_index, projector_from_eigen, spectral_distance, HermitianOperator, ProjectorPair};

/// `n` sites (odd) with spacing `a` on a ring of length `n·a`, centered on 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    sites: usize,
    spacing: f64,
}

impl Lattice {
    pub fn new(sites: usize, spacing: f64) -> Result<Self> {
        if sites < 3 || sites.is_multiple_of(2) {
            return Err(Error::invalid("lattice needs an odd number of sites ≥ 3"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("lattice spacing must be positive"));
        }
        Ok(Lattice { sites, spacing })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.sites as f64 * self.spacing
    }

    fn centered(&self, j: usize) -> f64 {
        j as f64 - (self.sites - 1) as f64 / 2.0
    }

    pub fn position(&self, j: usize) -> f64 {
        self.centered(j) * self.spacing
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * self.centered(m) / self.length()
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber(self.sites - 1)
    }

    /// Unitary `F_{mj} = e^{−i k_m x_j}/√n`.
    pub fn dft(&self) -> DMatrix<Complex64> {
        let n = self.sites;
        let s = 1.0 / (n as f64).sqrt();
        DMatrix::from_fn(n, n, |m, j| Complex64::from_polar(s, -self.wavenumber(m) * self.position(j)))
    }

    /// `F† diag(f(k)) F`
    pub fn momentum_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let fm = self.dft();
        let d = DVector::from_fn(self.sites, |m, _| Complex64::new(f(self.wavenumber(m)), 0.0));
        let out = fm.adjoint() * DMatrix::from_diagonal(&d) * fm;
        (&out + out.adjoint()) * Complex64::new(0.5, 0.0)
    }

    pub fn momentum(&self) -> DMatrix<Complex64> {
        self.momentum_function(|k| k)
    }

    /// Spectral projector of the momentum onto `|k| ≤ cut`.
    pub fn momentum_projector(&self, cut: f64) -> DMatrix<Complex64> {
        self.momentum_function(|k| if k.abs() <= cut { 1.0 } else { 0.0 })
    }
}

/// `I₂ ⊗ m`
pub fn two_block(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out.view_mut((n, n), (n, n)).copy_from(m);
    out
}

/// `[[1, p], [p, −1]]`, spectrum `±√(1+k²)`.
pub fn free_dirac(lat: &Lattice) -> HermitianOperator<Complex64> {
    let n = lat.sites();
    let p = lat.momentum();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(1.0, 0.0);
        h[(n + i, n + i)] = Complex64::new(-1.0, 0.0);
    }
    h.view_mut((0, n), (n, n)).copy_from(&p);
    h.view_mut((n, 0), (n, n)).copy_from(&p);
    HermitianOperator::new(h).expect("square")
}

/// `1/√(x² + w²)` on the sites.
pub fn soft_coulomb(lat: &Lattice, w: f64) -> Vec<f64> {
    (0..lat.sites()).map(|j| 1.0 / lat.position(j).hypot(w)).collect()
}

/// `I₂ ⊗ diag(φ)`
pub fn potential_operator(phi: &[f64]) -> HermitianOperator<Complex64> {
    let d = DVector::from_iterator(phi.len(), phi.iter().map(|&v| Complex64::new(v, 0.0)));
    HermitianOperator::new(two_block(&DMatrix::from_diagonal(&d))).expect("square")
}

/// `max |S m̄ S − sign·m|` with `S` swapping the two blocks.
pub fn charge_conjugation_defect(m: &DMatrix<Complex64>, sign: f64) -> f64 {
    let n = m.nrows() / 2;
    let conj = DMatrix::from_fn(2 * n, 2 * n, |r, c| m[((r + n) % (2 * n), (c + n) % (2 * n))].conj());
    (conj - m * Complex64::new(sign, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `K^ε = F_ε Φ_ε F_ε` with `F_ε` the momentum projector onto `|k| ≤ 1/ε`
/// and `Φ_ε` the potential cut to `|x| ≤ 1/ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffPotential {
    pub eps: f64,
    pub k: DMatrix<Complex64>,
    /// `L = √Φ_ε F_ε`, so that `K = L†L`.
    pub factor: DMatrix<Complex64>,
    /// `Φ_ε` in the two-block space.
    pub truncated: DMatrix<Complex64>,
}

impl CutoffPotential {
    pub fn new(lat: &Lattice, phi: &[f64], eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid("cutoff ε must be positive"));
        }
        if phi.len() != lat.sites() || phi.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("potential must be nonnegative on every site"));
        }
        let cut: Vec<f64> = (0..lat.sites())
            .map(|j| if lat.position(j).abs() <= 1.0 / eps { phi[j] } else { 0.0 })
            .collect();
        let fe = two_block(&lat.momentum_projector(1.0 / eps));
        let root = two_block(&DMatrix::from_diagonal(&DVector::from_iterator(
            cut.len(),
            cut.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)),
        )));
        let truncated = potential_operator(&cut).matrix().clone();
        let k = &fe * &truncated * &fe;
        let k = (&k + k.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(CutoffPotential {
            eps,
            k,
            factor: root * fe,
            truncated,
        })
    }

    pub fn factorization_residual(&self) -> f64 {
        let llt = self.factor.adjoint() * &self.factor;
        (&self.k - llt).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.k.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffRow {
    pub eps: f64,
    pub min_eigenvalue: f64,
    pub factorization_residual: f64,
    /// `‖K^ε − Φ‖`
    pub distance: f64,
    /// `λ‖K^ε − Φ‖`, the Weyl bound on eigenvalue shifts.
    pub shift_bound: f64,
    /// Largest shift between sorted eigenvalues of `H₀ − λK^ε` and `H₀ − λΦ`.
    pub max_shift: f64,
    /// `tr(P_γ^{λK^ε} − P_γ⁰)`
    pub trace: f64,
    /// `λ‖K^ε − Φ‖ < gap/2`
    pub within_half_gap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffReport {
    pub lambda: f64,
    pub gamma: f64,
    /// Distance from γ to the spectrum of `H₀ − λΦ`.
    pub gap: f64,
    /// `tr(P_γ^{λΦ} − P_γ⁰)`
    pub reference_trace: f64,
    /// Rows in the order the cutoffs were given.
    pub rows: Vec<CutoffRow>,
    /// Largest ε from which every smaller tested cutoff is within half the gap.
    pub threshold: Option<f64>,
}

impl CutoffReport {
    pub fn all_psd(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.min_eigenvalue >= -tol && r.factorization_residual <= tol)
    }

    /// Rows sorted by decreasing ε have strictly decreasing distances.
    pub fn strictly_decreasing(&self) -> bool {
        let mut rows: Vec<&CutoffRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }

    pub fn shifts_within_bound(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.max_shift <= r.shift_bound + tol)
    }

    /// Below the threshold every trace is within `tol` of the reference integer.
    pub fn index_stable(&self, tol: f64) -> bool {
        let reference = self.reference_trace.round();
        (self.reference_trace - reference).abs() <= tol
            && self.threshold.is_some()
            && self
                .rows
                .iter()
                .filter(|r| r.eps <= self.threshold.unwrap())
                .all(|r| (r.trace - reference).abs() <= tol)
    }
}

/// Check PSD, convergence, Weyl shifts and index stability of `K^ε` along a
/// list of cutoffs.
pub fn cutoff_family_check(
    lat: &Lattice,
    phi: &[f64],
    eps_list: &[f64],
    h0: &HermitianOperator<Complex64>,
    lambda: f64,
    gamma: f64,
) -> Result<CutoffReport> {
    let phi_op = potential_operator(phi);
    let (v0, e0) = h0.eigen();
    let p0 = projector_from_eigen(&v0, &e0, gamma)?;
    let (vf, ef) = h0.shifted(lambda, &phi_op).eigen();
    let gap = spectral_distance(&vf, gamma);
    let reference_trace = (projector_from_eigen(&vf, &ef, gamma)? - &p0).trace().re;
    let rows = crate::parallel::try_map_ordered(eps_list, |&eps| {
        let cp = CutoffPotential::new(lat, phi, eps)?;
        let distance = hermitian_norm(&(&cp.k - phi_op.matrix()));
        let kop = HermitianOperator::new(cp.k.clone())?;
        let (ve, ee) = h0.shifted(lambda, &kop).eigen();
        let max_shift = ve.iter().zip(&vf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let trace = (projector_from_eigen(&ve, &ee, gamma)? - &p0).trace().re;
        Ok(CutoffRow {
            eps,
            min_eigenvalue: cp.min_eigenvalue(),
            factorization_residual: cp.factorization_residual(),
            distance,
            shift_bound: lambda * distance,
            max_shift,
            trace,
            within_half_gap: lambda * distance < 0.5 * gap,
        })
    })?;
    let mut by_eps: Vec<&CutoffRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let mut threshold = None;
    for r in by_eps {
        if !r.within_half_gap {
            break;
        }
        threshold = Some(r.eps);
    }
    Ok(CutoffReport {
        lambda,
        gamma,
        gap,
        reference_trace,
        rows,
        threshold,
    })
}

/// Parameters and indices of the three-term split of `ind(P_γ^{λ̄}, P_γ⁰)`
/// through an intermediate coupling where the lowest gap eigenvalue is
/// trapped between `γ′` and `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappedTriple {
    pub lambda_bar: f64,
    pub lambda_prime: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// `e₁(λ′)`
    pub trapped_energy: f64,
    /// `ind(P_γ^{λ̄}, P_γ⁰)`
    pub lhs: i64,
    /// `ind(P_γ^{λ̄}, P_γ^{λ′})`, `ind(P_γ^{λ′}, P_{γ′}^{λ′})`, `ind(P_{γ′}^{λ′}, P_{γ′}⁰)`
    pub terms: [i64; 3],
    /// Eigenvalues of `H₀ − λ′K` in `(γ′, γ)`.
    pub trapped_rank: usize,
}

/// Build the trapped-eigenvalue triple for `H₀ − λK`, `K ≥ 0`, with the sea
/// edge at `edge`: λ̄ sits midway between the couplings where the first and
/// second gap eigenvalues reach the edge, γ midway between the edge and
/// `e₂(λ̄)`, λ′ puts `e₁` midway between the edge and γ, and γ′ midway
/// between the edge and `e₁(λ′)`.
pub fn trapped_eigenvalue_triple(
    h0: &HermitianOperator<Complex64>,
    k: &HermitianOperator<Complex64>,
    edge: f64,
    lambda_max: f64,
) -> Result<TrappedTriple> {
    let sea = h0.eigenvalues().iter().filter(|&&e| e <= edge + 1e-9).count();
    let level = |lambda: f64, i: usize| h0.shifted(lambda, k).eigenvalues()[sea + i];
    let crossing = |i: usize, target: f64| -> Option<f64> {
        if level(lambda_max, i) >= target {
            return None;
        }
        let (mut lo, mut hi) = (0.0, lambda_max);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if level(mid, i) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let l1 = crossing(0, edge).ok_or_else(|| Error::invalid("no gap eigenvalue reaches the sea edge below λ_max"))?;
    let l2 = crossing(1, edge).unwrap_or(lambda_max);
    let lambda_bar = 0.5 * (l1 + l2);
    let gamma = 0.5 * (edge + level(lambda_bar, 1));
    let lambda_prime = crossing(0, 0.5 * (edge + gamma)).ok_or_else(|| Error::invalid("trapped coupling not found"))?;
    let trapped_energy = level(lambda_prime, 0);
    let gamma_prime = 0.5 * (edge + trapped_energy);

    let proj = |lambda: f64, g: f64| {
        let (v, e) = h0.shifted(lambda, k).eigen();
        projector_from_eigen(&v, &e, g)
    };
    let p_bar = proj(lambda_bar, gamma)?;
    let p_prime = proj(lambda_prime, gamma)?;
    let p_prime_low = proj(lambda_prime, gamma_prime)?;
    let p0_low = proj(0.0, gamma_prime)?;
    let p0 = proj(0.0, gamma)?;
    let ind = |p: &DMatrix<Complex64>, q: &DMatrix<Complex64>| -> Result<i64> {
        Ok(pair_index(&ProjectorPair::with_tolerance(p.clone(), q.clone(), 1e-8)?))
    };
    let trapped_rank = h0
        .shifted(lambda_prime, k)
        .eigenvalues()
        .iter()
        .filter(|&&e| e > gamma_prime && e < gamma)
        .count();
    Ok(TrappedTriple {
        lambda_bar,
        lambda_prime,
        gamma,
        gamma_prime,
        trapped_energy,
        lhs: ind(&p_bar, &p0)?,
        terms: [ind(&p_bar, &p_prime)?, ind(&p_prime, &p_prime_low)?, ind(&p_prime_low, &p0_low)?],
        trapped_rank,
    })
}
