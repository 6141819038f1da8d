//! First-order vacuum polarization: the Uehling function `C(k)`, the induced
//! density `ρ̂₁(k) = eλ·4π n̂(k) C(k)/k²` and its radial profile.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flow::electron_charge;
use crate::nuclear::ChargeDensity;
use crate::parallel;
use crate::quadrature::{integrate, GaussLegendre, integrate_panels, integrate_semi_infinite, oscillatory_integral, Adaptive, Trig};

/// Below this momentum `C` is evaluated from its Taylor series.
pub const SERIES_CUTOFF: f64 = 1e-2;
/// Above this momentum the closed form is used as written.
const CLOSED_FROM: f64 = 2.0;

/// `k⁴/15 − k⁶/140 + k⁸/945`
pub fn c_series(k: f64) -> f64 {
    let k2 = k * k;
    k2 * k2 * (1.0 / 15.0 - k2 / 140.0 + k2 * k2 / 945.0)
}

/// `C(k) = k²·½∫₀¹(1−x²) log(1 + k²(1−x²)/4) dx` by adaptive 64-point
/// Gauss–Legendre.
pub fn c_integral(k: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let a = 0.25 * k * k;
    let f = |x: f64| {
        let u = 1.0 - x * x;
        0.5 * u * (a * u).ln_1p()
    };
    let opts = Adaptive::with_tol(f64::MIN_POSITIVE, 1e-14).order(64).depth(60);
    let v: f64 = integrate(f, 0.0, 1.0, opts).expect("smooth integrand on [0, 1]");
    k * k * v
}

/// Closed form of `C(k)`, with the series below [`SERIES_CUTOFF`] and a
/// cancellation-free expansion in `w = k²/(k²+4)` up to `k = 2`.
pub fn c_closed(k: f64) -> f64 {
    let k = k.abs();
    if k == 0.0 {
        0.0
    } else if k < SERIES_CUTOFF {
        c_series(k)
    } else if k <= CLOSED_FROM {
        c_w_series(k)
    } else {
        c_literal(k)
    }
}

/// `(k²/3)[(1−2/k²)s·log((s+1)/(s−1)) + 4/k² − 5/3]`, `s = √(1+4/k²)`.
pub fn c_literal(k: f64) -> f64 {
    let k2 = k * k;
    let s = (1.0 + 4.0 / k2).sqrt();
    // (s+1)/(s−1) = (s+1)²k²/4
    let log = 2.0 * ((s + 1.0) * k / 2.0).ln();
    k2 / 3.0 * ((1.0 - 2.0 / k2) * s * log + 4.0 / k2 - 5.0 / 3.0)
}

fn c_w_series(k: f64) -> f64 {
    let k2 = k * k;
    let w = k2 / (k2 + 4.0);
    let mut sum = 0.0;
    let mut wm = 1.0;
    for m in 0..400 {
        let mf = m as f64;
        let t = wm * 4.0 * (mf + 3.0) / ((2.0 * mf + 3.0) * (2.0 * mf + 5.0));
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
        wm *= w;
    }
    k2 * w * sum / 3.0
}

/// `C(k)/k⁴`, finite at the origin.
fn c_over_k4(k: f64) -> f64 {
    if k < SERIES_CUTOFF {
        let k2 = k * k;
        1.0 / 15.0 - k2 / 140.0 + k2 * k2 / 945.0
    } else {
        let k2 = k * k;
        c_closed(k) / (k2 * k2)
    }
}

/// First-order induced charge of a nucleus at coupling λ.
#[derive(Debug, Clone, PartialEq)]
pub struct UehlingProfile {
    pub density: ChargeDensity,
    pub lambda: f64,
    /// Electron charge parameter `e`.
    pub charge: f64,
    pub k_grid: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Net and absolute induced charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeBalance {
    /// `4π∫ρ₁ r² dr`
    pub net: f64,
    /// `4π∫|ρ₁| r² dr`
    pub absolute: f64,
}

impl ChargeBalance {
    pub fn relative(&self) -> f64 {
        self.net.abs() / self.absolute
    }
}

impl UehlingProfile {
    /// Profile with the physical charge `e = −√α` and no samples.
    pub fn new(density: ChargeDensity, lambda: f64) -> Self {
        Self::with_charge(density, lambda, electron_charge())
    }

    pub fn with_charge(density: ChargeDensity, lambda: f64, charge: f64) -> Self {
        UehlingProfile {
            density,
            lambda,
            charge,
            k_grid: Vec::new(),
            rho_hat: Vec::new(),
            r_grid: Vec::new(),
            rho: Vec::new(),
        }
    }

    /// `eλ·4π n̂(k) C(k)/k²`, zero at the origin.
    pub fn rho1_fourier(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let k = k.abs();
        self.charge * self.lambda * 4.0 * PI * self.density.fourier_at(k) * c_closed(k) / (k * k)
    }

    /// `ρ₁(r) = (2π²r)⁻¹∫₀^∞ k sin(kr) ρ̂₁(k) dk`.
    pub fn rho1_radial(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::invalid("radial density needs r > 0"));
        }
        let scale = self.charge * self.lambda * 4.0 * PI / (2.0 * PI * PI * r);
        let opts = Adaptive::with_tol(1e-300, 1e-11).order(20);
        let integral = match &self.density {
            ChargeDensity::UniformBall { radius } => ball_transform(*radius, r, opts)?,
            d => {
                let d = d.clone();
                oscillatory_integral(move |k: f64| d.fourier_at(k) * c_over_k4(k) * k * k * k, r, Trig::Sin, opts, 20_000)?
            }
        };
        Ok(scale * integral)
    }

    /// Fill the momentum and radial samples.
    pub fn sampled(mut self, k_grid: Vec<f64>, r_grid: Vec<f64>) -> Result<Self> {
        self.rho_hat = parallel::map_ordered(&k_grid, |&k| self.rho1_fourier(k));
        self.rho = parallel::try_map_ordered(&r_grid, |&r| self.rho1_radial(r))?;
        self.k_grid = k_grid;
        self.r_grid = r_grid;
        Ok(self)
    }

    /// Radial breakpoints resolving the nucleus and the Compton-scale tail.
    fn radial_breaks(&self, r_max: f64) -> Vec<f64> {
        let size = self.density.size();
        let mut b = vec![0.0];
        let mut r = 1e-3 * size;
        while r < r_max {
            b.push(r);
            r *= 2.0;
        }
        if let ChargeDensity::UniformBall { radius } = self.density {
            b.push(radius);
        }
        b.push(r_max);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Net and absolute induced charge inside `r_max` by radial quadrature.
    /// The net charge is resolved to `1e−8` of the absolute charge.
    pub fn total_charge(&self, r_max: f64) -> Result<ChargeBalance> {
        let breaks = self.radial_breaks(r_max);
        let shell = |r: f64| self.rho1_radial(r).map(|v| v * 4.0 * PI * r * r);
        // Composite fixed rule for the normalizer; |ρ₁| has kinks at sign changes.
        let gl = GaussLegendre::cached(20);
        let cells: Vec<(f64, f64)> = breaks
            .windows(2)
            .flat_map(|w| (0..8).map(move |i| (w[0] + (w[1] - w[0]) * i as f64 / 8.0, w[0] + (w[1] - w[0]) * (i + 1) as f64 / 8.0)))
            .collect();
        let abs_parts = parallel::try_map_ordered(&cells, |&(a, b)| -> Result<f64> {
            let mut acc = 0.0;
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
                acc += 0.5 * (b - a) * w * shell(r)?.abs();
            }
            Ok(acc)
        })?;
        let absolute: f64 = abs_parts.iter().sum();
        let opts = Adaptive::with_abs(1e-8 * absolute).order(20).depth(40);
        let net: f64 = integrate_panels(|r: f64| shell(r).unwrap_or(f64::NAN), &breaks, opts)?;
        if !net.is_finite() {
            return Err(Error::QuadratureNonConvergence("induced density failed on the radial grid".into()));
        }
        Ok(ChargeBalance { net, absolute })
    }

    /// `4π∫₀^r ρ₁ s² ds` at each radius of an ascending grid.
    pub fn cumulative_charge(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(radii);
        let opts = Adaptive::with_abs(1e-12);
        let idx: Vec<usize> = (0..radii.len()).collect();
        let pieces = parallel::try_map_ordered(&idx, |&i| {
            let (a, b) = (bounds[i], bounds[i + 1]);
            if b <= a {
                return Ok(0.0);
            }
            let breaks: Vec<f64> = self.radial_breaks(b).into_iter().filter(|&x| x >= a && x <= b).collect();
            let mut br = vec![a];
            br.extend(breaks.into_iter().filter(|&x| x > a));
            integrate_panels(|r: f64| self.rho1_radial(r).unwrap_or(f64::NAN) * 4.0 * PI * r * r, &br, opts)
        })?;
        let mut acc = 0.0;
        Ok(pieces
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect())
    }
}

/// `∫₀^∞ k sin(kr) n̂(k) C(k)/k² dk` for the uniform ball, split into pure
/// frequencies `r ± R` so each tail oscillates cleanly.
fn ball_transform(radius: f64, r: f64, opts: Adaptive) -> Result<f64> {
    let delta = r - radius;
    let sigma = r + radius;
    let ad = delta.abs();
    let panels = 20_000;
    let i1 = if ad == 0.0 {
        integrate_semi_infinite(c_over_k4, opts, 200)?
    } else {
        oscillatory_integral(c_over_k4, ad, Trig::Cos, opts, panels)?
    };
    let i2 = oscillatory_integral(c_over_k4, sigma, Trig::Cos, opts, panels)?;
    let kc = |k: f64| k * c_over_k4(k);
    let i3 = oscillatory_integral(kc, sigma, Trig::Sin, opts, panels)?;
    let i4 = delta.signum() * oscillatory_integral(kc, ad, Trig::Sin, opts, panels)?;
    let r3 = radius * radius * radius;
    Ok(3.0 / r3 * (0.5 * i1 - 0.5 * i2 - 0.5 * radius * (i3 + i4)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn closed_and_integral_agree() {
        let mut worst: f64 = 0.0;
        for k in log_grid(1e-3, 1e3, 100) {
            let a = c_integral(k);
            let b = c_closed(k);
            worst = worst.max((a - b).abs() / b);
        }
        assert!(worst <= 1e-10, "worst relative gap {worst:e}");
        assert!((c_integral(10.0) / c_closed(10.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn limits() {
        assert_eq!(c_integral(0.0), 0.0);
        assert_eq!(c_closed(0.0), 0.0);
        assert!((c_integral(1e-3) / 1e-12 * 15.0 - 1.0).abs() < 1e-5);
        let k: f64 = 1e6;
        let asym = (k * k).ln() / 3.0 - 5.0 / 9.0;
        assert!((c_closed(k) / (k * k) - asym).abs() < 1e-4);
        assert!(log_grid(1e-4, 1e6, 60).into_iter().all(|k| c_closed(k) > 0.0));
    }

    #[test]
    fn branches_agree_in_overlap() {
        for k in log_grid(5e-3, 5e-2, 20) {
            let s = c_series(k);
            assert!((s - c_w_series(k)).abs() <= 1e-10 * s);
            assert!((s - c_integral(k)).abs() <= 1e-10 * s);
        }
        for k in log_grid(0.5, 4.0, 20) {
            assert!((c_w_series(k) / c_literal(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_density_sign_and_linearity() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        let p = UehlingProfile::new(d.clone(), 0.5);
        assert_eq!(p.rho1_fourier(0.0), 0.0);
        assert!([0.1, 1.0, 10.0, 100.0].iter().all(|&k| p.rho1_fourier(k) < 0.0));
        let q = UehlingProfile::with_charge(d.clone(), 1.0, 2.0 * electron_charge());
        for k in [0.3, 7.0] {
            assert!((q.rho1_fourier(k) - 4.0 * p.rho1_fourier(k)).abs() <= 1e-15 * q.rho1_fourier(k).abs());
        }
        let unit = UehlingProfile::with_charge(d, 1.0, 1.0);
        let k: f64 = 200.0;
        let by_factors = 4.0 * PI * (-0.5 * 0.05f64.powi(2) * k * k).exp() * c_closed(k) / (k * k);
        assert!((unit.rho1_fourier(k) - by_factors).abs() <= 1e-13 * by_factors);
    }

    #[test]
    fn gaussian_profile_is_neutral() {
        let p = UehlingProfile::with_charge(ChargeDensity::gaussian(0.05).unwrap(), 1.0, 1.0);
        let bal = p.total_charge(25.0).unwrap();
        assert!(bal.relative() <= 1e-6, "{bal:?}");
    }

    #[test]
    fn ball_profile_is_neutral() {
        let p = UehlingProfile::with_charge(ChargeDensity::uniform_ball(0.02).unwrap(), 1.0, 1.0);
        let bal = p.total_charge(25.0).unwrap();
        assert!(bal.relative() <= 1e-6, "{bal:?}");
    }

    #[test]
    fn radial_profile_changes_sign_and_decays() {
        let p = UehlingProfile::with_charge(ChargeDensity::gaussian(0.05).unwrap(), 1.0, 1.0);
        let near = p.rho1_radial(0.01).unwrap();
        let far = p.rho1_radial(1.0).unwrap();
        assert!(near.signum() != far.signum());
        // r⁴|ρ₁| keeps falling outside the Compton scale
        let weighted: Vec<f64> = [2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|&r: &f64| r.powi(4) * p.rho1_radial(r).unwrap().abs()).collect();
        assert!(weighted.windows(2).all(|w| w[1] < w[0]), "{weighted:?}");
        assert!(p.rho1_radial(0.0).is_err());
    }
}
