//! Nuclear charge profiles normalized to unit charge, their Fourier
//! transforms `n̂(k) = ∫ n(x) e^{−ik·x} dx`, potentials `φ = |·|⁻¹ * n` and
//! the Hilbert–Schmidt regularity integral.

use std::f64::consts::PI;

use libm::erf;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, Adaptive, GaussLegendre};

/// A spherically symmetric charge density with `∫ n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChargeDensity {
    /// `(2πs²)^{−3/2} exp(−r²/2s²)`
    Gaussian { s: f64 },
    /// `3/(4πR³)` inside radius `R`.
    UniformBall { radius: f64 },
    Tabulated(Table),
}

impl ChargeDensity {
    pub fn gaussian(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid(format!(
                "gaussian width must be positive (got {s}); point charges are not admissible"
            )));
        }
        Ok(ChargeDensity::Gaussian { s })
    }

    pub fn uniform_ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "ball radius must be positive (got {radius}); point charges are not admissible"
            )));
        }
        Ok(ChargeDensity::UniformBall { radius })
    }

    pub fn tabulated(r: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        Table::new(r, n).map(ChargeDensity::Tabulated)
    }

    /// Parse two whitespace-separated columns `r n(r)`; `#` starts a comment.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let mut r = Vec::new();
        let mut n = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected 2 columns, found {}", lineno + 1, cols.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            r.push(parse(cols[0])?);
            n.push(parse(cols[1])?);
        }
        Self::tabulated(r, n)
    }

    /// Characteristic length: `s`, `R`, or the last tabulated radius.
    pub fn size(&self) -> f64 {
        match self {
            ChargeDensity::Gaussian { s } => *s,
            ChargeDensity::UniformBall { radius } => *radius,
            ChargeDensity::Tabulated(t) => *t.r.last().expect("nonempty"),
        }
    }

    pub fn density_at(&self, r: f64) -> f64 {
        match self {
            ChargeDensity::Gaussian { s } => (2.0 * PI * s * s).powf(-1.5) * (-r * r / (2.0 * s * s)).exp(),
            ChargeDensity::UniformBall { radius } => {
                if r <= *radius {
                    3.0 / (4.0 * PI * radius.powi(3))
                } else {
                    0.0
                }
            }
            ChargeDensity::Tabulated(t) => t.density(r),
        }
    }

    pub fn fourier_at(&self, k: f64) -> f64 {
        let k = k.abs();
        match self {
            ChargeDensity::Gaussian { s } => (-0.5 * s * s * k * k).exp(),
            ChargeDensity::UniformBall { radius } => ball_form_factor(k * radius),
            ChargeDensity::Tabulated(t) => t.fourier(k),
        }
    }

    pub fn potential_at(&self, r: f64) -> f64 {
        match self {
            ChargeDensity::Gaussian { s } => {
                let x = r / (s * 2f64.sqrt());
                if x < 1e-5 {
                    // erf(x)/r = √(2/π)/s · (1 − x²/3 + …)
                    (2.0 / PI).sqrt() / s * (1.0 - x * x / 3.0)
                } else {
                    erf(x) / r
                }
            }
            ChargeDensity::UniformBall { radius } => {
                let big_r = *radius;
                if r <= big_r {
                    (3.0 * big_r * big_r - r * r) / (2.0 * big_r.powi(3))
                } else {
                    1.0 / r
                }
            }
            ChargeDensity::Tabulated(t) => t.potential(r),
        }
    }

    /// `φ̂(k) = 4π n̂(k)/k²`, infinite at `k = 0`.
    pub fn coulomb_fourier(&self, k: f64) -> f64 {
        if k == 0.0 {
            return f64::INFINITY;
        }
        4.0 * PI * self.fourier_at(k) / (k * k)
    }

    /// `∫_{ℝ³} dk k² log(2+|k|)|φ̂(k)|²/(1+|k|) = 64π³ ∫₀^∞ log(2+k) n̂(k)²/(1+k) dk`.
    pub fn regularity_integral(&self) -> Result<f64> {
        regularity_integral_of(|k| self.fourier_at(k))
    }
}

/// Regularity integral for an arbitrary radial form factor `n̂`.
pub fn regularity_integral_of<F: Fn(f64) -> f64>(nhat: F) -> Result<f64> {
    let f = |k: f64| {
        let n = nhat(k);
        (2.0 + k).ln() * n * n / (1.0 + k)
    };
    let v = integrate_semi_infinite(f, Adaptive::with_tol(1e-14, 1e-11).depth(50), 200)?;
    Ok(64.0 * PI.powi(3) * v)
}

fn ball_form_factor(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2 * x2 * x2 / 15120.0
    } else {
        3.0 * (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// Monotone cubic (Fritsch–Carlson) interpolant of tabulated radial samples,
/// rescaled to unit total charge. Constant below the first radius, zero
/// beyond the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    r: Vec<f64>,
    n: Vec<f64>,
    slopes: Vec<f64>,
    /// Charge enclosed at each knot.
    enclosed: Vec<f64>,
    /// `4π∫_{r_i}^{r_last} n(s) s ds`.
    outer: Vec<f64>,
}

impl Table {
    pub fn new(r: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        if r.len() != n.len() {
            return Err(Error::Parse("radius and density columns differ in length".into()));
        }
        if r.len() < 4 {
            return Err(Error::invalid("density table needs at least 4 samples"));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("radii must be nonnegative and strictly increasing"));
        }
        if n.iter().chain(r.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("density table contains non-finite values"));
        }
        if n.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid("density must be nonnegative"));
        }
        let slopes = fritsch_carlson_slopes(&r, &n);
        let mut t = Table {
            r,
            n,
            slopes,
            enclosed: Vec::new(),
            outer: Vec::new(),
        };
        let total = t.raw_moments();
        if !(total > 0.0) {
            return Err(Error::invalid("density table carries no charge"));
        }
        for v in t.n.iter_mut().chain(t.slopes.iter_mut()) {
            *v /= total;
        }
        t.raw_moments();
        Ok(t)
    }

    /// Fill the knot moments of the current samples; returns the total charge.
    fn raw_moments(&mut self) -> f64 {
        let m = self.r.len();
        let gl = GaussLegendre::cached(10);
        let mut enc = vec![0.0; m];
        // core below the first knot carries the constant value n(r₀)
        enc[0] = 4.0 * PI * self.n[0] * self.r[0].powi(3) / 3.0;
        for i in 1..m {
            let q = gl.integrate(&|s: f64| self.density(s) * s * s, self.r[i - 1], self.r[i]);
            enc[i] = enc[i - 1] + 4.0 * PI * q;
        }
        let mut out = vec![0.0; m];
        for i in (0..m - 1).rev() {
            let q = gl.integrate(&|s: f64| self.density(s) * s, self.r[i], self.r[i + 1]);
            out[i] = out[i + 1] + 4.0 * PI * q;
        }
        self.enclosed = enc;
        self.outer = out;
        self.enclosed[m - 1]
    }

    fn segment(&self, r: f64) -> usize {
        match self.r.binary_search_by(|x| x.partial_cmp(&r).expect("finite")) {
            Ok(i) => i.min(self.r.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.r.len() - 2),
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        let last = *self.r.last().expect("nonempty");
        if r <= self.r[0] {
            return self.n[0];
        }
        if r > last {
            return 0.0;
        }
        let i = self.segment(r);
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (h00 * self.n[i] + h10 * h * self.slopes[i] + h01 * self.n[i + 1] + h11 * h * self.slopes[i + 1]).max(0.0)
    }

    /// Newton shells: `Q(r)/r + 4π∫_r^∞ n(s) s ds`, and `1/r` beyond the table.
    pub fn potential(&self, r: f64) -> f64 {
        let last = *self.r.last().expect("nonempty");
        if r >= last {
            return 1.0 / r.max(f64::MIN_POSITIVE);
        }
        let gl = GaussLegendre::cached(10);
        if r <= self.r[0] {
            let n0 = self.n[0];
            // inside the constant core
            let inner = 4.0 * PI * n0 * r * r / 3.0;
            let shell = 4.0 * PI * n0 * 0.5 * (self.r[0] * self.r[0] - r * r);
            return inner + shell + self.outer[0];
        }
        let i = self.segment(r);
        let q_in = self.enclosed[i] + 4.0 * PI * gl.integrate(&|s: f64| self.density(s) * s * s, self.r[i], r);
        let out = self.outer[i + 1] + 4.0 * PI * gl.integrate(&|s: f64| self.density(s) * s, r, self.r[i + 1]);
        q_in / r + out
    }

    /// `4π∫ n(r) r² sinc(kr) dr`.
    pub fn fourier(&self, k: f64) -> f64 {
        let sinc = |x: f64| if x.abs() < 1e-6 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        let opts = Adaptive::with_tol(1e-14, 1e-12).depth(30);
        let mut total = 0.0;
        let core = |s: f64| self.n[0] * s * s * sinc(k * s);
        total += integrate(core, 0.0, self.r[0], opts).unwrap_or(0.0);
        for w in self.r.windows(2) {
            let f = |s: f64| self.density(s) * s * s * sinc(k * s);
            total += integrate(f, w[0], w[1], opts).unwrap_or_else(|_| GaussLegendre::cached(64).integrate(&f, w[0], w[1]));
        }
        4.0 * PI * total
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; m];
    d[0] = delta[0];
    d[m - 1] = delta[m - 2];
    for k in 1..m - 1 {
        if delta[k - 1] * delta[k] <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    // Endpoint limiter keeps the end segments monotone.
    for (k, dk) in [(0usize, 0usize), (m - 1, m - 2)] {
        if d[k] * delta[dk] < 0.0 {
            d[k] = 0.0;
        } else if d[k].abs() > 3.0 * delta[dk].abs() {
            d[k] = 3.0 * delta[dk];
        }
    }
    d
}

/// `4π∫₀^∞ n(r) r² dr` by quadrature, the normalization check.
pub fn total_charge(d: &ChargeDensity) -> Result<f64> {
    let f = |r: f64| 4.0 * PI * d.density_at(r) * r * r;
    let opts = Adaptive::with_tol(1e-15, 1e-13).depth(50);
    match d {
        ChargeDensity::Gaussian { s } => integrate(f, 0.0, 40.0 * s, opts),
        ChargeDensity::UniformBall { radius } => integrate(f, 0.0, *radius, opts),
        ChargeDensity::Tabulated(t) => {
            let mut q = integrate(f, 0.0, t.r[0], opts)?;
            for w in t.r.windows(2) {
                q += integrate(f, w[0], w[1], opts)?;
            }
            Ok(q)
        }
    }
}

/// Charge enclosed within each of the increasing `radii`, accumulated panel by panel.
pub fn enclosed_charge(d: &ChargeDensity, radii: &[f64]) -> Result<Vec<f64>> {
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("radii must be finite, nonnegative and nondecreasing"));
    }
    let kinks: Vec<f64> = match d {
        ChargeDensity::Gaussian { .. } => Vec::new(),
        ChargeDensity::UniformBall { radius } => vec![*radius],
        ChargeDensity::Tabulated(t) => t.r.clone(),
    };
    let f = |r: f64| 4.0 * PI * d.density_at(r) * r * r;
    let opts = Adaptive::with_tol(1e-15, 1e-13).depth(50);
    let mut out = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in radii {
        let mut breaks = vec![prev];
        breaks.extend(kinks.iter().copied().filter(|&k| k > prev && k < r));
        breaks.push(r);
        for w in breaks.windows(2) {
            acc += integrate(f, w[0], w[1], opts)?;
        }
        out.push(acc);
        prev = r;
    }
    Ok(out)
}

/// Newton-shell potential by quadrature, the cross-check for the closed forms.
pub fn potential_by_shells(d: &ChargeDensity, r: f64) -> Result<f64> {
    let opts = Adaptive::with_tol(1e-15, 1e-13).depth(50);
    let rmax = match d {
        ChargeDensity::Gaussian { s } => 40.0 * s,
        _ => d.size(),
    };
    let inner = if r > 0.0 {
        integrate(|s: f64| 4.0 * PI * d.density_at(s) * s * s, 0.0, r.min(rmax), opts)? / r
    } else {
        0.0
    };
    let outer = if r < rmax {
        integrate(|s: f64| 4.0 * PI * d.density_at(s) * s, r, rmax, opts)?
    } else {
        0.0
    };
    Ok(inner + outer)
}
