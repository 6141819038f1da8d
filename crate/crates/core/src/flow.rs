//! λ sweeps of the radial operator, eigenvalue trajectories, diving
//! couplings and the counting function `d(λ)`.
//!
//! Trajectories are labelled by Sturm index: the sorted eigenvalue with global
//! index `N + i` is trajectory `i`. For an irreducible tridiagonal family with
//! a monotone potential this labelling is continuous in λ, and trajectory 0 is
//! the lowest bound state, the first to dive.

use crate::error::{Error, Result};
use crate::nuclear::ChargeDensity;
use crate::parallel;
use crate::projector::HermitianOperator;
use crate::radial::{assemble, DiscreteDiracOperator, RadialGrid};

/// Fine-structure constant.
pub const ALPHA: f64 = 1.0 / 137.035_999;

/// Electron charge `−√α` in units where `e² = α`.
pub fn electron_charge() -> f64 {
    -ALPHA.sqrt()
}

/// Slack allowed on `e_i(λ_{j+1}) ≤ e_i(λ_j)`.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// Solver setup shared by the sweep and the diving search.
#[derive(Debug, Clone)]
pub struct ChannelSetup {
    pub density: ChargeDensity,
    pub grid: RadialGrid,
    pub edge_margin: f64,
}

impl ChannelSetup {
    pub fn new(density: ChargeDensity, grid: RadialGrid, edge_margin: f64) -> Result<Self> {
        if !(edge_margin > 0.0 && edge_margin < 0.5) {
            return Err(Error::invalid("edge margin must lie in (0, 0.5)"));
        }
        Ok(ChannelSetup {
            density,
            grid,
            edge_margin,
        })
    }

    pub fn threshold(&self) -> f64 {
        -1.0 + self.edge_margin
    }

    pub fn operator(&self, kappa: i32, lambda: f64) -> Result<DiscreteDiracOperator> {
        assemble(kappa, lambda, &self.density, self.grid)
    }

    /// Number of channel states below the diving threshold (radial count).
    pub fn dived_count(&self, kappa: i32, lambda: f64) -> Result<usize> {
        let op = self.operator(kappa, lambda)?;
        Ok(op.count_below(self.threshold()) - op.sea_size())
    }

    /// Dense `(H₀, Φ)` with `H_λ = H₀ − λΦ` for one channel.
    pub fn matrix_model(&self, kappa: i32) -> Result<(HermitianOperator<f64>, HermitianOperator<f64>)> {
        let h0 = self.operator(kappa, 0.0)?.dense();
        let h1 = self.operator(kappa, 1.0)?.dense();
        let phi = &h0 - h1;
        Ok((HermitianOperator::new(h0)?, HermitianOperator::new(phi)?))
    }
}

/// Gap eigenvalues of one channel along a λ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kappa: i32,
    pub lambdas: Vec<f64>,
    /// Per λ: `(label, e)` for every eigenvalue in `(−1, 1)`, ascending.
    pub states: Vec<Vec<(usize, f64)>>,
}

impl Trajectory {
    /// `(λ, e_label(λ))` wherever the state is in the gap.
    pub fn path(&self, label: usize) -> Vec<(f64, f64)> {
        self.lambdas
            .iter()
            .zip(&self.states)
            .filter_map(|(l, s)| s.iter().find(|(i, _)| *i == label).map(|(_, e)| (*l, *e)))
            .collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.states.iter().flatten().map(|(i, _)| *i).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Largest violation of monotonicity over all labels.
    pub fn max_increase(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.states.windows(2) {
            for (i, e) in &w[0] {
                if let Some((_, e2)) = w[1].iter().find(|(j, _)| j == i) {
                    worst = worst.max(e2 - e);
                }
            }
        }
        worst
    }
}

/// Sweep `steps` equally spaced couplings in `[0, λ_max]` for each channel.
pub fn sweep(setup: &ChannelSetup, channels: &[i32], lambda_max: f64, steps: usize) -> Result<Vec<Trajectory>> {
    if steps < 2 {
        return Err(Error::invalid("sweep needs at least 2 steps"));
    }
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::invalid("λ_max must be positive"));
    }
    if channels.is_empty() || channels.contains(&0) {
        return Err(Error::invalid("channels must be a nonempty list of nonzero κ"));
    }
    let lambdas: Vec<f64> = (0..steps).map(|j| lambda_max * j as f64 / (steps - 1) as f64).collect();
    let tasks: Vec<(i32, f64)> = channels
        .iter()
        .flat_map(|&k| lambdas.iter().map(move |&l| (k, l)))
        .collect();
    let solved = parallel::try_map_ordered(&tasks, |&(kappa, lambda)| {
        let op = setup.operator(kappa, lambda)?;
        let tiny = 1e-12 / op.grid.h();
        if !op.matrix.is_irreducible(tiny) {
            return Err(Error::LinkingAmbiguity(format!(
                "κ = {kappa}, λ = {lambda}: operator decouples, eigenvalues may cross"
            )));
        }
        Ok(op.labelled_in(-1.0, 1.0))
    })?;
    let mut out = Vec::with_capacity(channels.len());
    for (c, &kappa) in channels.iter().enumerate() {
        let states = solved[c * steps..(c + 1) * steps].to_vec();
        let t = Trajectory {
            kappa,
            lambdas: lambdas.clone(),
            states,
        };
        let inc = t.max_increase();
        if inc > MONOTONE_SLACK {
            return Err(Error::LinkingAmbiguity(format!(
                "κ = {kappa}: a labelled eigenvalue increased by {inc:.3e}"
            )));
        }
        out.push(t);
    }
    Ok(out)
}

/// Link two ascending eigenvalue lists by nearest value. Entry `i` of the
/// result is the index in `next` continuing `prev[i]`, or `None` if it left
/// the list. A link may not raise the eigenvalue by more than the slack nor
/// lower it by more than `jump`; two admissible candidates are an ambiguity.
pub fn link_nearest(prev: &[f64], next: &[f64], jump: f64) -> Result<Vec<Option<usize>>> {
    let mut taken = vec![false; next.len()];
    let mut out = Vec::with_capacity(prev.len());
    for (i, &p) in prev.iter().enumerate() {
        let cands: Vec<usize> = (0..next.len())
            .filter(|&j| !taken[j] && next[j] <= p + MONOTONE_SLACK && p - next[j] <= jump)
            .collect();
        match cands.len() {
            0 => out.push(None),
            1 => {
                taken[cands[0]] = true;
                out.push(Some(cands[0]));
            }
            _ => {
                return Err(Error::LinkingAmbiguity(format!(
                    "state {i} at {p:.6} has {} continuations within {jump:.3e}; refine the λ grid",
                    cands.len()
                )))
            }
        }
    }
    Ok(out)
}

/// A trajectory reaching the diving threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivingEvent {
    pub kappa: i32,
    pub label: usize,
    pub lambda_star: f64,
    /// `e > threshold` at the lower end, `e < threshold` at the upper end.
    pub bracket: (f64, f64),
    pub threshold: f64,
    pub radial_multiplicity: u32,
    pub physical_multiplicity: u32,
}

impl DivingEvent {
    pub fn new(kappa: i32, label: usize, bracket: (f64, f64), threshold: f64) -> Self {
        DivingEvent {
            kappa,
            label,
            lambda_star: 0.5 * (bracket.0 + bracket.1),
            bracket,
            threshold,
            radial_multiplicity: 1,
            physical_multiplicity: 2 * kappa.unsigned_abs(),
        }
    }
}

/// Bisection for a nonincreasing `e(λ)` crossing `threshold` inside
/// `[lo, hi]`. Returns the final bracket of width ≤ `tol`, or `None` when
/// `e(hi)` is still at or above the threshold.
pub fn find_crossing<F>(e: F, mut lo: f64, mut hi: f64, threshold: f64, tol: f64) -> Result<Option<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(tol > 0.0) || !(hi > lo) {
        return Err(Error::invalid("need tol > 0 and hi > lo"));
    }
    if e(hi)? >= threshold {
        return Ok(None);
    }
    if e(lo)? < threshold {
        return Ok(Some((lo, lo)));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if e(mid)? < threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some((lo, hi)))
}

/// Locate the coupling where trajectory `label` of `t` reaches
/// `−1 + edge_margin`, to bracket width `tol`. `None` if it stays above the
/// threshold over the swept range.
pub fn find_diving(setup: &ChannelSetup, t: &Trajectory, label: usize, tol: f64) -> Result<Option<DivingEvent>> {
    let thr = setup.threshold();
    let sea = setup.grid.n;
    let below = |lambda: f64| -> Result<bool> {
        let op = setup.operator(t.kappa, lambda)?;
        Ok(op.count_below(thr) > sea + label)
    };
    // first swept coupling past the threshold
    let mut j_hit = None;
    for (j, &l) in t.lambdas.iter().enumerate() {
        let in_gap = t.states[j].iter().find(|(i, _)| *i == label).map(|(_, e)| *e);
        let dived = match in_gap {
            Some(e) => e < thr,
            None => below(l)?,
        };
        if dived {
            j_hit = Some(j);
            break;
        }
    }
    let Some(j) = j_hit else { return Ok(None) };
    if j == 0 {
        return Err(Error::invalid("state is below the threshold at the first coupling"));
    }
    let (lo, hi) = (t.lambdas[j - 1], t.lambdas[j]);
    let bracket = find_crossing(|l| Ok(if below(l)? { -2.0 } else { 0.0 }), lo, hi, -1.0, tol)?
        .expect("the upper end is past the threshold");
    Ok(Some(DivingEvent::new(t.kappa, label, bracket, thr)))
}

/// All diving events found in a set of trajectories, sorted by λ*.
pub fn find_all_dives(setup: &ChannelSetup, trajectories: &[Trajectory], tol: f64) -> Result<Vec<DivingEvent>> {
    let jobs: Vec<(usize, usize)> = trajectories
        .iter()
        .enumerate()
        .flat_map(|(c, t)| t.labels().into_iter().map(move |l| (c, l)))
        .collect();
    let found = parallel::try_map_ordered(&jobs, |&(c, l)| find_diving(setup, &trajectories[c], l, tol))?;
    let mut events: Vec<DivingEvent> = found.into_iter().flatten().collect();
    events.sort_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star).then(a.kappa.cmp(&b.kappa)));
    Ok(events)
}

/// λ* at margins `m` and `m/2` and the linear extrapolation `2λ*(m/2) − λ*(m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginExtrapolation {
    pub at_margin: f64,
    pub at_half_margin: f64,
    pub extrapolated: f64,
}

pub fn extrapolate_margin(setup: &ChannelSetup, kappa: i32, label: usize, lo: f64, hi: f64, tol: f64) -> Result<Option<MarginExtrapolation>> {
    let star = |margin: f64| -> Result<Option<f64>> {
        let s = ChannelSetup::new(setup.density.clone(), setup.grid, margin)?;
        let sea = s.grid.n;
        let thr = s.threshold();
        let b = find_crossing(
            |l| {
                let op = s.operator(kappa, l)?;
                Ok(if op.count_below(thr) > sea + label { -2.0 } else { 0.0 })
            },
            lo,
            hi,
            -1.0,
            tol,
        )?;
        Ok(b.map(|(a, c)| 0.5 * (a + c)))
    };
    let (Some(a), Some(b)) = (star(setup.edge_margin)?, star(0.5 * setup.edge_margin)?) else {
        return Ok(None);
    };
    Ok(Some(MarginExtrapolation {
        at_margin: a,
        at_half_margin: b,
        extrapolated: 2.0 * b - a,
    }))
}

/// `d(λ)`: total physical multiplicity of events with `λ* ≤ λ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountingFunction {
    pub events: Vec<DivingEvent>,
}

impl CountingFunction {
    pub fn new(mut events: Vec<DivingEvent>) -> Self {
        events.sort_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star));
        CountingFunction { events }
    }

    pub fn eval(&self, lambda: f64) -> u32 {
        self.events
            .iter()
            .filter(|e| e.lambda_star <= lambda)
            .map(|e| e.physical_multiplicity)
            .sum()
    }

    /// `(λ*, d just after λ*)` at every jump.
    pub fn steps(&self) -> Vec<(f64, u32)> {
        let mut acc = 0;
        self.events
            .iter()
            .map(|e| {
                acc += e.physical_multiplicity;
                (e.lambda_star, acc)
            })
            .collect()
    }
}

/// Vacuum charge `e·d(λ)`.
pub fn vacuum_charge(cf: &CountingFunction, lambda: f64, e: f64) -> f64 {
    e * cf.eval(lambda) as f64
}

/// `d(λ)` counted directly from Sturm sequences, weighted by `2|κ|`.
pub fn direct_count(setup: &ChannelSetup, channels: &[i32], lambda: f64) -> Result<u32> {
    let mut d = 0;
    for &k in channels {
        d += setup.dived_count(k, lambda)? as u32 * 2 * k.unsigned_abs();
    }
    Ok(d)
}
