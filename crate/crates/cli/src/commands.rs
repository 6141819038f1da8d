use serde::Serialize;
use vacpol_core::flow::{direct_count, find_all_dives, sweep, vacuum_charge, ChannelSetup, CountingFunction, MONOTONE_SLACK};
use vacpol_core::nuclear::enclosed_charge;
use vacpol_core::parallel::{map_ordered, try_map_ordered};
use vacpol_core::radial::CAUCHY_TOL;
use vacpol_core::uehling::{c_closed, c_integral, UehlingProfile};
use vacpol_core::ChargeDensity;

use crate::config::RunConfig;
use crate::failure::{ensure, Failure};
use crate::output::Sink;

/// Enclosed charge must reach one to this accuracy.
pub const CHARGE_TOL: f64 = 1e-10;
/// Largest admissible relative gap between the two forms of `C(k)`.
pub const UEHLING_AGREEMENT: f64 = 1e-10;
/// Largest admissible net induced charge relative to the absolute charge.
pub const NEUTRALITY_TOL: f64 = 1e-6;

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn kind_name(d: &ChargeDensity) -> &'static str {
    match d {
        ChargeDensity::Gaussian { .. } => "gaussian",
        ChargeDensity::UniformBall { .. } => "uniform_ball",
        ChargeDensity::Tabulated(_) => "tabulated",
    }
}

/// Radius beyond which a profile carries no charge to double precision.
fn charge_radius(d: &ChargeDensity) -> f64 {
    match d {
        ChargeDensity::Gaussian { s } => 12.0 * s,
        ChargeDensity::UniformBall { radius } => 2.0 * radius,
        ChargeDensity::Tabulated(_) => 1.5 * d.size(),
    }
}

#[derive(Serialize)]
struct DensityRow {
    r: f64,
    density: f64,
    potential: f64,
    enclosed_charge: f64,
}

#[derive(Serialize)]
struct FourierRow {
    k: f64,
    n_hat: f64,
    coulomb_fourier: Option<f64>,
}

#[derive(Serialize)]
struct DensitySummary {
    kind: &'static str,
    size: f64,
    total_charge: f64,
    potential_at_origin: f64,
    regularity_integral: f64,
}

pub fn cmd_density(cfg: &RunConfig, sink: &mut Sink) -> Result<(), Failure> {
    let d = cfg.nucleus_density()?;
    sink.tolerance("charge_tol", CHARGE_TOL);
    let radii = linear_grid(0.0, charge_radius(&d), cfg.density.r_points);
    let enclosed = enclosed_charge(&d, &radii)?;
    let rows: Vec<DensityRow> = radii
        .iter()
        .zip(&enclosed)
        .map(|(&r, &q)| DensityRow {
            r,
            density: d.density_at(r),
            potential: d.potential_at(r),
            enclosed_charge: q,
        })
        .collect();
    let size = d.size();
    let mut fourier = vec![FourierRow {
        k: 0.0,
        n_hat: d.fourier_at(0.0),
        coulomb_fourier: None,
    }];
    fourier.extend(log_grid(1e-3 / size, 1e2 / size, cfg.density.k_points - 1).into_iter().map(|k| FourierRow {
        k,
        n_hat: d.fourier_at(k),
        coulomb_fourier: Some(d.coulomb_fourier(k)),
    }));
    let total = *enclosed.last().expect("nonempty grid");
    let summary = DensitySummary {
        kind: kind_name(&d),
        size,
        total_charge: total,
        potential_at_origin: d.potential_at(0.0),
        regularity_integral: d.regularity_integral()?,
    };
    sink.table("density_r", &rows)?;
    sink.table("density_k", &fourier)?;
    sink.table("density_summary", &[summary])?;
    ensure((total - 1.0).abs() <= CHARGE_TOL, format!("enclosed charge {total} differs from 1 by more than {CHARGE_TOL:e}"))
}

#[derive(Serialize)]
struct TrajectoryRow {
    kappa: i32,
    lambda: f64,
    label: usize,
    energy: f64,
}

#[derive(Serialize)]
struct DiveRow {
    kappa: i32,
    label: usize,
    lambda_star: f64,
    bracket_lo: f64,
    bracket_hi: f64,
    threshold: f64,
    multiplicity: u32,
}

#[derive(Serialize)]
struct CountingRow {
    lambda: f64,
    d: u32,
    sturm_d: u32,
    vacuum_charge: f64,
}

pub fn cmd_sweep(cfg: &RunConfig, sink: &mut Sink) -> Result<(), Failure> {
    let s = &cfg.sweep;
    let setup = ChannelSetup::new(cfg.nucleus_density()?, cfg.radial_grid()?, cfg.grid.edge_margin)?;
    sink.tolerance("bisection_tol", s.tol)
        .tolerance("edge_margin", cfg.grid.edge_margin)
        .tolerance("monotone_slack", MONOTONE_SLACK)
        .tolerance("cauchy_tol", CAUCHY_TOL);
    let trajectories = sweep(&setup, &s.channels, s.lambda_max, s.steps)?;
    let dives = find_all_dives(&setup, &trajectories, s.tol)?;
    let mut traj_rows = Vec::new();
    for t in &trajectories {
        for (lambda, states) in t.lambdas.iter().zip(&t.states) {
            traj_rows.extend(states.iter().map(|&(label, energy)| TrajectoryRow {
                kappa: t.kappa,
                lambda: *lambda,
                label,
                energy,
            }));
        }
    }
    let dive_rows: Vec<DiveRow> = dives
        .iter()
        .map(|e| DiveRow {
            kappa: e.kappa,
            label: e.label,
            lambda_star: e.lambda_star,
            bracket_lo: e.bracket.0,
            bracket_hi: e.bracket.1,
            threshold: e.threshold,
            multiplicity: e.physical_multiplicity,
        })
        .collect();
    let cf = CountingFunction::new(dives);
    let lambdas = trajectories[0].lambdas.clone();
    let sturm = try_map_ordered(&lambdas, |&l| direct_count(&setup, &s.channels, l))?;
    let counting: Vec<CountingRow> = lambdas
        .iter()
        .zip(sturm)
        .map(|(&lambda, sturm_d)| CountingRow {
            lambda,
            d: cf.eval(lambda),
            sturm_d,
            vacuum_charge: vacuum_charge(&cf, lambda, cfg.charge),
        })
        .collect();
    sink.table("sweep_trajectories", &traj_rows)?;
    sink.table("sweep_dives", &dive_rows)?;
    sink.table("sweep_counting", &counting)?;
    // a coupling inside a bisection bracket is not resolved either way
    let unresolved = |l: f64| cf.events.iter().any(|e| e.bracket.0 <= l && l <= e.bracket.1);
    for row in counting.iter().filter(|r| !unresolved(r.lambda)) {
        ensure(
            row.d == row.sturm_d,
            format!("λ = {}: counting function {} but Sturm count {}", row.lambda, row.d, row.sturm_d),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct UehlingKRow {
    k: f64,
    c_integral: f64,
    c_closed: f64,
    abs_diff: f64,
    rel_diff: f64,
    rho1_hat: f64,
}

#[derive(Serialize)]
struct UehlingRRow {
    r: f64,
    rho1: f64,
    cumulative_charge: f64,
}

#[derive(Serialize)]
struct UehlingSummary {
    lambda: f64,
    charge: f64,
    max_abs_diff: f64,
    max_rel_diff: f64,
    net_charge: f64,
    absolute_charge: f64,
    relative_net_charge: f64,
    r_max: f64,
}

pub fn cmd_uehling(cfg: &RunConfig, sink: &mut Sink) -> Result<(), Failure> {
    let u = &cfg.uehling;
    sink.tolerance("agreement_tol", UEHLING_AGREEMENT).tolerance("neutrality_tol", NEUTRALITY_TOL);
    let mut ks = Vec::with_capacity(u.k_points + 1);
    if u.include_zero {
        ks.push(0.0);
    }
    ks.extend(log_grid(u.k_min, u.k_max, u.k_points));
    let radii = log_grid(u.r_min, u.r_max, u.r_points);
    let profile = UehlingProfile::with_charge(cfg.nucleus_density()?, u.lambda, cfg.charge).sampled(ks.clone(), radii.clone())?;
    let forms = map_ordered(&ks, |&k| (c_integral(k), c_closed(k)));
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let k_rows: Vec<UehlingKRow> = ks
        .iter()
        .zip(&forms)
        .zip(&profile.rho_hat)
        .map(|((&k, &(ci, cc)), &rho)| {
            let diff = (ci - cc).abs();
            let rel = if cc == 0.0 { diff } else { diff / cc.abs() };
            max_abs = max_abs.max(diff);
            max_rel = max_rel.max(rel);
            UehlingKRow {
                k,
                c_integral: ci,
                c_closed: cc,
                abs_diff: diff,
                rel_diff: rel,
                rho1_hat: rho,
            }
        })
        .collect();
    let cumulative = profile.cumulative_charge(&radii)?;
    let r_rows: Vec<UehlingRRow> = radii
        .iter()
        .zip(&profile.rho)
        .zip(&cumulative)
        .map(|((&r, &rho1), &q)| UehlingRRow {
            r,
            rho1,
            cumulative_charge: q,
        })
        .collect();
    let balance = profile.total_charge(u.r_max)?;
    let summary = UehlingSummary {
        lambda: u.lambda,
        charge: cfg.charge,
        max_abs_diff: max_abs,
        max_rel_diff: max_rel,
        net_charge: balance.net,
        absolute_charge: balance.absolute,
        relative_net_charge: balance.relative(),
        r_max: u.r_max,
    };
    sink.table("uehling_k", &k_rows)?;
    sink.table("uehling_r", &r_rows)?;
    sink.table("uehling_summary", &[summary])?;
    ensure(max_rel <= UEHLING_AGREEMENT, format!("C(k) forms differ by {max_rel:e} in relative terms"))?;
    if u.include_zero {
        ensure(profile.rho_hat[0] == 0.0, "induced charge density does not vanish at k = 0")?;
    }
    let last = *cumulative.last().expect("nonempty grid");
    ensure(
        balance.relative() <= NEUTRALITY_TOL && last.abs() <= NEUTRALITY_TOL * balance.absolute,
        format!("net induced charge {} (cumulative {last:e}) against absolute {}", balance.net, balance.absolute),
    )
}
