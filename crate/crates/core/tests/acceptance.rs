//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vacpol_core::dirac_algebra::{q2_eta_trace_integral, Momentum3};
use vacpol_core::flow::{direct_count, find_diving, sweep, ChannelSetup, MONOTONE_SLACK};
use vacpol_core::kernel::{trace_norm_bound_check, DiscreteKernel};
use vacpol_core::lattice::{cutoff_family_check, free_dirac, potential_operator, soft_coulomb, Lattice};
use vacpol_core::projector::{
    matrix_flow_theorem, norm_continuity_bound, operator_norm, perturbative_decomposition, projector_via_eta_integral,
    spectral_projector, FlowRow, HermitianOperator,
};
use vacpol_core::radial::RadialGrid;
use vacpol_core::random_models::random_gapped_model;
use vacpol_core::uehling::{c_closed, c_integral, UehlingProfile};
use vacpol_core::{ChargeDensity, Result};

type Verdict = Result<(bool, String)>;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn uehling_consistency() -> Verdict {
    let worst = log_grid(1e-3, 1e3, 100)
        .into_iter()
        .map(|k| {
            let c = c_closed(k);
            (c_integral(k) - c).abs() / c
        })
        .fold(0.0, f64::max);
    let zero = c_integral(0.0) == 0.0 && c_closed(0.0) == 0.0;
    let ratio = c_integral(1e-3) / 1e-12;
    let small = (ratio - 1.0 / 15.0).abs() * 15.0;
    Ok((
        worst <= 1e-10 && zero && small <= 1e-5,
        format!("max rel gap {worst:.2e}, C(0)=0 {zero}, small-k rel dev {small:.2e}"),
    ))
}

fn vacuum_neutrality() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [ChargeDensity::gaussian(0.05)?, ChargeDensity::uniform_ball(0.02)?] {
        let p = UehlingProfile::new(d.clone(), 1.0);
        let origin = p.rho1_fourier(0.0);
        let bal = p.total_charge(25.0)?;
        ok &= origin == 0.0 && bal.relative() <= 1e-6;
        parts.push(format!("{d:?}: ρ̂₁(0)={origin}, rel net {:.2e}", bal.relative()));
    }
    Ok((ok, parts.join("; ")))
}

fn rows_consistent(rows: &[FlowRow]) -> (bool, f64) {
    let worst = rows.iter().map(FlowRow::max_defect).fold(0.0, f64::max);
    (rows.iter().all(|r| r.consistent(1e-8)), worst)
}

fn flow_theorem() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lambdas: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64).collect();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut max_d = 0;
    for m in 0..24 {
        let n = 12 + m % 12;
        let (h0, phi) = random_gapped_model(&mut rng, n, 0.0, 0.3);
        let rows = matrix_flow_theorem(&HermitianOperator::new(h0)?, &HermitianOperator::new(phi)?, &lambdas, 0.0)?;
        let (good, w) = rows_consistent(&rows);
        ok &= good;
        worst = worst.max(w);
        max_d = max_d.max(rows.iter().map(|r| r.crossings).max().unwrap_or(0));
    }
    let setup = ChannelSetup::new(ChargeDensity::gaussian(0.02)?, RadialGrid::new(400, 20.0)?, 1e-3)?;
    let (h0, phi) = setup.matrix_model(-1)?;
    let channel_lambdas = [0.0, 0.5, 1.0, 1.1, 1.25, 1.4, 1.6, 1.8];
    let rows = matrix_flow_theorem(&h0, &phi, &channel_lambdas, setup.threshold())?;
    let (good, w) = rows_consistent(&rows);
    let sturm: Vec<i64> = channel_lambdas
        .iter()
        .map(|&l| setup.dived_count(-1, l).map(|c| c as i64))
        .collect::<Result<_>>()?;
    let matches = rows.iter().zip(&sturm).all(|(r, s)| r.crossings == *s);
    let channel_d: Vec<i64> = rows.iter().map(|r| r.crossings).collect();
    ok &= good && matches && channel_d.iter().any(|&d| d > 0);
    worst = worst.max(w);
    Ok((
        ok,
        format!("24 random models (max d = {max_d}) and κ=−1 channel d = {channel_d:?}; worst trace defect {worst:.2e}"),
    ))
}

fn vacuum_charge_jump() -> Verdict {
    let setup = ChannelSetup::new(ChargeDensity::gaussian(0.02)?, RadialGrid::new(400, 20.0)?, 1e-3)?;
    let traj = sweep(&setup, &[-1], 2.0, 41)?.remove(0);
    let lowest = *traj.labels().iter().min().expect("bound states in the sweep");
    let path = traj.path(lowest);
    let rise = path.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    let Some(ev) = find_diving(&setup, &traj, lowest, 1e-4)? else {
        return Ok((false, "lowest κ=−1 state never reaches the threshold".into()));
    };
    let (lo, hi) = ev.bracket;
    let d_lo = direct_count(&setup, &[-1, 1], lo)?;
    let d_hi = direct_count(&setup, &[-1, 1], hi)?;
    let (h0, phi) = setup.matrix_model(-1)?;
    let rows = matrix_flow_theorem(&h0, &phi, &[lo, hi], setup.threshold())?;
    let weight = 2 * (-1i32).unsigned_abs() as i64;
    let proj = (rows[0].index * weight, rows[1].index * weight);
    let consistent = rows.iter().all(|r| r.consistent(1e-8));
    let reference = ChannelSetup::new(ChargeDensity::gaussian(0.02)?, RadialGrid::default(), 1e-3)?;
    let default_star = match sweep(&reference, &[-1], 2.0, 41) {
        Ok(mut t) => {
            let t = t.remove(0);
            let l = *t.labels().iter().min().expect("bound states");
            find_diving(&reference, &t, l, 1e-4)?.map(|e| format!("{:.5}", e.lambda_star)).unwrap_or("none".into())
        }
        Err(e) => format!("unavailable ({e})"),
    };
    let ok = rise <= MONOTONE_SLACK && hi - lo <= 1e-4 && (d_lo, d_hi) == (0, 2) && proj == (0, 2) && consistent;
    Ok((
        ok,
        format!(
            "N=400: λ* ∈ [{lo:.5}, {hi:.5}], max rise {rise:.1e}, d: {d_lo}→{d_hi}, projector: {}→{} (default grid λ* {default_star})",
            proj.0, proj.1
        ),
    ))
}

fn cauchy_projector() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for (i, gap) in [0.5, 0.3, 0.2, 0.1, 0.05].into_iter().enumerate() {
        let gamma = 0.2 * i as f64 - 0.4;
        let (h, _) = random_gapped_model(&mut rng, 30, gamma, gap);
        let h = HermitianOperator::new(h)?;
        let pe = spectral_projector(&h, gamma)?;
        let pq = projector_via_eta_integral(&h, gamma, 1e-9)?;
        worst = worst.max(operator_norm(&(pq - pe)));
    }
    Ok((worst <= 1e-8, format!("5 models 30×30, half gaps 0.5…0.05, max ‖ΔP‖ {worst:.2e}")))
}

fn perturbative_split() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let (h0, phi) = random_gapped_model(&mut rng, 12, 0.0, 0.8);
        let h0 = HermitianOperator::new(h0)?;
        let phi = HermitianOperator::new(phi)?;
        let gamma = -0.2;
        let dec = perturbative_decomposition(&h0, &phi, 0.1, gamma, 1e-10)?;
        let exact = spectral_projector(&h0.shifted(0.1, &phi), gamma)? - spectral_projector(&h0, gamma)?;
        worst = worst.max(operator_norm(&(dec.sum() - exact)));
    }
    let lat = Lattice::new(15, 0.4)?;
    let h = free_dirac(&lat);
    let phi = potential_operator(&soft_coulomb(&lat, 0.5));
    let dec = perturbative_decomposition(&h, &phi, 0.1, 0.0, 1e-10)?;
    let q2 = dec.q2.trace().norm();
    let q4 = dec.q4_free.trace().norm();
    Ok((
        worst <= 1e-7 && q2 <= 1e-9,
        format!("max residual {worst:.2e}; C-symmetric |tr Q₂| {q2:.1e}, |tr Q₄(free)| {q4:.1e}"),
    ))
}

fn furry_momentum() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut v = || Momentum3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p, p1, q) = (v()?, v()?, v()?);
        worst = worst.max(q2_eta_trace_integral(&p, &p1, &q)?.norm());
    }
    Ok((worst <= 1e-8, format!("100 triples, max |η-integral| {worst:.2e}")))
}

fn cutoff_family() -> Verdict {
    let lat = Lattice::new(121, 0.5)?;
    let phi = soft_coulomb(&lat, 0.5);
    let h0 = free_dirac(&lat);
    let lambda = 1.0;
    let gap_states: Vec<f64> = h0
        .shifted(lambda, &potential_operator(&phi))
        .eigenvalues()
        .into_iter()
        .filter(|e| e.abs() < 1.0)
        .collect();
    let gamma = 0.5 * (gap_states[0] + gap_states[1]);
    let eps: Vec<f64> = (0..6).map(|i| 2.0 / 2f64.powi(i)).collect();
    let rep = cutoff_family_check(&lat, &phi, &eps, &h0, lambda, gamma)?;
    let psd = rep.all_psd(1e-12);
    let dec = rep.strictly_decreasing();
    let stable = rep.index_stable(1e-8);
    let weyl = rep.shifts_within_bound(1e-10);
    let dists: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.distance)).collect();
    Ok((
        psd && dec && stable && weyl,
        format!(
            "‖K−Φ‖ = [{}], threshold ε {:?}, index {:.0}, PSD {psd}, Weyl {weyl}",
            dists.join(", "),
            rep.threshold,
            rep.reference_trace
        ),
    ))
}

fn kernel_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let n = 64;
    let v = |rng: &mut ChaCha8Rng| -> Vec<num_complex::Complex64> {
        (0..n).map(|_| num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    };
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..100 {
        let (f1, g, f2) = (v(&mut rng), v(&mut rng), v(&mut rng));
        let c = trace_norm_bound_check(&DiscreteKernel::new(f1, g, f2)?);
        if !c.holds() {
            violations += 1;
        }
        min_slack = min_slack.min(c.bound / c.trace_norm);
    }
    let mut g = vec![0.0; n];
    g[0] = 1.0;
    let f = vec![1.0 / (n as f64).sqrt(); n];
    let imp = trace_norm_bound_check(&DiscreteKernel::from_real(&f, &g, &f)?);
    let saturated = imp.holds() && (imp.trace_norm - imp.bound).abs() <= 1e-12 * imp.bound;
    Ok((
        violations == 0 && saturated,
        format!("violations {violations}/100, min bound/‖K‖₁ {min_slack:.3}, impulse ‖K‖₁={:.15} bound={:.15}", imp.trace_norm, imp.bound),
    ))
}

fn norm_continuity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (h0, phi) = random_gapped_model(&mut rng, 16, 0.0, 1.0);
    let h0 = HermitianOperator::new(h0)?;
    let phi = HermitianOperator::new(phi)?;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..50 {
        let l = rng.random_range(0.0..0.8);
        let m = rng.random_range(0.0..0.8);
        let r = norm_continuity_bound(&h0, &phi, l, m, 0.0)?;
        if r.actual > r.bound {
            violations += 1;
        }
        if r.bound > 0.0 {
            max_ratio = max_ratio.max(r.actual / r.bound);
        }
    }
    Ok((violations == 0, format!("violations {violations}/50, max actual/bound {max_ratio:.3}")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "uehling consistency", budget: Duration::from_secs(1), run: uehling_consistency },
        Criterion { id: 2, name: "vacuum neutrality", budget: Duration::from_secs(10), run: vacuum_neutrality },
        Criterion { id: 3, name: "odd-power traces equal crossings", budget: Duration::from_secs(120), run: flow_theorem },
        Criterion { id: 4, name: "vacuum charge jump", budget: Duration::from_secs(300), run: vacuum_charge_jump },
        Criterion { id: 5, name: "cauchy projector", budget: Duration::from_secs(5), run: cauchy_projector },
        Criterion { id: 6, name: "perturbative decomposition", budget: Duration::from_secs(30), run: perturbative_split },
        Criterion { id: 7, name: "furry at momentum level", budget: Duration::from_secs(10), run: furry_momentum },
        Criterion { id: 8, name: "cutoff family", budget: Duration::from_secs(30), run: cutoff_family },
        Criterion { id: 9, name: "kernel trace-norm bound", budget: Duration::from_secs(10), run: kernel_bound },
        Criterion { id: 10, name: "norm continuity", budget: Duration::from_secs(10), run: norm_continuity },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((ok, d)) => (ok, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let timely = elapsed <= c.budget;
        let verdict = if pass && timely { "PASS" } else { "FAIL" };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {verdict} {} [{:.2}s / {}s] {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
