//! Matrix-scale checks of the projector-index statements, each written as a
//! table and then asserted.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vacpol_core::dirac_algebra::{q2_eta_trace_integral, Momentum3};
use vacpol_core::kernel::{trace_norm_bound_check, DiscreteKernel};
use vacpol_core::lattice::{cutoff_family_check, free_dirac, potential_operator, soft_coulomb, trapped_eigenvalue_triple, Lattice};
use vacpol_core::parallel::try_map_ordered;
use vacpol_core::projector::{
    entry_tolerance, matrix_flow_theorem, norm_continuity_bound, operator_norm, perturbative_decomposition_with, projector_via_eta_integral_with,
    spectral_projector, HermitianOperator,
};
use vacpol_core::quadrature::{Adaptive, EtaRule};
use vacpol_core::random_models::random_gapped_model;

use crate::config::RunConfig;
use crate::failure::{ensure, Failure};
use crate::output::Sink;

pub const TRACE_TOL: f64 = 1e-8;
pub const FURRY_TOL: f64 = 1e-9;
pub const PROJECTOR_TOL: f64 = 1e-8;
pub const DECOMPOSITION_TOL: f64 = 1e-7;

/// Independent generator for battery `tag`.
fn battery_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

#[derive(Serialize)]
struct FlowTableRow {
    model: usize,
    lambda: f64,
    crossings: i64,
    trace_m1: f64,
    trace_m2: f64,
    trace_m3: f64,
    index: i64,
    max_defect: f64,
}

#[derive(Serialize)]
struct ProjectorRow {
    check: &'static str,
    model: usize,
    half_gap: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct CutoffTableRow {
    eps: f64,
    min_eigenvalue: f64,
    factorization_residual: f64,
    distance: f64,
    shift_bound: f64,
    max_shift: f64,
    index: f64,
    within_half_gap: bool,
}

#[derive(Serialize)]
struct FurryRow {
    source: &'static str,
    case: usize,
    magnitude: f64,
}

#[derive(Serialize)]
struct ContinuityRow {
    lambda: f64,
    mu: f64,
    actual: f64,
    bound: f64,
    holds: bool,
}

#[derive(Serialize)]
struct KernelRow {
    instance: usize,
    trace_norm: f64,
    bound: f64,
    hilbert_schmidt: f64,
    factorization_residual: f64,
    holds: bool,
}

#[derive(Serialize)]
struct TrappedRow {
    lambda_bar: f64,
    lambda_prime: f64,
    gamma: f64,
    gamma_prime: f64,
    trapped_energy: f64,
    lhs: i64,
    term_1: i64,
    term_2: i64,
    term_3: i64,
    trapped_rank: usize,
}

#[derive(Serialize)]
struct SummaryRow {
    check: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
}

pub fn cmd_index_demo(cfg: &RunConfig, sink: &mut Sink) -> Result<(), Failure> {
    let c = &cfg.index_demo;
    let q = &cfg.quadrature;
    sink.tolerance("trace_tol", TRACE_TOL)
        .tolerance("furry_tol", FURRY_TOL)
        .tolerance("projector_tol", PROJECTOR_TOL)
        .tolerance("decomposition_tol", DECOMPOSITION_TOL)
        .tolerance("eta_tol", q.eta_tol)
        .tolerance("expansion_tol", q.expansion_tol);
    let mut summary = Vec::new();

    // flow theorem on random gapped models
    let lambdas: Vec<f64> = (0..c.lambda_steps).map(|i| c.lambda_max * i as f64 / (c.lambda_steps - 1) as f64).collect();
    let mut rng = battery_rng(cfg.seed, 1);
    let models: Vec<_> = (0..c.models).map(|_| random_gapped_model(&mut rng, c.size, 0.0, c.half_gap)).collect();
    let flows = try_map_ordered(&models, |(h0, phi)| {
        matrix_flow_theorem(&HermitianOperator::new(h0.clone())?, &HermitianOperator::new(phi.clone())?, &lambdas, 0.0)
    })?;
    let mut flow_rows = Vec::new();
    for (m, rows) in flows.iter().enumerate() {
        flow_rows.extend(rows.iter().map(|r| FlowTableRow {
            model: m,
            lambda: r.lambda,
            crossings: r.crossings,
            trace_m1: r.traces[0],
            trace_m2: r.traces[1],
            trace_m3: r.traces[2],
            index: r.index,
            max_defect: r.max_defect(),
        }));
    }
    let flow_bad = flows.iter().flatten().filter(|r| !r.consistent(TRACE_TOL)).count();
    summary.push(SummaryRow {
        check: "flow_theorem",
        cases: flow_rows.len(),
        failures: flow_bad,
        worst: flow_rows.iter().map(|r| r.max_defect).fold(0.0, f64::max),
    });
    sink.table("index_flow", &flow_rows)?;

    // η-integral projector and resolvent expansion
    let eta_rule = |tol: f64, dim: usize| EtaRule::Adaptive {
        opts: Adaptive::with_abs(entry_tolerance(tol, dim)).depth(q.max_depth),
        panels: 8,
    };
    let mut rng = battery_rng(cfg.seed, 2);
    let gaps = [0.5, 0.3, 0.2, 0.1, 0.05];
    let cauchy_models: Vec<_> = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let gamma = 0.2 * i as f64 - 0.4;
            (gamma, g, random_gapped_model(&mut rng, c.size, gamma, g).0)
        })
        .collect();
    let mut proj_rows = try_map_ordered(&cauchy_models, |(gamma, g, h)| -> Result<ProjectorRow, Failure> {
        let h = HermitianOperator::new(h.clone())?;
        let exact = spectral_projector(&h, *gamma)?;
        let quad = projector_via_eta_integral_with(&h, *gamma, eta_rule(q.eta_tol, h.dim()))?;
        Ok(ProjectorRow {
            check: "cauchy",
            model: 0,
            half_gap: *g,
            deviation: operator_norm(&(quad - exact)),
        })
    })?;
    let split_models: Vec<_> = (0..4).map(|_| random_gapped_model(&mut rng, c.size, 0.0, 0.8)).collect();
    proj_rows.extend(try_map_ordered(&split_models, |(h0, phi)| -> Result<ProjectorRow, Failure> {
        let (lambda, gamma) = (0.1, -0.2);
        let h0 = HermitianOperator::new(h0.clone())?;
        let phi = HermitianOperator::new(phi.clone())?;
        let dec = perturbative_decomposition_with(&h0, &phi, lambda, gamma, eta_rule(q.expansion_tol, h0.dim()))?;
        let exact = spectral_projector(&h0.shifted(lambda, &phi), gamma)? - spectral_projector(&h0, gamma)?;
        Ok(ProjectorRow {
            check: "decomposition",
            model: 0,
            half_gap: 0.8,
            deviation: operator_norm(&(dec.sum() - exact)),
        })
    })?);
    for (i, r) in proj_rows.iter_mut().enumerate() {
        r.model = if i < gaps.len() { i } else { i - gaps.len() };
    }
    for (name, tol) in [("cauchy", PROJECTOR_TOL), ("decomposition", DECOMPOSITION_TOL)] {
        let rows: Vec<&ProjectorRow> = proj_rows.iter().filter(|r| r.check == name).collect();
        summary.push(SummaryRow {
            check: name,
            cases: rows.len(),
            failures: rows.iter().filter(|r| !(r.deviation <= tol)).count(),
            worst: rows.iter().map(|r| r.deviation).fold(0.0, f64::max),
        });
    }
    sink.table("index_projectors", &proj_rows)?;

    // cutoff family on the lattice
    let lat = Lattice::new(c.lattice_sites, c.lattice_spacing)?;
    let phi = soft_coulomb(&lat, c.softening);
    let h0 = free_dirac(&lat);
    let gap_states: Vec<f64> = h0
        .shifted(c.cutoff_lambda, &potential_operator(&phi))
        .eigenvalues()
        .into_iter()
        .filter(|e| e.abs() < 1.0)
        .collect();
    if gap_states.len() < 2 {
        return Err(Failure::Config("cutoff family needs two gap eigenvalues; raise cutoff_lambda".into()));
    }
    let gamma = 0.5 * (gap_states[0] + gap_states[1]);
    let eps: Vec<f64> = (0..c.cutoff_halvings).map(|i| c.cutoff_eps_start / 2f64.powi(i as i32)).collect();
    let rep = cutoff_family_check(&lat, &phi, &eps, &h0, c.cutoff_lambda, gamma)?;
    let cutoff_rows: Vec<CutoffTableRow> = rep
        .rows
        .iter()
        .map(|r| CutoffTableRow {
            eps: r.eps,
            min_eigenvalue: r.min_eigenvalue,
            factorization_residual: r.factorization_residual,
            distance: r.distance,
            shift_bound: r.shift_bound,
            max_shift: r.max_shift,
            index: r.trace,
            within_half_gap: r.within_half_gap,
        })
        .collect();
    let cutoff_ok = [
        rep.all_psd(1e-12),
        rep.strictly_decreasing(),
        rep.index_stable(TRACE_TOL),
        rep.shifts_within_bound(1e-10),
    ];
    summary.push(SummaryRow {
        check: "cutoff_family",
        cases: cutoff_rows.len(),
        failures: cutoff_ok.iter().filter(|ok| !**ok).count(),
        worst: cutoff_rows.iter().map(|r| r.factorization_residual).fold(0.0, f64::max),
    });
    sink.table("index_cutoff", &cutoff_rows)?;

    // Furry: momentum triples and the charge-symmetric lattice
    let mut rng = battery_rng(cfg.seed, 3);
    let triples: Vec<[f64; 9]> = (0..c.furry_triples).map(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0))).collect();
    let mut furry_rows = try_map_ordered(&triples, |t| -> Result<FurryRow, Failure> {
        let p = Momentum3::new(t[0], t[1], t[2])?;
        let p1 = Momentum3::new(t[3], t[4], t[5])?;
        let k = Momentum3::new(t[6], t[7], t[8])?;
        Ok(FurryRow {
            source: "momentum",
            case: 0,
            magnitude: q2_eta_trace_integral(&p, &p1, &k)?.norm(),
        })
    })?;
    for (i, r) in furry_rows.iter_mut().enumerate() {
        r.case = i;
    }
    let small = Lattice::new(15, 0.4)?;
    let dec = perturbative_decomposition_with(
        &free_dirac(&small),
        &potential_operator(&soft_coulomb(&small, 0.5)),
        0.1,
        0.0,
        eta_rule(q.expansion_tol, 2 * small.sites()),
    )?;
    furry_rows.push(FurryRow {
        source: "lattice",
        case: 0,
        magnitude: dec.q2.trace().norm(),
    });
    summary.push(SummaryRow {
        check: "furry",
        cases: furry_rows.len(),
        failures: furry_rows.iter().filter(|r| !(r.magnitude < FURRY_TOL)).count(),
        worst: furry_rows.iter().map(|r| r.magnitude).fold(0.0, f64::max),
    });
    sink.table("index_furry", &furry_rows)?;

    // norm continuity
    let mut rng = battery_rng(cfg.seed, 4);
    let (ch0, cphi) = random_gapped_model(&mut rng, c.size, 0.0, 1.0);
    let ch0 = HermitianOperator::new(ch0)?;
    let cphi = HermitianOperator::new(cphi)?;
    let pairs: Vec<(f64, f64)> = (0..c.continuity_pairs).map(|_| (rng.random_range(0.0..0.8), rng.random_range(0.0..0.8))).collect();
    let cont_rows = try_map_ordered(&pairs, |&(l, m)| -> Result<ContinuityRow, Failure> {
        let r = norm_continuity_bound(&ch0, &cphi, l, m, 0.0)?;
        Ok(ContinuityRow {
            lambda: l,
            mu: m,
            actual: r.actual,
            bound: r.bound,
            holds: r.actual <= r.bound,
        })
    })?;
    summary.push(SummaryRow {
        check: "norm_continuity",
        cases: cont_rows.len(),
        failures: cont_rows.iter().filter(|r| !r.holds).count(),
        worst: cont_rows.iter().filter(|r| r.bound > 0.0).map(|r| r.actual / r.bound).fold(0.0, f64::max),
    });
    sink.table("index_continuity", &cont_rows)?;

    // trace-norm bound
    let mut rng = battery_rng(cfg.seed, 5);
    let n = c.kernel_size;
    let mut vector = || -> Vec<Complex64> { (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect() };
    let instances: Vec<_> = (0..c.kernel_instances).map(|_| (vector(), vector(), vector())).collect();
    let kernel_rows = try_map_ordered(&instances, |(f1, g, f2)| -> Result<KernelRow, Failure> {
        let chk = trace_norm_bound_check(&DiscreteKernel::new(f1.clone(), g.clone(), f2.clone())?);
        Ok(KernelRow {
            instance: 0,
            trace_norm: chk.trace_norm,
            bound: chk.bound,
            hilbert_schmidt: chk.hilbert_schmidt,
            factorization_residual: chk.factorization_residual,
            holds: chk.holds(),
        })
    })?;
    let kernel_rows: Vec<KernelRow> = kernel_rows.into_iter().enumerate().map(|(i, r)| KernelRow { instance: i, ..r }).collect();
    summary.push(SummaryRow {
        check: "kernel_bound",
        cases: kernel_rows.len(),
        failures: kernel_rows.iter().filter(|r| !r.holds).count(),
        worst: kernel_rows.iter().map(|r| r.trace_norm / r.bound).fold(0.0, f64::max),
    });
    sink.table("index_kernel", &kernel_rows)?;

    // trapped eigenvalue triple
    let tl = Lattice::new(c.trapped_sites, c.trapped_spacing)?;
    let t = trapped_eigenvalue_triple(
        &free_dirac(&tl),
        &potential_operator(&soft_coulomb(&tl, c.trapped_softening)),
        -1.0,
        c.trapped_lambda_max,
    )?;
    let trapped_ok = t.lhs == t.terms.iter().sum::<i64>() && t.terms[1] == t.trapped_rank as i64;
    summary.push(SummaryRow {
        check: "trapped_triple",
        cases: 1,
        failures: usize::from(!trapped_ok),
        worst: (t.lhs - t.terms.iter().sum::<i64>()).abs() as f64,
    });
    sink.table(
        "index_trapped",
        &[TrappedRow {
            lambda_bar: t.lambda_bar,
            lambda_prime: t.lambda_prime,
            gamma: t.gamma,
            gamma_prime: t.gamma_prime,
            trapped_energy: t.trapped_energy,
            lhs: t.lhs,
            term_1: t.terms[0],
            term_2: t.terms[1],
            term_3: t.terms[2],
            trapped_rank: t.trapped_rank,
        }],
    )?;

    sink.table("index_summary", &summary)?;
    let failed: Vec<&str> = summary.iter().filter(|s| s.failures > 0).map(|s| s.check).collect();
    ensure(failed.is_empty(), format!("violated: {}", failed.join(", ")))
}
