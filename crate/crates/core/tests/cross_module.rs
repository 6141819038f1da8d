use vacpol_core::flow::{direct_count, find_all_dives, sweep, ChannelSetup, CountingFunction};
use vacpol_core::nuclear::enclosed_charge;
use vacpol_core::projector::matrix_flow_theorem;
use vacpol_core::radial::RadialGrid;
use vacpol_core::uehling::UehlingProfile;
use vacpol_core::ChargeDensity;

fn setup() -> ChannelSetup {
    ChannelSetup::new(ChargeDensity::gaussian(0.02).unwrap(), RadialGrid::new(400, 20.0).unwrap(), 1e-3).unwrap()
}

#[test]
fn counting_function_matches_sturm_counts_in_both_channels() {
    let s = setup();
    let channels = [-1, 1];
    let traj = sweep(&s, &channels, 2.0, 21).unwrap();
    let cf = CountingFunction::new(find_all_dives(&s, &traj, 1e-4).unwrap());
    assert!(cf.events.iter().any(|e| e.kappa == 1), "κ = +1 dives before λ = 2");
    for &l in &traj[0].lambdas {
        if cf.events.iter().any(|e| e.bracket.0 <= l && l <= e.bracket.1) {
            continue;
        }
        assert_eq!(cf.eval(l), direct_count(&s, &channels, l).unwrap(), "λ = {l}");
    }
    let steps = cf.steps();
    assert!(steps.windows(2).all(|w| w[1].1 > w[0].1 && w[1].0 >= w[0].0));
    assert!(steps.iter().all(|(_, d)| d % 2 == 0));
}

#[test]
fn positive_kappa_channel_index_equals_dived_count() {
    let s = setup();
    let (h0, phi) = s.matrix_model(1).unwrap();
    let lambdas = [0.0, 1.0, 1.4, 1.5, 2.0];
    let rows = matrix_flow_theorem(&h0, &phi, &lambdas, s.threshold()).unwrap();
    for (r, &l) in rows.iter().zip(&lambdas) {
        assert!(r.consistent(1e-8), "{r:?}");
        assert_eq!(r.crossings, s.dived_count(1, l).unwrap() as i64);
    }
    assert!(rows.last().unwrap().index > 0);
}

#[test]
fn enclosed_charge_obeys_gauss_law() {
    for d in [ChargeDensity::gaussian(0.1).unwrap(), ChargeDensity::uniform_ball(0.2).unwrap()] {
        let radii = [0.05, 0.12, 0.3, 0.6];
        let q = enclosed_charge(&d, &radii).unwrap();
        for (&r, &qr) in radii.iter().zip(&q) {
            let h = 1e-4 * r;
            let field = -(d.potential_at(r + h) - d.potential_at(r - h)) / (2.0 * h);
            assert!((field * r * r - qr).abs() < 1e-7, "{d:?} r = {r}: {} vs {qr}", field * r * r);
        }
    }
}

#[test]
fn cumulative_induced_charge_approaches_net_charge() {
    let p = UehlingProfile::new(ChargeDensity::gaussian(0.05).unwrap(), 1.0);
    let radii = [0.01, 0.1, 1.0, 5.0, 20.0];
    let q = p.cumulative_charge(&radii).unwrap();
    let bal = p.total_charge(20.0).unwrap();
    // screening: the cloud near the nucleus carries charge of the sign of e
    assert!(q[0] < 0.0);
    assert!(q[4].abs() < 1e-6 * bal.absolute);
    assert!((q[4] - bal.net).abs() < 1e-6 * bal.absolute);
    assert!(q[3].abs() < q[1].abs());
}
