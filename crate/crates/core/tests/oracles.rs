mod common;

use common::{peak_under, tail_integral, GridSearch, Rates, Walker};
use epictrl::{
    build_bangbang, cost_infinite, default_horizon_hint, evaluate_infinite, greedy_with_step, integrate_adjoint,
    optimize_structured, simulate, verification_horizon, verify_pmp, BangBangKnobs, CostWeights, EpidemicParams,
    EpidemicState, PmpTolerances, SearchConfig, StructureKnobs,
};

fn italy() -> (EpidemicParams, EpidemicState) {
    (EpidemicParams::italy_2020(), EpidemicState::new(0.94, 0.001).unwrap())
}

/// Greedy cost assembled from the reference pieces: free arc to the
/// saturating onset, full lockdown to the lockdown threshold, closed-form
/// ride on the ICU line down to herd immunity, closed-form tail.
fn reference_greedy(r: Rates, s0: f64, i0: f64, lambda2: f64) -> (f64, f64, f64) {
    let search = GridSearch {
        rates: r,
        lambda1: 1.0,
        lambda2,
        s0,
        i0,
        spacing: 0.5,
        step: 0.05,
        max_lockdown: 0.0,
        max_post: 0.0,
        feasibility_tol: 1e-6,
    };
    let onset = search.saturating_onset();
    let mut w = Walker::new(s0, i0);
    w.advance(&r, (1.0, lambda2), 0.0, onset, 1e-3);
    let rho = r.rho();
    while w.s > rho {
        let mut probe = w;
        probe.advance(&r, (1.0, lambda2), r.u_max, 1e-3, 1e-3);
        if probe.s <= rho {
            // Linear cut of the last step is plenty at this step size.
            let frac = (w.s - rho) / (w.s - probe.s);
            w.advance(&r, (1.0, lambda2), r.u_max, frac * 1e-3, 1.0);
            break;
        }
        w = probe;
    }
    let duration = (w.s - r.herd()) / (r.gamma * r.icu);
    let control = r.beta * duration - (w.s / r.herd()).ln() / r.icu;
    let cost = w.cost + control + lambda2 * r.icu * duration + lambda2 * tail_integral(&r, r.herd(), r.icu);
    (onset, w.t, cost)
}

#[test]
fn simulation_matches_reference_integrator() {
    let (p, x0) = italy();
    let control = build_bangbang(&p, &BangBangKnobs { sigma0: 12.5, sigma1: 140.0 }).unwrap();
    let traj = simulate(&p, &x0, &control, 300.0, 0.01).unwrap();
    let r = Rates::italy();
    let mut w = Walker::new(0.94, 0.001);
    w.advance(&r, (0.0, 0.0), 0.0, 12.5, 0.01);
    w.advance(&r, (0.0, 0.0), r.u_max, 127.5, 0.01);
    w.advance(&r, (0.0, 0.0), 0.0, 160.0, 0.01);
    let end = traj.last();
    assert!((end.s - w.s).abs() < 1e-9 && (end.i - w.i).abs() < 1e-9);
}

#[test]
fn italy_greedy_switch_times_and_costs() {
    let (p, x0) = italy();
    let greedy = greedy_with_step(&p, &x0, 0.01).unwrap();
    let sw = greedy.switches;
    assert!((sw.tau0 - 6.705).abs() < 1e-3, "{sw:?}");
    assert!((sw.tau1 - 181.98).abs() < 1e-2, "{sw:?}");
    assert!((sw.tau2 - 2748.99).abs() < 1e-2, "{sw:?}");
    for (lambda2, expected) in [(0.0, 252.57), (5.0, 298.16), (8.0, 325.52)] {
        let w = CostWeights::new(1.0, lambda2).unwrap();
        let cost = cost_infinite(&p, &w, &greedy.control, &x0, 0.01).unwrap().total;
        let (onset, entry, reference) = reference_greedy(Rates::italy(), 0.94, 0.001, lambda2);
        assert!((onset - sw.tau0).abs() < 1e-4 && (entry - sw.tau1).abs() < 1e-3);
        assert!((cost - reference).abs() < 1e-4 * reference, "{cost} vs {reference}");
        assert!((cost - expected).abs() < 5e-3, "{cost} vs {expected}");
    }
}

#[test]
fn delta_greedy_agrees_with_reference() {
    let p = EpidemicParams::delta_2021();
    let x0 = EpidemicState::new(0.5, 0.001).unwrap();
    let greedy = greedy_with_step(&p, &x0, 0.01).unwrap();
    let w = CostWeights::new(1.0, 30.0).unwrap();
    let eval = evaluate_infinite(&p, &w, &greedy.control, &x0, 0.01).unwrap();
    let (onset, _, reference) = reference_greedy(Rates::delta(), 0.5, 0.001, 30.0);
    assert!((onset - greedy.switches.tau0).abs() < 1e-4);
    assert!((eval.cost.total - reference).abs() < 1e-4 * reference);
    assert!(eval.max_infected <= p.i_max + 1e-9);
}

#[test]
fn tail_peak_is_the_closed_form() {
    let r = Rates::italy();
    let (p, _) = italy();
    let state = EpidemicState::new(0.6, 0.002).unwrap();
    let traj = simulate(&p, &state, &epictrl::PiecewiseControl::zero(), 400.0, 0.01).unwrap();
    assert!((traj.max_infected() - peak_under(&r, 0.0, 0.6, 0.002)).abs() < 1e-9);
}

#[test]
fn delta_optimum_beats_greedy_and_passes_pontryagin() {
    let p = EpidemicParams::delta_2021();
    let x0 = EpidemicState::new(0.5, 0.001).unwrap();
    let w = CostWeights::new(1.0, 30.0).unwrap();
    let hint = default_horizon_hint(&p, &x0).unwrap();
    let report = optimize_structured(&p, &w, &x0, hint, &SearchConfig::default()).unwrap();
    assert!(report.feasible);
    assert!(report.best_cost.total < report.greedy_cost.unwrap().total);
    assert!(matches!(report.best_knobs, StructureKnobs::BoundaryArc(k) if k.delta_post > 0.0));

    let t = verification_horizon(&p, &x0, &report.control).unwrap();
    let control = report.control.truncate_at(t);
    let traj = simulate(&p, &x0, &control, t, 0.01).unwrap();
    let adjoint = integrate_adjoint(&p, &w, &traj, &control).unwrap();
    let pmp = verify_pmp(&p, &w, &adjoint, &control, &PmpTolerances::default());
    assert!(pmp.stationarity_fraction >= 0.95, "{pmp:?}");
    assert!(pmp.p_s_monotone && pmp.mu_monotone && pmp.complementarity);
}
