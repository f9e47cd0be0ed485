//! Costates and necessary-condition residuals along the optimized Italy 2020
//! lockdown.

use epictrl::{
    default_horizon_hint, integrate_adjoint, optimize_structured, simulate, verification_horizon, verify_pmp,
    CostWeights, EpidemicParams, EpidemicState, PmpTolerances, SearchConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = EpidemicParams::italy_2020();
    let state0 = EpidemicState::new(0.94, 0.001)?;
    let weights = CostWeights::new(1.0, 5.0)?;
    let hint = default_horizon_hint(&params, &state0)?;
    let best = optimize_structured(&params, &weights, &state0, hint, &SearchConfig::default())?;

    let horizon = verification_horizon(&params, &state0, &best.control)?;
    let control = best.control.truncate_at(horizon);
    let trajectory = simulate(&params, &state0, &control, horizon, 0.01)?;
    let adjoint = integrate_adjoint(&params, &weights, &trajectory, &control)?;
    let report = verify_pmp(&params, &weights, &adjoint, &control, &PmpTolerances::default());

    println!("checked on [0, {horizon}]");
    println!("stationarity fraction {:.4}", report.stationarity_fraction);
    println!("singular residual {:.2e}", report.singular_residual);
    println!("Hamiltonian residual {:.2e}", report.hamiltonian_residual);
    println!("min eta {:.2e}, min p_s {:.2e}, p_s monotone {}", report.eta_min, report.p_s_min, report.p_s_monotone);
    for atom in &report.atoms {
        println!("multiplier atom at day {:.2} ({:?}): size {:.3e}", atom.t, atom.kind, atom.size);
    }
    for sample in adjoint.samples.iter().step_by(50_000) {
        println!("t {:>8.2}  p_s {:>10.4}  p_i {:>10.4}  psi {:>8.4}", sample.t, sample.p_s, sample.p_i, sample.psi);
    }
    Ok(())
}
