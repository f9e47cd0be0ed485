//! Finite-horizon optima against the infinite-horizon one. Horizons must be
//! long enough for the limit control to pass herd immunity.

use epictrl::{
    choose_horizon, default_horizon_hint, gamma_diagnostic, optimize_structured, CostWeights, EpidemicParams,
    EpidemicState, OptimizeError, SearchConfig, DEFAULT_MARGIN,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = EpidemicParams::italy_2020();
    let state0 = EpidemicState::new(0.94, 0.001)?;
    let config = SearchConfig::default();
    for lambda2 in [0.0, 5.0] {
        let weights = CostWeights::new(1.0, lambda2)?;
        match gamma_diagnostic(&params, &weights, &state0, &[300.0, 600.0], &config) {
            Err(OptimizeError::HorizonTooShort { horizon, required }) => {
                println!("lambda2 = {lambda2}: {horizon} d is too short, {required} d needed")
            }
            other => println!("lambda2 = {lambda2}: {other:?}"),
        }
        let hint = default_horizon_hint(&params, &state0)?;
        let limit = optimize_structured(&params, &weights, &state0, hint, &config)?;
        let required = choose_horizon(&params, &state0, &limit.control, DEFAULT_MARGIN)?;
        let horizons = [required, required + 200.0, required + 400.0];
        let diagnostic = gamma_diagnostic(&params, &weights, &state0, &horizons, &config)?;
        println!("  limit cost {:.4}", diagnostic.limit_cost);
        for (t, (cost, gap)) in diagnostic.horizons.iter().zip(diagnostic.truncated_costs.iter().zip(&diagnostic.gaps))
        {
            println!("  T = {t:>6}: cost {cost:.4}, gap {gap:.2e}");
        }
    }
    Ok(())
}
