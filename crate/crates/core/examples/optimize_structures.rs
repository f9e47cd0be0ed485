//! Structured optimization on the three reference cases: no ICU bound,
//! Italy 2020 and Delta 2021.

use epictrl::{default_horizon_hint, optimize_structured, CostWeights, EpidemicParams, EpidemicState, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("italy-2020 without ICU bound", EpidemicParams::new(0.2142, 0.0714, 0.135, 1.0)?, (0.94, 0.001), 6.0),
        ("italy-2020", EpidemicParams::italy_2020(), (0.94, 0.001), 5.0),
        ("delta-2021", EpidemicParams::delta_2021(), (0.5, 0.001), 30.0),
    ];
    for (name, params, (s0, i0), lambda2) in cases {
        let state0 = EpidemicState::new(s0, i0)?;
        let weights = CostWeights::new(1.0, lambda2)?;
        let hint = default_horizon_hint(&params, &state0)?;
        let report = optimize_structured(&params, &weights, &state0, hint, &SearchConfig::default())?;
        println!("{name}, lambda2 = {lambda2}");
        println!("  best {:?}", report.best_knobs);
        println!(
            "  cost {:.3}, feasible {}, {} evaluations",
            report.best_cost.total, report.feasible, report.evaluations
        );
        if let Some(greedy) = report.greedy_cost {
            println!("  greedy cost {:.3}", greedy.total);
        }
        for family in &report.family_compared {
            println!("  {:?}: objective {:.3}", family.family, family.objective);
        }
    }
    Ok(())
}
