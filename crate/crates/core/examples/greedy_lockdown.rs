//! The greedy lockdown for Italy 2020 and its cost for several infection
//! weights.

use epictrl::{evaluate_infinite, greedy_with_step, t_stab, CostWeights, EpidemicParams, EpidemicState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = EpidemicParams::italy_2020();
    let state0 = EpidemicState::new(0.94, 0.001)?;
    let greedy = greedy_with_step(&params, &state0, 0.01)?;
    let sw = greedy.switches;
    println!("lockdown from day {:.3}, ICU line from day {:.2} to day {:.2}", sw.tau0, sw.tau1, sw.tau2);
    println!("time on the line {:.1} d (bound {:.1} d)", sw.boundary_duration(), t_stab(&params));
    for lambda2 in [0.0, 5.0, 8.0] {
        let eval = evaluate_infinite(&params, &CostWeights::new(1.0, lambda2)?, &greedy.control, &state0, 0.01)?;
        println!(
            "lambda2 = {lambda2}: cost {:.2} (control {:.2}, infection {:.2}, tail {:.2}), max i {:.6}",
            eval.cost.total, eval.cost.control_part, eval.cost.infection_part, eval.cost.tail_part, eval.max_infected
        );
    }
    Ok(())
}
