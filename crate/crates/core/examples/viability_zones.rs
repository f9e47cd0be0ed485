//! Viability curves and the zone of a few initial states.

use epictrl::{classify, critical_susceptibles, curve_value, CurveKind, EpidemicParams, EpidemicState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, params) in [("italy-2020", EpidemicParams::italy_2020()), ("delta-2021", EpidemicParams::delta_2021())] {
        let c = critical_susceptibles(&params);
        println!("{name}: herd threshold {:.4}, lockdown threshold {:.4}", c.herd, c.max_controlled);
        for s in [0.3, 0.5, 0.7, 0.9] {
            println!(
                "  s = {s:.1}: phi0 {:+.5}  psi0 {:+.5}  phimax {:+.5}",
                curve_value(&params, CurveKind::Phi0, s)?,
                curve_value(&params, CurveKind::Psi0, s)?,
                curve_value(&params, CurveKind::PhiMax, s)?
            );
        }
        for (s, i) in [(0.3, 0.001), (0.5, 0.001), (0.94, 0.001), (0.94, 0.01)] {
            let zone = classify(&params, &EpidemicState::new(s, i)?)?;
            println!("  ({s}, {i}) -> {zone:?}");
        }
    }
    Ok(())
}
