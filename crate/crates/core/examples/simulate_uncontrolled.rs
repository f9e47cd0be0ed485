//! Free epidemic under the Italy 2020 rates: peak, herd-immunity crossing
//! and the final susceptible fraction.

use epictrl::{s_infinity, simulate, EpidemicParams, EpidemicState, EventKind, PiecewiseControl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = EpidemicParams::italy_2020();
    let state0 = EpidemicState::new(0.94, 0.001)?;
    let trajectory = simulate(&params, &state0, &PiecewiseControl::zero(), 365.0, 0.01)?;

    let peak = trajectory.samples.iter().max_by(|a, b| a.i.total_cmp(&b.i)).unwrap();
    println!("peak infected {:.4} on day {:.1} (ICU level {})", peak.i, peak.t, params.i_max);
    if let Some(t) = trajectory.first_event(EventKind::IcuHit) {
        println!("ICU level reached on day {t:.2}");
    }
    if let Some(t) = trajectory.first_event(EventKind::HerdCross) {
        println!("herd immunity (s = {:.4}) on day {t:.2}", params.herd_threshold());
    }
    println!("susceptibles left in the long run: {:.4}", s_infinity(&params, &state0)?);
    Ok(())
}
