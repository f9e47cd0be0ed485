//! Greedy lockdown synthesis and builders for the two structured control
//! families: bang-bang `0 - u_max - 0`, and `0 - u_max - boundary - u_max - 0`
//! where the boundary arc holds `i` at the ICU level.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    run_arc, ControlArc, ControlLaw, EpidemicParams, EpidemicState, ModelError, PiecewiseControl, DEFAULT_STEP,
};
use crate::viability::{classify, curve_value, CurveKind, ViabilityError, Zone};

/// Give up on an event search after this many days.
const EVENT_SEARCH_LIMIT: f64 = 1e5;

/// A lockdown arc that ends this close below the ICU level counts as
/// saturating it.
const SATURATION_SLACK: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("initial state lies above the viability curve; no control keeps i <= i_M")]
    InfeasibleStart,
    #[error("lockdown started at t={tau0} never reaches the ICU level (peak i={peak})")]
    NoSaturation { tau0: f64, peak: f64 },
    #[error("ICU level reached at t={t}, before the lockdown starts at t={tau0}")]
    ConstraintViolated { t: f64, tau0: f64 },
    #[error("s={s} lies outside the singular range [{low}, {high}]")]
    OutOfSingularRange { s: f64, low: f64, high: f64 },
    #[error("invalid structure knobs: {0}")]
    InvalidKnobs(String),
    #[error("no {0} event within {EVENT_SEARCH_LIMIT} days")]
    EventNotFound(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Viability(#[from] ViabilityError),
}

/// Switch times of the `0 - u_max - u_max - 0` bang-bang control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangBangKnobs {
    /// Lockdown start.
    pub sigma0: f64,
    /// Lockdown end.
    pub sigma1: f64,
}

/// Parameters of the boundary-arc control family. The time at which the
/// ICU level is reached is not a knob: it follows from the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryKnobs {
    /// Lockdown start.
    pub tau0: f64,
    /// Requested time on the ICU line; clipped to the susceptible budget.
    pub delta_sing: f64,
    /// Length of the second full lockdown after the boundary arc.
    pub delta_post: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BangBang,
    BoundaryArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StructureKnobs {
    BangBang(BangBangKnobs),
    BoundaryArc(BoundaryKnobs),
}

impl StructureKnobs {
    pub fn family(&self) -> Family {
        match self {
            StructureKnobs::BangBang(_) => Family::BangBang,
            StructureKnobs::BoundaryArc(_) => Family::BoundaryArc,
        }
    }

    /// Builds the control, locating state events with the given step.
    pub fn build(
        &self,
        params: &EpidemicParams,
        state0: &EpidemicState,
        step: f64,
    ) -> Result<StructuredControl, PolicyError> {
        match self {
            StructureKnobs::BangBang(knobs) => {
                let control = build_bangbang(params, knobs)?;
                Ok(StructuredControl { control, switches: SwitchTimes::bang_bang(knobs) })
            }
            StructureKnobs::BoundaryArc(knobs) => build_boundary_with_step(params, state0, knobs, step),
        }
    }
}

/// `tau0`: lockdown start; `tau1`: ICU level reached; `tau2`: boundary arc
/// ends; `tau3`: second lockdown ends. Bang-bang controls report
/// `tau1 = tau2 = tau3 = sigma1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchTimes {
    pub tau0: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

impl SwitchTimes {
    fn bang_bang(knobs: &BangBangKnobs) -> Self {
        if knobs.sigma0 == knobs.sigma1 {
            return Self { tau0: 0.0, tau1: 0.0, tau2: 0.0, tau3: 0.0 };
        }
        Self { tau0: knobs.sigma0, tau1: knobs.sigma1, tau2: knobs.sigma1, tau3: knobs.sigma1 }
    }

    pub fn boundary_duration(&self) -> f64 {
        self.tau2 - self.tau1
    }

    pub fn post_duration(&self) -> f64 {
        self.tau3 - self.tau2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredControl {
    pub control: PiecewiseControl,
    pub switches: SwitchTimes,
}

/// Longest possible stay on the ICU line, `u_max / (beta (beta - u_max) i_M)`.
pub fn t_stab(params: &EpidemicParams) -> f64 {
    params.u_max / (params.beta * (params.beta - params.u_max) * params.i_max)
}

/// The feedback value `beta - gamma / s` that keeps `i` constant.
pub fn singular_value(params: &EpidemicParams, s: f64) -> Result<f64, PolicyError> {
    let low = params.herd_threshold();
    let high = params.lockdown_threshold();
    let slack = 1e-12 * high;
    if !(s >= low - slack && s <= high + slack) {
        return Err(PolicyError::OutOfSingularRange { s, low, high });
    }
    Ok((params.beta - params.gamma / s).clamp(0.0, params.u_max))
}

/// Greedy lockdown: the least control effort that keeps the state viable.
pub fn synthesize_greedy(params: &EpidemicParams, state0: &EpidemicState) -> Result<PiecewiseControl, PolicyError> {
    greedy_with_step(params, state0, DEFAULT_STEP).map(|g| g.control)
}

/// Greedy lockdown with its switch times, events located on a grid of the
/// given step.
///
/// The control is `0` until the state meets the full-lockdown curve, `u_max`
/// until `s` drops to `gamma/(beta - u_max)`, then the boundary law until
/// `s = gamma/beta`, then `0`.
pub fn greedy_with_step(
    params: &EpidemicParams,
    state0: &EpidemicState,
    step: f64,
) -> Result<StructuredControl, PolicyError> {
    params.validate()?;
    let zone = classify(params, state0)?;
    match zone {
        Zone::Infeasible => return Err(PolicyError::InfeasibleStart),
        Zone::Safe => {
            let control = PiecewiseControl::new(vec![ControlArc::new(0.0, f64::INFINITY, ControlLaw::ZERO)], true)?;
            return Ok(StructuredControl {
                control,
                switches: SwitchTimes { tau0: 0.0, tau1: 0.0, tau2: 0.0, tau3: 0.0 },
            });
        }
        Zone::ViableNoLockdown | Zone::ViableLockdown => {}
    }
    let herd = params.herd_threshold();
    let peak_level = params.lockdown_threshold();

    let free = run_arc(params, ControlLaw::ZERO, 0.0, *state0, f64::INFINITY, step, EVENT_SEARCH_LIMIT, |_, s, i| {
        i - curve_value(params, CurveKind::PhiMax, s).unwrap_or(f64::NEG_INFINITY)
    });
    let tau0 = free.stop.ok_or(PolicyError::EventNotFound("lockdown curve"))?;
    let at_tau0 = free.end();

    let (tau1, s1) = if at_tau0.s > peak_level {
        let start = EpidemicState { s: at_tau0.s, i: at_tau0.i };
        let lockdown = run_arc(
            params,
            ControlLaw::constant(params.u_max),
            tau0,
            start,
            f64::INFINITY,
            step,
            EVENT_SEARCH_LIMIT,
            |_, s, _| peak_level - s,
        );
        let tau1 = lockdown.stop.ok_or(PolicyError::EventNotFound("lockdown peak"))?;
        (tau1, lockdown.end().s)
    } else {
        (tau0, at_tau0.s)
    };

    let tau2 = tau1 + ((s1 - herd) / (params.gamma * params.i_max)).max(0.0);
    let mut arcs = Vec::with_capacity(3);
    push_arc(&mut arcs, 0.0, tau0, ControlLaw::ZERO);
    push_arc(&mut arcs, tau0, tau1, ControlLaw::constant(params.u_max));
    push_arc(&mut arcs, tau1, tau2, ControlLaw::SingularBoundary { s_at_tau2: herd, tau2 });
    let control = PiecewiseControl::new(arcs, true)?;
    Ok(StructuredControl { control, switches: SwitchTimes { tau0, tau1, tau2, tau3: tau2 } })
}

fn push_arc(arcs: &mut Vec<ControlArc>, start: f64, end: f64, law: ControlLaw) {
    if end > start {
        arcs.push(ControlArc::new(start, end, law));
    }
}

fn check_time(name: &str, value: f64) -> Result<(), PolicyError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(PolicyError::InvalidKnobs(format!("{name} must be finite and non-negative, got {value}")))
    }
}

/// `0` on `[0, sigma0)`, `u_max` on `[sigma0, sigma1)`, `0` afterwards.
pub fn build_bangbang(params: &EpidemicParams, knobs: &BangBangKnobs) -> Result<PiecewiseControl, PolicyError> {
    params.validate()?;
    check_time("sigma0", knobs.sigma0)?;
    check_time("sigma1", knobs.sigma1)?;
    if knobs.sigma1 < knobs.sigma0 {
        return Err(PolicyError::InvalidKnobs(format!("sigma1 ({}) precedes sigma0 ({})", knobs.sigma1, knobs.sigma0)));
    }
    if knobs.sigma1 == knobs.sigma0 {
        return Ok(PiecewiseControl::zero());
    }
    let mut arcs = Vec::with_capacity(2);
    push_arc(&mut arcs, 0.0, knobs.sigma0, ControlLaw::ZERO);
    push_arc(&mut arcs, knobs.sigma0, knobs.sigma1, ControlLaw::constant(params.u_max));
    Ok(PiecewiseControl::new(arcs, true)?)
}

/// Boundary-arc control at the default step.
pub fn build_boundary(
    params: &EpidemicParams,
    state0: &EpidemicState,
    knobs: &BoundaryKnobs,
) -> Result<StructuredControl, PolicyError> {
    build_boundary_with_step(params, state0, knobs, DEFAULT_STEP)
}

/// `0` on `[0, tau0)`; `u_max` until the ICU level is reached at `tau1`; the
/// boundary law for `min(delta_sing, budget)` days, where the budget keeps
/// `s >= gamma/beta` on the arc; `u_max` for `delta_post` days; `0` after.
///
/// A free arc that reaches the ICU level at `s <= gamma/(beta - u_max)`
/// before `tau0` enters the boundary arc directly, with no lockdown arc. A
/// lockdown started too late to stop `i` below the ICU level runs until `i`
/// peaks; the resulting control overshoots and is returned as is so the
/// caller can measure the violation.
pub fn build_boundary_with_step(
    params: &EpidemicParams,
    state0: &EpidemicState,
    knobs: &BoundaryKnobs,
    step: f64,
) -> Result<StructuredControl, PolicyError> {
    params.validate()?;
    check_time("tau0", knobs.tau0)?;
    check_time("delta_sing", knobs.delta_sing)?;
    check_time("delta_post", knobs.delta_post)?;
    if classify(params, state0)? == Zone::Infeasible {
        return Err(PolicyError::InfeasibleStart);
    }
    let herd = params.herd_threshold();
    let peak_level = params.lockdown_threshold();
    let icu = params.i_max;

    let free = run_arc(params, ControlLaw::ZERO, 0.0, *state0, knobs.tau0, step, knobs.tau0, |_, _, i| i - icu);
    let end = free.end();
    let (tau0, tau1, s1) = match free.stop {
        Some(t) if end.s <= peak_level => (t, t, end.s),
        Some(t) => return Err(PolicyError::ConstraintViolated { t, tau0: knobs.tau0 }),
        None => {
            let start = EpidemicState { s: end.s, i: end.i };
            let lockdown = run_arc(
                params,
                ControlLaw::constant(params.u_max),
                knobs.tau0,
                start,
                f64::INFINITY,
                step,
                EVENT_SEARCH_LIMIT,
                |_, s, _| peak_level - s,
            );
            let tau1 = lockdown.stop.ok_or(PolicyError::EventNotFound("lockdown peak"))?;
            let at_peak = lockdown.end();
            if at_peak.i < icu - SATURATION_SLACK {
                let peak = lockdown.samples.iter().map(|p| p.i).fold(f64::NEG_INFINITY, f64::max);
                return Err(PolicyError::NoSaturation { tau0: knobs.tau0, peak });
            }
            (knobs.tau0, tau1, at_peak.s)
        }
    };

    let budget = ((s1 - herd) / (params.gamma * icu)).max(0.0);
    let delta = knobs.delta_sing.min(budget);
    let tau2 = tau1 + delta;
    let s2 = s1 - params.gamma * icu * delta;
    let tau3 = tau2 + knobs.delta_post;
    let mut arcs = Vec::with_capacity(4);
    push_arc(&mut arcs, 0.0, tau0, ControlLaw::ZERO);
    push_arc(&mut arcs, tau0, tau1, ControlLaw::constant(params.u_max));
    push_arc(&mut arcs, tau1, tau2, ControlLaw::SingularBoundary { s_at_tau2: s2, tau2 });
    push_arc(&mut arcs, tau2, tau3, ControlLaw::constant(params.u_max));
    let control = PiecewiseControl::new(arcs, true)?;
    Ok(StructuredControl { control, switches: SwitchTimes { tau0, tau1, tau2, tau3 } })
}
