//! Closed-form viability curves and zone classification.
//!
//! All three curves are level sets of the first integral
//! `s + i - rho ln s` of the SIR flow under a constant control, where
//! `rho = gamma / (beta - u)`, glued to the flat line `i = i_M` on the left.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EpidemicParams, EpidemicState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViabilityError {
    #[error("curves are defined for s > 0, got {0}")]
    NonPositiveS(f64),
    #[error("state (s={s}, i={i}) lies outside the state triangle")]
    OutsideTriangle { s: f64, i: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    /// Upper edge of the safe zone: the free trajectory through `(gamma/beta, i_M)`.
    Phi0,
    /// Upper edge of the viable set: the full-lockdown trajectory through
    /// `(gamma/(beta-u_max), i_M)`.
    PhiMax,
    /// Free trajectory through `(gamma/(beta-u_max), i_M)`.
    Psi0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// The uncontrolled epidemic never exceeds the ICU level.
    Safe,
    /// Viable, and the ICU level is reached without a full lockdown.
    ViableNoLockdown,
    /// Viable only with a full lockdown before reaching the ICU level.
    ViableLockdown,
    /// No admissible control keeps `i <= i_M`.
    Infeasible,
}

impl Zone {
    pub fn is_viable(self) -> bool {
        self != Zone::Infeasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSusceptibles {
    /// Herd immunity threshold `gamma / beta`.
    pub herd: f64,
    /// `gamma / (beta - u_max)`, the susceptible level where a full-lockdown
    /// trajectory peaks.
    pub max_controlled: f64,
}

pub fn critical_susceptibles(params: &EpidemicParams) -> CriticalSusceptibles {
    CriticalSusceptibles { herd: params.herd_threshold(), max_controlled: params.lockdown_threshold() }
}

/// Ordinate of the requested curve at `s`. Large `s` may give negative
/// values; they are returned as is.
pub fn curve_value(params: &EpidemicParams, which: CurveKind, s: f64) -> Result<f64, ViabilityError> {
    if s.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(ViabilityError::NonPositiveS(s));
    }
    let herd = params.herd_threshold();
    let peak = params.lockdown_threshold();
    let value = match which {
        CurveKind::Phi0 if s <= herd => params.i_max,
        CurveKind::Phi0 => herd + params.i_max - s + herd * (s / herd).ln(),
        CurveKind::PhiMax if s <= peak => params.i_max,
        CurveKind::PhiMax => peak + params.i_max - s + peak * (s / peak).ln(),
        CurveKind::Psi0 if s <= peak => params.i_max,
        CurveKind::Psi0 => peak + params.i_max - s + herd * (s / peak).ln(),
    };
    Ok(value)
}

/// Zone of `state`; a state on a curve belongs to the zone below it.
pub fn classify(params: &EpidemicParams, state: &EpidemicState) -> Result<Zone, ViabilityError> {
    if !state.in_triangle() {
        return Err(ViabilityError::OutsideTriangle { s: state.s, i: state.i });
    }
    let curve = |kind| curve_value(params, kind, state.s).expect("s > 0 inside the triangle");
    let zone = if state.i <= curve(CurveKind::Phi0) {
        Zone::Safe
    } else if state.i <= curve(CurveKind::Psi0) {
        Zone::ViableNoLockdown
    } else if state.i <= curve(CurveKind::PhiMax) {
        Zone::ViableLockdown
    } else {
        Zone::Infeasible
    };
    Ok(zone)
}

/// Supremum of `i` along the trajectory from `state` under the constant
/// control `u`, from the first integral of the flow.
pub fn constant_control_peak(params: &EpidemicParams, state: &EpidemicState, u: f64) -> f64 {
    let rho = params.gamma / (params.beta - u);
    if state.s > rho {
        state.i + state.s - rho - rho * (state.s / rho).ln()
    } else {
        state.i
    }
}
