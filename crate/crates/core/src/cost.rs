//! Linear running cost `lambda1 u + lambda2 i`, on finite horizons by
//! quadrature and on the infinite horizon through the closed-form tail.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{simulate, EpidemicParams, EpidemicState, ModelError, PiecewiseControl, Trajectory};
use crate::viability::constant_control_peak;

/// Lower end of the bracket used for the final susceptible fraction.
const S_INF_FLOOR: f64 = 1e-15;
const S_INF_REL_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("invalid cost weights: {0}")]
    InvalidWeights(String),
    #[error("final susceptible fraction not bracketed for state (s={s}, i={i})")]
    RootNotBracketed { s: f64, i: f64 },
    #[error("control is not eventually zero, so its cost is not finite")]
    NonTerminatingControl,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight of the control effort.
    pub lambda1: f64,
    /// Weight of the infected fraction.
    pub lambda2: f64,
}

impl CostWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self, CostError> {
        let weights = Self { lambda1, lambda2 };
        weights.validate()?;
        Ok(weights)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return Err(CostError::InvalidWeights(format!("lambda1 must be positive, got {}", self.lambda1)));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(CostError::InvalidWeights(format!("lambda2 must be non-negative, got {}", self.lambda2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub control_part: f64,
    pub infection_part: f64,
    pub tail_part: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(control_part: f64, infection_part: f64, tail_part: f64) -> Self {
        Self { control_part, infection_part, tail_part, total: control_part + infection_part + tail_part }
    }
}

/// Limit of `s(t)` as `t -> infinity` when `u = 0` from `state` on.
///
/// Solves `x - (gamma/beta) ln x = s + i - (gamma/beta) ln s` on
/// `(0, gamma/beta)` by bisection.
pub fn s_infinity(params: &EpidemicParams, state: &EpidemicState) -> Result<f64, CostError> {
    let herd = params.herd_threshold();
    let (s, i) = (state.s, state.i);
    // Written relative to s so that small i does not cancel.
    let f = |x: f64| (x - s) - herd * (x / s).ln() - i;
    let (mut lo, mut hi) = (S_INF_FLOOR, herd);
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(CostError::RootNotBracketed { s, i });
    }
    // Geometric midpoints: the root can sit many decades below the herd level.
    while hi > lo * (1.0 + S_INF_REL_TOLERANCE) {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// `integral_0^inf i dt` for the uncontrolled flow started at `state`.
pub fn tail_infected_integral(params: &EpidemicParams, state: &EpidemicState) -> Result<f64, CostError> {
    let s_inf = s_infinity(params, state)?;
    Ok((state.s + state.i - s_inf) / params.gamma)
}

/// Trapezoid quadrature of the running cost over the sampled interval.
///
/// Each panel uses the right limit of `u` at its left end and the left limit
/// at its right end, so a switch never falls inside a panel.
pub fn cost_finite(weights: &CostWeights, trajectory: &Trajectory) -> CostBreakdown {
    let (mut control, mut infection) = (0.0, 0.0);
    for pair in trajectory.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        control += 0.5 * (a.u + b.u_left) * dt;
        infection += 0.5 * (a.i + b.i) * dt;
    }
    CostBreakdown::new(weights.lambda1 * control, weights.lambda2 * infection, 0.0)
}

/// Running total of the finite-horizon cost at each sample.
pub fn cumulative_cost(weights: &CostWeights, trajectory: &Trajectory) -> Vec<f64> {
    let mut out = Vec::with_capacity(trajectory.samples.len());
    let mut total = 0.0;
    out.push(0.0);
    for pair in trajectory.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        total += 0.5 * dt * (weights.lambda1 * (a.u + b.u_left) + weights.lambda2 * (a.i + b.i));
        out.push(total);
    }
    out
}

/// Infinite-horizon evaluation of a control together with the simulated
/// path up to its last switch.
#[derive(Debug, Clone)]
pub struct InfiniteEvaluation {
    pub cost: CostBreakdown,
    pub trajectory: Trajectory,
    /// Start of the final zero arc.
    pub t_final: f64,
    /// Largest `i` over all times, including the uncontrolled tail.
    pub max_infected: f64,
}

/// Cost over `[0, infinity)` of a control that is zero after its last
/// finite arc.
pub fn cost_infinite(
    params: &EpidemicParams,
    weights: &CostWeights,
    control: &PiecewiseControl,
    state0: &EpidemicState,
    step: f64,
) -> Result<CostBreakdown, CostError> {
    evaluate_infinite(params, weights, control, state0, step).map(|e| e.cost)
}

/// Like [`cost_infinite`], keeping the trajectory and the overall peak.
pub fn evaluate_infinite(
    params: &EpidemicParams,
    weights: &CostWeights,
    control: &PiecewiseControl,
    state0: &EpidemicState,
    step: f64,
) -> Result<InfiniteEvaluation, CostError> {
    weights.validate()?;
    if !control.is_eventually_zero() {
        return Err(CostError::NonTerminatingControl);
    }
    let t_final = control.last_finite_end();
    let trajectory = simulate(params, state0, control, t_final, step)?;
    let end = trajectory.final_state();
    let finite = cost_finite(weights, &trajectory);
    let tail = if weights.lambda2 == 0.0 { 0.0 } else { weights.lambda2 * tail_infected_integral(params, &end)? };
    let max_infected = trajectory.max_infected().max(constant_control_peak(params, &end, 0.0));
    Ok(InfiniteEvaluation {
        cost: CostBreakdown::new(finite.control_part, finite.infection_part, tail),
        trajectory,
        t_final,
        max_infected,
    })
}
