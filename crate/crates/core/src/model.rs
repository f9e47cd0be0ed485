//! Controlled SIR dynamics, piecewise-defined controls and a fixed-step
//! fourth-order integrator with event localization.
//!
//! The state equations are
//!
//! ```text
//! s' = -(beta - u) s i
//! i' =  (beta - u) s i - gamma i
//! ```
//!
//! Controls are sequences of contiguous arcs. Each arc is integrated with its
//! own uniform step so that control discontinuities always fall on a grid
//! point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width of the time bracket returned by event bisection, in days.
pub const EVENT_TOLERANCE: f64 = 1e-10;

/// Default integration step, in days.
pub const DEFAULT_STEP: f64 = 0.01;

/// Distance below the ICU level that re-arms the ICU-hit event.
const ICU_REARM: f64 = 1e-6;

/// Slack allowed when checking that a control value lies in `[0, u_max]`.
const CONTROL_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("initial state (s={s}, i={i}) lies outside the state triangle")]
    InvalidInitialState { s: f64, i: f64 },
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("control is undefined at t={0}")]
    Undefined(f64),
    #[error("integration step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
}

/// Epidemic rates and the ICU capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    /// Transmission rate, 1/day.
    pub beta: f64,
    /// Recovery rate, 1/day.
    pub gamma: f64,
    /// Largest admissible control effort, 1/day.
    pub u_max: f64,
    /// ICU capacity as a fraction of the population.
    #[serde(rename = "i_M")]
    pub i_max: f64,
}

impl EpidemicParams {
    pub fn new(beta: f64, gamma: f64, u_max: f64, i_max: f64) -> Result<Self, ModelError> {
        let params = Self { beta, gamma, u_max, i_max };
        params.validate()?;
        Ok(params)
    }

    /// Rates from the first pandemic wave in Italy (spring 2020).
    pub fn italy_2020() -> Self {
        Self { beta: 0.2142, gamma: 0.0714, u_max: 0.135, i_max: 0.0031 }
    }

    /// Rates for the Delta variant in Italy (autumn 2021).
    pub fn delta_2021() -> Self {
        Self { beta: 0.5, gamma: 0.0714, u_max: 0.315, i_max: 0.021 }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [self.beta, self.gamma, self.u_max, self.i_max].iter().all(|x| x.is_finite());
        if !finite {
            return Err(ModelError::InvalidParams("all rates must be finite".into()));
        }
        if self.beta <= 0.0 {
            return Err(ModelError::InvalidParams(format!("beta must be positive, got {}", self.beta)));
        }
        if self.gamma <= 0.0 {
            return Err(ModelError::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.u_max > 0.0 && self.u_max < self.beta) {
            return Err(ModelError::InvalidParams(format!("u_max must lie in (0, beta), got {}", self.u_max)));
        }
        if !(self.i_max > 0.0 && self.i_max <= 1.0) {
            return Err(ModelError::InvalidParams(format!("i_M must lie in (0, 1], got {}", self.i_max)));
        }
        Ok(())
    }

    /// Herd immunity threshold `gamma / beta`.
    pub fn herd_threshold(&self) -> f64 {
        self.gamma / self.beta
    }

    /// Susceptible level `gamma / (beta - u_max)` at which a full lockdown
    /// trajectory peaks.
    pub fn lockdown_threshold(&self) -> f64 {
        self.gamma / (self.beta - self.u_max)
    }

    /// Right-hand side of the state equations.
    #[inline]
    pub fn rhs(&self, s: f64, i: f64, u: f64) -> (f64, f64) {
        let infections = (self.beta - u) * s * i;
        (-infections, infections - self.gamma * i)
    }
}

/// A point `(s, i)` of the state triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: f64) -> Result<Self, ModelError> {
        let state = Self { s, i };
        if state.in_triangle() {
            Ok(state)
        } else {
            Err(ModelError::InvalidInitialState { s, i })
        }
    }

    pub fn in_triangle(&self) -> bool {
        self.s.is_finite() && self.i.is_finite() && self.s > 0.0 && self.i > 0.0 && self.s + self.i <= 1.0 + 1e-12
    }
}

/// How the control value is produced on an arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ControlLaw {
    Constant {
        value: f64,
    },
    /// Open-loop form of the feedback `beta - gamma / s` that holds `i` at the
    /// ICU level: `beta - gamma / (s_at_tau2 + gamma i_M (tau2 - t))`.
    SingularBoundary {
        s_at_tau2: f64,
        tau2: f64,
    },
}

impl ControlLaw {
    pub const ZERO: ControlLaw = ControlLaw::Constant { value: 0.0 };

    pub fn constant(value: f64) -> Self {
        ControlLaw::Constant { value }
    }

    /// Unclamped value of the law.
    pub fn raw_value(&self, params: &EpidemicParams, t: f64) -> f64 {
        match *self {
            ControlLaw::Constant { value } => value,
            ControlLaw::SingularBoundary { s_at_tau2, tau2 } => {
                params.beta - params.gamma / (s_at_tau2 + params.gamma * params.i_max * (tau2 - t))
            }
        }
    }

    /// Value of the law at `t`, clamped to `[0, u_max]` to absorb rounding at
    /// the ends of a boundary arc.
    #[inline]
    pub fn value(&self, params: &EpidemicParams, t: f64) -> f64 {
        match *self {
            ControlLaw::Constant { value } => value,
            ControlLaw::SingularBoundary { .. } => self.raw_value(params, t).clamp(0.0, params.u_max),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, ControlLaw::SingularBoundary { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlArc {
    pub t_start: f64,
    /// May be `f64::INFINITY` for the final arc only.
    pub t_end: f64,
    #[serde(flatten)]
    pub law: ControlLaw,
}

impl ControlArc {
    pub fn new(t_start: f64, t_end: f64, law: ControlLaw) -> Self {
        Self { t_start, t_end, law }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// A control made of contiguous arcs, optionally followed by `u = 0` forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseControl {
    arcs: Vec<ControlArc>,
    terminal_zero: bool,
}

impl PiecewiseControl {
    pub fn new(arcs: Vec<ControlArc>, terminal_zero: bool) -> Result<Self, ModelError> {
        if let Some(first) = arcs.first() {
            if first.t_start != 0.0 {
                return Err(ModelError::InvalidControl(format!(
                    "first arc must start at 0, starts at {}",
                    first.t_start
                )));
            }
        }
        for (k, arc) in arcs.iter().enumerate() {
            if !arc.t_start.is_finite() || arc.t_end.is_nan() || arc.t_end < arc.t_start {
                return Err(ModelError::InvalidControl(format!(
                    "arc {k} has invalid bounds [{}, {})",
                    arc.t_start, arc.t_end
                )));
            }
            if arc.t_end.is_infinite() && k + 1 != arcs.len() {
                return Err(ModelError::InvalidControl(format!("arc {k} is unbounded but not last")));
            }
            if let Some(next) = arcs.get(k + 1) {
                let gap = (next.t_start - arc.t_end).abs();
                if gap > 1e-12 * arc.t_end.abs().max(1.0) {
                    return Err(ModelError::InvalidControl(format!(
                        "arcs {k} and {} are not contiguous ({} vs {})",
                        k + 1,
                        arc.t_end,
                        next.t_start
                    )));
                }
            }
        }
        Ok(Self { arcs, terminal_zero })
    }

    /// `u = 0` for all times.
    pub fn zero() -> Self {
        Self { arcs: Vec::new(), terminal_zero: true }
    }

    /// A single unbounded constant arc. Only `value = 0` is summable, so the
    /// terminal flag is set exactly in that case.
    pub fn constant(value: f64) -> Self {
        Self {
            arcs: vec![ControlArc::new(0.0, f64::INFINITY, ControlLaw::constant(value))],
            terminal_zero: value == 0.0,
        }
    }

    pub fn arcs(&self) -> &[ControlArc] {
        &self.arcs
    }

    pub fn terminal_zero(&self) -> bool {
        self.terminal_zero
    }

    /// Checks every arc value against `[0, u_max]`.
    pub fn validate(&self, params: &EpidemicParams) -> Result<(), ModelError> {
        for (k, arc) in self.arcs.iter().enumerate() {
            let check = |v: f64, at: f64| -> Result<(), ModelError> {
                if !v.is_finite() || v < -CONTROL_SLACK || v > params.u_max + CONTROL_SLACK {
                    Err(ModelError::InvalidControl(format!(
                        "arc {k} takes value {v} at t={at}, outside [0, {}]",
                        params.u_max
                    )))
                } else {
                    Ok(())
                }
            };
            match arc.law {
                ControlLaw::Constant { value } => check(value, arc.t_start)?,
                ControlLaw::SingularBoundary { .. } => {
                    if arc.t_end.is_infinite() {
                        return Err(ModelError::InvalidControl(format!("singular arc {k} is unbounded")));
                    }
                    // The law is monotone in t, so the endpoints bound it.
                    check(arc.law.raw_value(params, arc.t_start), arc.t_start)?;
                    check(arc.law.raw_value(params, arc.t_end), arc.t_end)?;
                }
            }
        }
        Ok(())
    }

    /// Law in force at `t` (right-continuous).
    pub fn law_at(&self, t: f64) -> Option<ControlLaw> {
        if t < 0.0 {
            return None;
        }
        let idx = self.arcs.partition_point(|arc| arc.t_start <= t);
        if idx > 0 {
            let arc = &self.arcs[idx - 1];
            if t < arc.t_end {
                return Some(arc.law);
            }
        }
        if self.terminal_zero && t >= self.last_finite_end() {
            Some(ControlLaw::ZERO)
        } else {
            None
        }
    }

    /// Control value at `t`; zero past the last finite arc when the terminal
    /// flag is set.
    pub fn value_at(&self, params: &EpidemicParams, t: f64) -> Result<f64, ModelError> {
        self.law_at(t).map(|law| law.value(params, t)).ok_or(ModelError::Undefined(t))
    }

    /// End of the last finite arc; for an unbounded last arc, its start.
    pub fn last_finite_end(&self) -> f64 {
        match self.arcs.last() {
            None => 0.0,
            Some(arc) if arc.t_end.is_infinite() => arc.t_start,
            Some(arc) => arc.t_end,
        }
    }

    /// True when the control is zero from `last_finite_end()` on.
    pub fn is_eventually_zero(&self) -> bool {
        match self.arcs.last() {
            Some(arc) if arc.t_end.is_infinite() => arc.law == ControlLaw::ZERO,
            _ => self.terminal_zero,
        }
    }

    /// Arc pieces covering `[0, t_end]`, zero-length pieces dropped.
    pub fn segments(&self, t_end: f64) -> Result<Vec<(f64, f64, ControlLaw)>, ModelError> {
        let mut out = Vec::new();
        let mut covered = 0.0;
        for arc in &self.arcs {
            if arc.t_start >= t_end {
                break;
            }
            let b = arc.t_end.min(t_end);
            if b > arc.t_start {
                out.push((arc.t_start, b, arc.law));
            }
            covered = b;
        }
        if covered < t_end {
            if self.terminal_zero {
                out.push((covered, t_end, ControlLaw::ZERO));
            } else {
                return Err(ModelError::Undefined(covered));
            }
        }
        Ok(out)
    }

    /// Restriction to `[0, horizon]`, extended by zero afterwards.
    pub fn truncate_at(&self, horizon: f64) -> PiecewiseControl {
        let mut arcs = Vec::new();
        for arc in &self.arcs {
            if arc.t_start >= horizon {
                break;
            }
            arcs.push(ControlArc::new(arc.t_start, arc.t_end.min(horizon), arc.law));
        }
        PiecewiseControl { arcs, terminal_zero: true }
    }

    /// Times at which the law changes, in increasing order.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for pair in self.arcs.windows(2) {
            if pair[0].law != pair[1].law {
                out.push(pair[1].t_start);
            }
        }
        if let Some(last) = self.arcs.last() {
            if self.terminal_zero && last.t_end.is_finite() && last.law != ControlLaw::ZERO {
                out.push(last.t_end);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `i` reaches the ICU level from below.
    IcuHit,
    /// `s` falls through the herd immunity threshold.
    HerdCross,
    /// The control law changes.
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    /// Control value at `t` (right limit).
    pub u: f64,
    /// Left limit of the control at `t`; differs from `u` only at switches.
    pub u_left: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn final_state(&self) -> EpidemicState {
        let last = self.last();
        EpidemicState { s: last.s, i: last.i }
    }

    pub fn max_infected(&self) -> f64 {
        self.samples.iter().map(|p| p.i).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn event_times(&self, kind: EventKind) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter(move |e| e.kind == kind).map(|e| e.t)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<f64> {
        self.event_times(kind).next()
    }

    /// State at an arbitrary time by cubic Hermite interpolation between
    /// samples. `t` is clamped to the sampled range.
    pub fn state_at(&self, params: &EpidemicParams, t: f64) -> EpidemicState {
        let samples = &self.samples;
        let idx = samples.partition_point(|p| p.t <= t);
        if idx == 0 {
            return EpidemicState { s: samples[0].s, i: samples[0].i };
        }
        if idx >= samples.len() {
            return self.final_state();
        }
        let (a, b) = (&samples[idx - 1], &samples[idx]);
        let h = b.t - a.t;
        if h <= 0.0 {
            return EpidemicState { s: b.s, i: b.i };
        }
        let (dsa, dia) = params.rhs(a.s, a.i, a.u);
        let (dsb, dib) = params.rhs(b.s, b.i, b.u_left);
        let x = (t - a.t) / h;
        EpidemicState { s: hermite(a.s, dsa, b.s, dsb, h, x), i: hermite(a.i, dia, b.i, dib, h, x) }
    }
}

#[inline]
pub(crate) fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0 + (x3 - 2.0 * x2 + x) * h * d0 + (-2.0 * x3 + 3.0 * x2) * y1 + (x3 - x2) * h * d1
}

/// One classical Runge-Kutta step of size `h` from `(t, s, i)` under `law`.
#[inline]
pub(crate) fn rk4_step(params: &EpidemicParams, law: &ControlLaw, t: f64, s: f64, i: f64, h: f64) -> (f64, f64) {
    let half = 0.5 * h;
    let u0 = law.value(params, t);
    let um = law.value(params, t + half);
    let u1 = law.value(params, t + h);
    let (ks1, ki1) = params.rhs(s, i, u0);
    let (ks2, ki2) = params.rhs(s + half * ks1, i + half * ki1, um);
    let (ks3, ki3) = params.rhs(s + half * ks2, i + half * ki2, um);
    let (ks4, ki4) = params.rhs(s + h * ks3, i + h * ki3, u1);
    (s + h / 6.0 * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4), i + h / 6.0 * (ki1 + 2.0 * ki2 + 2.0 * ki3 + ki4))
}

/// Number of uniform steps used to cover an interval of length `len`.
#[inline]
pub(crate) fn step_count(len: f64, step: f64) -> usize {
    ((len / step) - 1e-9).ceil().max(1.0) as usize
}

/// Localizes the first root of `g` inside the RK4 step starting at
/// `(t, s, i)` of size `h`, given `g < 0` at the start and `g >= 0` at the
/// end. Returns the time and state at the right end of the final bracket,
/// where `g >= 0`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bisect_step<G>(
    params: &EpidemicParams,
    law: &ControlLaw,
    t: f64,
    s: f64,
    i: f64,
    h: f64,
    end: (f64, f64),
    g: G,
) -> (f64, f64, f64)
where
    G: Fn(f64, f64, f64) -> f64,
{
    let (mut lo, mut hi) = (0.0, h);
    let mut at_hi = end;
    while hi - lo > EVENT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let (sm, im) = rk4_step(params, law, t, s, i, mid);
        if g(t + mid, sm, im) >= 0.0 {
            hi = mid;
            at_hi = (sm, im);
        } else {
            lo = mid;
        }
    }
    (t + hi, at_hi.0, at_hi.1)
}

/// Result of integrating one law until a horizon or a stopping event.
#[derive(Debug, Clone)]
pub(crate) struct ArcRun {
    /// Samples from the start to the stopping point, both included.
    pub samples: Vec<Sample>,
    /// Time at which the stopping function became non-negative, if it did.
    pub stop: Option<f64>,
}

impl ArcRun {
    pub fn end(&self) -> &Sample {
        self.samples.last().expect("arc run holds at least the start sample")
    }
}

/// Integrates `law` from `(t0, state)` up to `t1` (which may be infinite)
/// and stops early at the first time the stopping function becomes
/// non-negative. With an infinite `t1` the run gives up after `max_len`
/// days.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_arc<G>(
    params: &EpidemicParams,
    law: ControlLaw,
    t0: f64,
    state: EpidemicState,
    t1: f64,
    step: f64,
    max_len: f64,
    stop: G,
) -> ArcRun
where
    G: Fn(f64, f64, f64) -> f64,
{
    let u0 = law.value(params, t0);
    let mut samples = vec![Sample { t: t0, s: state.s, i: state.i, u: u0, u_left: u0 }];
    if stop(t0, state.s, state.i) >= 0.0 {
        return ArcRun { samples, stop: Some(t0) };
    }
    if t1 <= t0 {
        return ArcRun { samples, stop: None };
    }
    let (n, h) = if t1.is_finite() {
        let n = step_count(t1 - t0, step);
        (n, (t1 - t0) / n as f64)
    } else {
        (step_count(max_len, step), step)
    };
    let (mut s, mut i) = (state.s, state.i);
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let t_next = if k + 1 == n && t1.is_finite() { t1 } else { t0 + (k + 1) as f64 * h };
        let h_k = t_next - t;
        let (sn, inn) = rk4_step(params, &law, t, s, i, h_k);
        if stop(t_next, sn, inn) >= 0.0 {
            let (te, se, ie) = bisect_step(params, &law, t, s, i, h_k, (sn, inn), &stop);
            let u = law.value(params, te);
            samples.push(Sample { t: te, s: se, i: ie, u, u_left: u });
            return ArcRun { samples, stop: Some(te) };
        }
        s = sn;
        i = inn;
        let u = law.value(params, t_next);
        samples.push(Sample { t: t_next, s, i, u, u_left: u });
    }
    ArcRun { samples, stop: None }
}

/// Integrates the controlled system on `[0, t_end]`.
///
/// Each arc is covered by uniform steps no longer than `step`, so arc
/// boundaries coincide with samples. ICU hits and herd-immunity crossings are
/// localized by bisection to [`EVENT_TOLERANCE`].
pub fn simulate(
    params: &EpidemicParams,
    state0: &EpidemicState,
    control: &PiecewiseControl,
    t_end: f64,
    step: f64,
) -> Result<Trajectory, ModelError> {
    params.validate()?;
    if !state0.in_triangle() {
        return Err(ModelError::InvalidInitialState { s: state0.s, i: state0.i });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(ModelError::InvalidStep(step));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(ModelError::InvalidHorizon(t_end));
    }
    control.validate(params)?;
    let segments = control.segments(t_end)?;

    let herd = params.herd_threshold();
    let icu = params.i_max;
    let u0 = control.value_at(params, 0.0)?;
    let mut samples = Vec::with_capacity((t_end / step) as usize + segments.len() + 2);
    samples.push(Sample { t: 0.0, s: state0.s, i: state0.i, u: u0, u_left: u0 });
    let mut events = Vec::new();
    let mut icu_armed = state0.i < icu;
    let (mut s, mut i) = (state0.s, state0.i);
    let mut previous_law: Option<ControlLaw> = None;

    for (a, b, law) in segments {
        if let Some(prev) = previous_law {
            if prev != law {
                events.push(Event { kind: EventKind::Switch, t: a });
            }
            if let Some(last) = samples.last_mut() {
                last.u = law.value(params, a);
            }
        }
        previous_law = Some(law);
        let n = step_count(b - a, step);
        let h = (b - a) / n as f64;
        for k in 0..n {
            let t = a + k as f64 * h;
            let t_next = if k + 1 == n { b } else { a + (k + 1) as f64 * h };
            let h_k = t_next - t;
            let (sn, inn) = rk4_step(params, &law, t, s, i, h_k);
            if icu_armed && inn >= icu {
                let (te, _, _) = bisect_step(params, &law, t, s, i, h_k, (sn, inn), |_, _, iv| iv - icu);
                events.push(Event { kind: EventKind::IcuHit, t: te });
                icu_armed = false;
            } else if !icu_armed && inn < icu - ICU_REARM {
                icu_armed = true;
            }
            if s > herd && sn <= herd {
                let (te, _, _) = bisect_step(params, &law, t, s, i, h_k, (sn, inn), |_, sv, _| herd - sv);
                events.push(Event { kind: EventKind::HerdCross, t: te });
            }
            s = sn;
            i = inn;
            let u = law.value(params, t_next);
            samples.push(Sample { t: t_next, s, i, u, u_left: u });
        }
    }
    if let (Some(last), Ok(u)) = (samples.last_mut(), control.value_at(params, t_end)) {
        if t_end > 0.0 {
            last.u = u;
        }
    }
    events.sort_by(|x, y| x.t.total_cmp(&y.t));
    Ok(Trajectory { samples, events })
}

/// Largest deviation from the conservation law
/// `s + i - s0 - i0 = -gamma * integral of i`, with the integral taken by the
/// trapezoid rule on the sample grid.
pub fn mass_balance_residual(params: &EpidemicParams, trajectory: &Trajectory) -> f64 {
    let first = trajectory.first();
    let mass0 = first.s + first.i;
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for pair in trajectory.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        integral += 0.5 * (a.i + b.i) * (b.t - a.t);
        worst = worst.max((b.s + b.i - mass0 + params.gamma * integral).abs());
    }
    worst
}
