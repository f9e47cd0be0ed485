//! Costates along a candidate trajectory and checks of the Pontryagin
//! necessary conditions.
//!
//! With `eta = p_i - p_s` the pre-Hamiltonian is
//!
//! ```text
//! H = lambda2 i + lambda1 u + eta (beta - u) s i - gamma p_i i
//! ```
//!
//! and the switching function `psi = eta s i` selects the control: `u = 0`
//! where `psi < lambda1`, `u = u_max` where `psi > lambda1`, and the
//! boundary law where `psi = lambda1` on the ICU line. The costates solve
//!
//! ```text
//! dp_s = -eta (beta - u) i dt
//! dp_i = -(lambda2 + eta (beta - u) s - gamma p_i) dt - dmu
//! ```
//!
//! backwards from `p(T) = 0`, where the multiplier `mu` grows only while the
//! ICU constraint is active.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostWeights;
use crate::model::{
    hermite, run_arc, ControlLaw, EpidemicParams, EpidemicState, ModelError, PiecewiseControl, Sample, Trajectory,
    DEFAULT_STEP,
};

/// Distance to the ICU level within which a sample counts as on the line.
pub const BOUNDARY_BAND: f64 = 1e-6;

/// Infected level below which the tail after the verification horizon is
/// negligible for the costates.
pub const TAIL_FLOOR: f64 = 1e-12;

const VERIFICATION_GRID: f64 = 10.0;
const VERIFICATION_LIMIT: f64 = 2e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PmpError {
    #[error("trajectory and control disagree: {0}")]
    InconsistentInputs(String),
    #[error("infections stay above {floor} for {limit} days")]
    HorizonNotFound { floor: f64, limit: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Horizon for checking an infinite-horizon candidate: the first multiple
/// of 10 days after the last switch at which `s` is below the herd
/// threshold and `i <= TAIL_FLOOR`.
///
/// Zero terminal costates are exact only when nothing happens after the
/// horizon, so the horizon has to reach far into the decay of the epidemic.
pub fn verification_horizon(
    params: &EpidemicParams,
    state0: &EpidemicState,
    control: &PiecewiseControl,
) -> Result<f64, PmpError> {
    control.validate(params)?;
    let herd = params.herd_threshold();
    let after = control.last_finite_end();
    let mut state = *state0;
    for (a, b, law) in control.segments(VERIFICATION_LIMIT)? {
        let run = run_arc(params, law, a, state, b, DEFAULT_STEP, b - a, |t, s, i| {
            if t < after {
                -1.0
            } else {
                (herd - s).min(TAIL_FLOOR - i)
            }
        });
        if let Some(t) = run.stop {
            let horizon = ((t / VERIFICATION_GRID).floor() + 1.0) * VERIFICATION_GRID;
            return Ok(horizon.max(after));
        }
        let end = run.end();
        state = EpidemicState { s: end.s, i: end.i };
    }
    Err(PmpError::HorizonNotFound { floor: TAIL_FLOOR, limit: VERIFICATION_LIMIT })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointSample {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    /// Control on the side of `t` this sample belongs to.
    pub u: f64,
    pub p_s: f64,
    pub p_i: f64,
    pub eta: f64,
    pub psi: f64,
    /// Multiplier mass accumulated on `[0, t]`.
    pub mu_cum: f64,
    /// Multiplier density `dmu/dt` at this sample.
    pub mu_rate: f64,
    pub on_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionKind {
    Entry,
    Exit,
}

/// Point mass of the multiplier at the end of a boundary arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionAtom {
    pub t: f64,
    pub kind: JunctionKind,
    /// Jump of `mu`, after clipping at zero.
    pub size: f64,
    /// `|psi - lambda1|` on the arc side before the jump is applied.
    pub mismatch: f64,
}

/// Costates sampled at the trajectory times. Where a multiplier atom sits
/// the time appears twice: left limit first, then right limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointPath {
    pub samples: Vec<AdjointSample>,
    pub terminal: f64,
    pub atoms: Vec<JunctionAtom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmpTolerances {
    /// Slack on the bang-arc sign conditions, relative to `lambda1`.
    pub bang: f64,
    /// Allowed `|psi - lambda1|` on boundary arcs, relative to `lambda1`.
    pub singular: f64,
}

impl Default for PmpTolerances {
    fn default() -> Self {
        Self { bang: 1e-6, singular: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionResidual {
    pub t: f64,
    /// Smaller of `|psi - lambda1|` over the two one-sided limits.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmpReport {
    /// Share of time on which the switching function agrees with the control.
    pub stationarity_fraction: f64,
    /// Largest `|psi - lambda1|` on boundary arcs, 0 without boundary arcs.
    pub singular_residual: f64,
    /// `max |H - k| / scale` where `k = lambda2 i(T)` and `scale` is the
    /// largest magnitude of any term of `H` along the path.
    pub hamiltonian_residual: f64,
    pub hamiltonian_reference: f64,
    pub eta_min: f64,
    pub psi_min: f64,
    pub p_s_min: f64,
    /// `p_s` non-increasing (within 1e-9 per sample) and `>= -1e-9`.
    pub p_s_monotone: bool,
    pub junction_residuals: Vec<JunctionResidual>,
    pub atoms: Vec<JunctionAtom>,
    /// Smallest `gamma p_s - lambda2` on boundary arcs.
    pub boundary_multiplier_min: Option<f64>,
    pub mu_monotone: bool,
    /// `mu` does not move off boundary arcs and their end points.
    pub complementarity: bool,
    /// Largest gap between the difference quotient of `psi` and
    /// `s i (gamma p_s - lambda2 - dmu/dt)`, averaged over each step.
    pub psi_derivative_residual: f64,
}

struct Costate {
    p_s: f64,
    p_i: f64,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    first: usize,
    last: usize,
    law: ControlLaw,
    boundary: bool,
}

struct Ctx<'a> {
    params: &'a EpidemicParams,
    weights: &'a CostWeights,
}

impl<'a> Ctx<'a> {
    fn rate(&self, s: f64, i: f64, u: f64, p_s: f64, p_i: f64, boundary: bool) -> (f64, f64, f64) {
        let eta = p_i - p_s;
        let v = self.params.beta - u;
        let mu_rate = if boundary { (self.params.gamma * p_s - self.weights.lambda2).max(0.0) } else { 0.0 };
        let dp_s = -eta * v * i;
        let dp_i = -(self.weights.lambda2 + eta * v * s - self.params.gamma * p_i) - mu_rate;
        (dp_s, dp_i, mu_rate)
    }

    /// One backward RK4 step over the sample interval `[a, b]`, returning
    /// the costate at `a` and the multiplier mass gathered on the interval.
    fn step_back(&self, a: &Sample, b: &Sample, law: &ControlLaw, boundary: bool, p: &Costate) -> (Costate, f64) {
        let params = self.params;
        let h = b.t - a.t;
        let (dsa, dia) = params.rhs(a.s, a.i, a.u);
        let (dsb, dib) = params.rhs(b.s, b.i, b.u_left);
        let mid_t = a.t + 0.5 * h;
        let mid_s = hermite(a.s, dsa, b.s, dsb, h, 0.5);
        let mid_i = hermite(a.i, dia, b.i, dib, h, 0.5);
        let mid_u = law.value(params, mid_t);

        let k1 = self.rate(b.s, b.i, b.u_left, p.p_s, p.p_i, boundary);
        let k2 = self.rate(mid_s, mid_i, mid_u, p.p_s - 0.5 * h * k1.0, p.p_i - 0.5 * h * k1.1, boundary);
        let k3 = self.rate(mid_s, mid_i, mid_u, p.p_s - 0.5 * h * k2.0, p.p_i - 0.5 * h * k2.1, boundary);
        let k4 = self.rate(a.s, a.i, a.u, p.p_s - h * k3.0, p.p_i - h * k3.1, boundary);
        let p_s = p.p_s - h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let p_i = p.p_i - h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let mass = h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        (Costate { p_s, p_i }, mass)
    }

    fn record(&self, sample: &Sample, u: f64, p: &Costate, mu_back: f64, boundary: bool) -> AdjointSample {
        let eta = p.p_i - p.p_s;
        let mu_rate = if boundary { (self.params.gamma * p.p_s - self.weights.lambda2).max(0.0) } else { 0.0 };
        AdjointSample {
            t: sample.t,
            s: sample.s,
            i: sample.i,
            u,
            p_s: p.p_s,
            p_i: p.p_i,
            eta,
            psi: eta * sample.s * sample.i,
            // Holds the mass on [t, T] until the forward total is known.
            mu_cum: mu_back,
            mu_rate,
            on_boundary: boundary,
        }
    }

    /// Switching function at the first sample of `run` when integrating it
    /// backwards from `p` at its last sample.
    fn psi_at_run_start(&self, samples: &[Sample], run: &Run, p: Costate) -> f64 {
        let mut p = p;
        for k in (run.first..=run.last).rev() {
            p = self.step_back(&samples[k], &samples[k + 1], &run.law, run.boundary, &p).0;
        }
        let a = &samples[run.first];
        (p.p_i - p.p_s) * a.s * a.i
    }
}

fn is_constant(law: &ControlLaw, value: f64) -> bool {
    matches!(law, ControlLaw::Constant { value: v } if *v == value)
}

/// Integrates the costates backwards along `trajectory` from zero terminal
/// data at its last sample.
///
/// On boundary arcs (singular law with `i` within [`BOUNDARY_BAND`] of the
/// ICU level) the multiplier has density `max(gamma p_s - lambda2, 0)`. At
/// the exit of a boundary arc an atom makes `psi` equal `lambda1` on the
/// arc side. At the entry, when the arc follows a `0 - u_max` pair, an atom
/// is fitted so that `psi = lambda1` at the start of the lockdown. Atoms are
/// clipped at zero and their raw mismatch is reported.
pub fn integrate_adjoint(
    params: &EpidemicParams,
    weights: &CostWeights,
    trajectory: &Trajectory,
    control: &PiecewiseControl,
) -> Result<AdjointPath, PmpError> {
    let samples = &trajectory.samples;
    if samples.is_empty() {
        return Err(PmpError::InconsistentInputs("empty trajectory".into()));
    }
    let n = samples.len();
    let terminal = samples[n - 1].t;
    let icu = params.i_max;

    let mut intervals: Vec<(ControlLaw, bool)> = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let (a, b) = (&samples[k], &samples[k + 1]);
        if b.t.partial_cmp(&a.t) != Some(std::cmp::Ordering::Greater) {
            return Err(PmpError::InconsistentInputs(format!("sample times not increasing at t={}", a.t)));
        }
        let law = control
            .law_at(0.5 * (a.t + b.t))
            .ok_or_else(|| PmpError::InconsistentInputs(format!("control undefined at t={}", a.t)))?;
        let expected = law.value(params, a.t);
        if (expected - a.u).abs() > 1e-9 {
            return Err(PmpError::InconsistentInputs(format!(
                "control value {} at t={} differs from sampled {}",
                expected, a.t, a.u
            )));
        }
        let boundary = law.is_singular() && (a.i - icu).abs() <= BOUNDARY_BAND && (b.i - icu).abs() <= BOUNDARY_BAND;
        intervals.push((law, boundary));
    }

    let mut runs: Vec<Run> = Vec::new();
    for (k, (law, boundary)) in intervals.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.law == *law && run.boundary == *boundary => run.last = k,
            _ => runs.push(Run { first: k, last: k, law: *law, boundary: *boundary }),
        }
    }

    let ctx = Ctx { params, weights };
    let lambda1 = weights.lambda1;
    let mut p = Costate { p_s: 0.0, p_i: 0.0 };
    let mut mu_back = 0.0;
    let mut atoms = Vec::new();
    let mut reversed = Vec::with_capacity(n + 4);
    let last_boundary = runs.last().is_some_and(|r| r.boundary);
    let last_u = runs.last().map_or(samples[n - 1].u, |r| r.law.value(params, terminal));
    reversed.push(ctx.record(&samples[n - 1], last_u, &p, mu_back, last_boundary));

    for r in (0..runs.len()).rev() {
        let run = runs[r];
        let end = &samples[run.last + 1];
        if run.boundary && r + 1 < runs.len() {
            let si = end.s * end.i;
            let psi = (p.p_i - p.p_s) * si;
            let size = ((lambda1 - psi) / si).max(0.0);
            atoms.push(JunctionAtom { t: end.t, kind: JunctionKind::Exit, size, mismatch: (lambda1 - psi).abs() });
            if size > 0.0 {
                p.p_i += size;
                mu_back += size;
                reversed.push(ctx.record(end, end.u_left, &p, mu_back, true));
            }
        }
        for k in (run.first..=run.last).rev() {
            let (next, mass) = ctx.step_back(&samples[k], &samples[k + 1], &run.law, run.boundary, &p);
            p = next;
            mu_back += mass;
            let u = run.law.value(params, samples[k].t);
            reversed.push(ctx.record(&samples[k], u, &p, mu_back, run.boundary));
        }
        if run.boundary && samples[run.first].t > 0.0 {
            let start = &samples[run.first];
            let si = start.s * start.i;
            let psi_here = (p.p_i - p.p_s) * si;
            let fitted = if r >= 2
                && !runs[r - 1].boundary
                && is_constant(&runs[r - 1].law, params.u_max)
                && is_constant(&runs[r - 2].law, 0.0)
            {
                let base = ctx.psi_at_run_start(samples, &runs[r - 1], Costate { p_s: p.p_s, p_i: p.p_i });
                let unit = ctx.psi_at_run_start(samples, &runs[r - 1], Costate { p_s: p.p_s, p_i: p.p_i + 1.0 });
                let slope = unit - base;
                if slope.abs() > 0.0 {
                    Some(((lambda1 - base) / slope, (lambda1 - base).abs()))
                } else {
                    None
                }
            } else {
                None
            };
            let (raw, mismatch) = fitted.unwrap_or((0.0, (lambda1 - psi_here).abs()));
            let size = raw.max(0.0);
            atoms.push(JunctionAtom { t: start.t, kind: JunctionKind::Entry, size, mismatch });
            if size > 0.0 {
                p.p_i += size;
                mu_back += size;
                let u_left = start.u_left;
                reversed.push(ctx.record(start, u_left, &p, mu_back, false));
            }
        }
    }

    reversed.reverse();
    let total = mu_back;
    let mut samples_out = reversed;
    for sample in &mut samples_out {
        sample.mu_cum = total - sample.mu_cum;
    }
    atoms.reverse();
    Ok(AdjointPath { samples: samples_out, terminal, atoms })
}

/// Evaluates the necessary conditions along an adjoint path.
pub fn verify_pmp(
    params: &EpidemicParams,
    weights: &CostWeights,
    adjoint: &AdjointPath,
    control: &PiecewiseControl,
    tolerances: &PmpTolerances,
) -> PmpReport {
    let lambda1 = weights.lambda1;
    let lambda2 = weights.lambda2;
    let samples = &adjoint.samples;
    let last = samples.last().expect("adjoint path is never empty");
    let reference = lambda2 * last.i;
    let bang_tol = tolerances.bang * lambda1;
    let sing_tol = tolerances.singular * lambda1;

    let hamiltonian = |p: &AdjointSample| {
        let terms = [lambda2 * p.i, lambda1 * p.u, p.psi * (params.beta - p.u), -params.gamma * p.p_i * p.i];
        (terms.iter().sum::<f64>(), terms.iter().map(|x| x.abs()).fold(0.0, f64::max))
    };
    let mut h_scale: f64 = 0.0;
    let mut h_dev: f64 = 0.0;
    for p in samples {
        let (h, scale) = hamiltonian(p);
        h_scale = h_scale.max(scale);
        h_dev = h_dev.max((h - reference).abs());
    }

    let mut good_time = 0.0;
    let mut total_time = 0.0;
    let mut singular_residual: f64 = 0.0;
    let mut psi_derivative_residual: f64 = 0.0;
    let mut complementarity = true;
    let mut p_s_monotone = true;
    let mut mu_monotone = true;
    for pair in samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.mu_cum < a.mu_cum - 1e-12 {
            mu_monotone = false;
        }
        if b.p_s > a.p_s + 1e-9 {
            p_s_monotone = false;
        }
        let h = b.t - a.t;
        if h <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a.t + b.t);
        let law = control.law_at(mid).unwrap_or(ControlLaw::ZERO);
        let on_line = a.on_boundary && b.on_boundary;
        let ok = |psi: f64| match law {
            ControlLaw::Constant { value: 0.0 } => psi <= lambda1 + bang_tol,
            ControlLaw::Constant { value } if value == params.u_max => psi >= lambda1 - bang_tol,
            _ => (psi - lambda1).abs() <= sing_tol,
        };
        total_time += h;
        if ok(a.psi) && ok(b.psi) {
            good_time += h;
        }
        if on_line {
            singular_residual = singular_residual.max((a.psi - lambda1).abs()).max((b.psi - lambda1).abs());
        }
        // The sample closing a boundary arc is owned by the following run.
        if !(a.on_boundary || b.on_boundary) && b.mu_cum - a.mu_cum > 1e-12 {
            complementarity = false;
        }
        let slope = (b.psi - a.psi) / h;
        let rhs = |p: &AdjointSample| p.s * p.i * (params.gamma * p.p_s - lambda2 - p.mu_rate);
        let expected = 0.5 * (rhs(a) + rhs(b));
        psi_derivative_residual = psi_derivative_residual.max((slope - expected).abs());
    }
    let p_s_min = samples.iter().map(|p| p.p_s).fold(f64::INFINITY, f64::min);
    if p_s_min < -1e-9 {
        p_s_monotone = false;
    }

    let boundary_multiplier_min = samples
        .iter()
        .filter(|p| p.on_boundary)
        .map(|p| params.gamma * p.p_s - lambda2)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));

    let junction_residuals = control
        .switch_times()
        .into_iter()
        .filter(|t| *t <= adjoint.terminal)
        .map(|t| {
            let residual = samples
                .iter()
                .filter(|p| (p.t - t).abs() <= 1e-9 * t.max(1.0))
                .map(|p| (p.psi - lambda1).abs())
                .fold(f64::INFINITY, f64::min);
            JunctionResidual { t, residual }
        })
        .collect();

    PmpReport {
        stationarity_fraction: if total_time > 0.0 { good_time / total_time } else { 1.0 },
        singular_residual,
        hamiltonian_residual: if h_scale > 0.0 { h_dev / h_scale } else { 0.0 },
        hamiltonian_reference: reference,
        eta_min: samples.iter().map(|p| p.eta).fold(f64::INFINITY, f64::min),
        psi_min: samples.iter().map(|p| p.psi).fold(f64::INFINITY, f64::min),
        p_s_min,
        p_s_monotone,
        junction_residuals,
        atoms: adjoint.atoms.clone(),
        boundary_multiplier_min,
        mu_monotone,
        complementarity,
        psi_derivative_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;
    use crate::policy::greedy_with_step;

    fn path(
        params: &EpidemicParams,
        weights: &CostWeights,
        state0: EpidemicState,
        control: &PiecewiseControl,
        t: f64,
    ) -> AdjointPath {
        let control = control.truncate_at(t);
        let traj = simulate(params, &state0, &control, t, 0.05).unwrap();
        integrate_adjoint(params, weights, &traj, &control).unwrap()
    }

    #[test]
    fn costates_vanish_at_the_horizon() {
        let p = EpidemicParams::italy_2020();
        let w = CostWeights::new(1.0, 3.0).unwrap();
        let adj = path(&p, &w, EpidemicState::new(0.94, 0.001).unwrap(), &PiecewiseControl::constant(0.05), 200.0);
        let last = adj.samples.last().unwrap();
        assert_eq!((last.t, last.p_s, last.p_i, last.psi), (200.0, 0.0, 0.0, 0.0));
        assert!(adj.atoms.is_empty());
    }

    #[test]
    fn no_infection_weight_means_no_costates() {
        let p = EpidemicParams::italy_2020();
        let w = CostWeights::new(1.0, 0.0).unwrap();
        let control = PiecewiseControl::zero();
        let adj = path(&p, &w, EpidemicState::new(0.3, 0.001).unwrap(), &control, 100.0);
        assert!(adj.samples.iter().all(|x| x.p_s == 0.0 && x.p_i == 0.0));
        let report = verify_pmp(&p, &w, &adj, &control, &PmpTolerances::default());
        assert_eq!(report.stationarity_fraction, 1.0);
        assert_eq!(report.hamiltonian_residual, 0.0);
        assert!(report.boundary_multiplier_min.is_none());
    }

    #[test]
    fn control_mismatch_is_rejected() {
        let p = EpidemicParams::italy_2020();
        let w = CostWeights::new(1.0, 1.0).unwrap();
        let s0 = EpidemicState::new(0.94, 0.001).unwrap();
        let traj = simulate(&p, &s0, &PiecewiseControl::zero(), 50.0, 0.1).unwrap();
        let err = integrate_adjoint(&p, &w, &traj, &PiecewiseControl::constant(0.1)).unwrap_err();
        assert!(matches!(err, PmpError::InconsistentInputs(_)), "{err}");
    }

    #[test]
    fn bang_arc_sign_condition_detects_a_bad_lockdown() {
        // Locking down an epidemic that is already past herd immunity
        // only costs effort, so psi stays below lambda1 on the lockdown.
        let p = EpidemicParams::italy_2020();
        let w = CostWeights::new(1.0, 1.0).unwrap();
        let control = PiecewiseControl::constant(p.u_max).truncate_at(50.0);
        let adj = path(&p, &w, EpidemicState::new(0.3, 0.001).unwrap(), &control, 400.0);
        let report = verify_pmp(&p, &w, &adj, &control, &PmpTolerances::default());
        assert!(report.stationarity_fraction < 0.95, "{}", report.stationarity_fraction);
    }

    #[test]
    fn verification_horizon_reaches_the_decay() {
        let p = EpidemicParams::delta_2021();
        let s0 = EpidemicState::new(0.5, 0.001).unwrap();
        let greedy = greedy_with_step(&p, &s0, DEFAULT_STEP).unwrap();
        let t = verification_horizon(&p, &s0, &greedy.control).unwrap();
        assert!(t > greedy.switches.tau2 && t % 10.0 == 0.0);
        let traj = simulate(&p, &s0, &greedy.control.truncate_at(t), t, DEFAULT_STEP).unwrap();
        assert!(traj.last().i <= TAIL_FLOOR && traj.last().s < p.herd_threshold());
    }
}
