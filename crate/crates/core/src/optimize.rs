//! Search over the bang-bang and boundary-arc control families for the
//! least infinite-horizon cost, horizon selection, and the finite-horizon
//! convergence diagnostic.
//!
//! The search ranks a coarse lattice of knob values with incremental sweeps
//! (shared trajectory prefixes, closed-form tails), then refines the best
//! lattice points with Nelder-Mead on the full control builders.

use std::cell::Cell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{
    cost_finite, cost_infinite, evaluate_infinite, tail_infected_integral, CostBreakdown, CostError, CostWeights,
};
use crate::model::{
    rk4_step, run_arc, simulate, step_count, ControlLaw, EpidemicParams, EpidemicState, ModelError, PiecewiseControl,
    DEFAULT_STEP,
};
use crate::policy::{
    build_boundary_with_step, greedy_with_step, BangBangKnobs, BoundaryKnobs, Family, PolicyError, StructureKnobs,
    StructuredControl, SwitchTimes,
};
use crate::simplex::{minimize, SimplexOptions};
use crate::viability::{classify, constant_control_peak, Zone};

/// Horizons are searched on multiples of this many days.
pub const HORIZON_GRID: f64 = 10.0;
/// Longest horizon [`choose_horizon`] will look at.
pub const HORIZON_LIMIT: f64 = 1e4;
/// Default distance below the herd threshold required at the horizon.
pub const DEFAULT_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Lattice spacing for time knobs, days.
    pub grid_step: f64,
    /// Number of pieces the boundary-arc budget is cut into on the lattice.
    pub singular_slices: usize,
    /// Range of second-lockdown lengths on the lattice, days.
    pub post_window: f64,
    /// Number of lattice points refined per family.
    pub starts: usize,
    /// Integration step during the search, days.
    pub search_step: f64,
    /// Integration step for the final evaluation, days.
    pub step: f64,
    /// Objective evaluations allowed per refinement.
    pub max_evaluations: usize,
    /// Weight of the ICU violation in the objective.
    pub penalty: f64,
    /// Largest ICU violation still reported as feasible.
    pub feasibility_tol: f64,
    /// Relative objective difference under which two families tie.
    pub tie_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_step: 2.0,
            singular_slices: 10,
            post_window: 200.0,
            starts: 5,
            search_step: 0.1,
            step: DEFAULT_STEP,
            max_evaluations: 200,
            penalty: 1e6,
            feasibility_tol: 1e-6,
            tie_tol: 1e-6,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<(), OptimizeError> {
        let positive = [self.grid_step, self.post_window, self.search_step, self.step, self.penalty];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) || self.singular_slices == 0 || self.starts == 0 {
            return Err(OptimizeError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("initial state lies above the viability curve; no control keeps i <= i_M")]
    InfeasibleStart,
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
    #[error("horizons must be positive and strictly increasing")]
    UnsortedHorizons,
    #[error("s stays above the target level for {limit} days")]
    HorizonNotFound { limit: f64 },
    #[error("horizon {horizon} is shorter than the {required} days the limit control needs to pass herd immunity")]
    HorizonTooShort { horizon: f64, required: f64 },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("no candidate control could be evaluated")]
    NoCandidate,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Best member found in one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBest {
    pub family: Family,
    pub knobs: StructureKnobs,
    pub cost: CostBreakdown,
    /// Cost plus the ICU penalty.
    pub objective: f64,
    pub max_infected: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_knobs: StructureKnobs,
    pub best_cost: CostBreakdown,
    pub switch_times: SwitchTimes,
    pub feasible: bool,
    /// Largest `i` over all times, tail included.
    pub max_infected: f64,
    pub evaluations: usize,
    pub family_compared: Vec<FamilyBest>,
    /// Both families reached the same objective within tolerance.
    pub tie: bool,
    pub greedy_cost: Option<CostBreakdown>,
    pub control: PiecewiseControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaDiagnostic {
    pub horizons: Vec<f64>,
    /// Infinite-horizon cost of each finite-horizon optimum extended by zero.
    pub truncated_costs: Vec<f64>,
    pub limit_cost: f64,
    /// `|truncated_costs[k] - limit_cost|`.
    pub gaps: Vec<f64>,
    /// Horizon the limit control needs to pass herd immunity.
    pub required_horizon: f64,
    pub limit_knobs: StructureKnobs,
}

impl GammaDiagnostic {
    pub fn relative_gaps(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g / self.limit_cost.abs().max(f64::MIN_POSITIVE)).collect()
    }
}

/// A fully evaluated candidate.
#[derive(Debug, Clone)]
struct Scored {
    knobs: StructureKnobs,
    structured: StructuredControl,
    cost: CostBreakdown,
    max_infected: f64,
    objective: f64,
}

struct Problem<'a> {
    params: &'a EpidemicParams,
    weights: &'a CostWeights,
    state0: &'a EpidemicState,
    config: &'a SearchConfig,
    evaluations: Cell<usize>,
}

impl<'a> Problem<'a> {
    fn penalized(&self, cost: f64, max_infected: f64) -> f64 {
        cost + self.config.penalty * (max_infected - self.params.i_max).max(0.0)
    }

    fn score(&self, knobs: StructureKnobs, structured: StructuredControl, step: f64) -> Option<Scored> {
        self.evaluations.set(self.evaluations.get() + 1);
        // An empty lockdown is the zero control whatever its start.
        let knobs = match knobs {
            StructureKnobs::BangBang(k) if k.sigma0 == k.sigma1 => {
                StructureKnobs::BangBang(BangBangKnobs { sigma0: 0.0, sigma1: 0.0 })
            }
            other => other,
        };
        let eval = evaluate_infinite(self.params, self.weights, &structured.control, self.state0, step).ok()?;
        let objective = self.penalized(eval.cost.total, eval.max_infected);
        Some(Scored { knobs, structured, cost: eval.cost, max_infected: eval.max_infected, objective })
    }

    fn score_knobs(&self, knobs: StructureKnobs, step: f64) -> Option<Scored> {
        match knobs.build(self.params, self.state0, step) {
            Ok(structured) => self.score(knobs, structured, step),
            Err(_) => {
                self.evaluations.set(self.evaluations.get() + 1);
                None
            }
        }
    }

    fn objective(&self, knobs: StructureKnobs) -> f64 {
        self.score_knobs(knobs, self.config.search_step).map_or(f64::INFINITY, |s| s.objective)
    }

    /// Objective of the problem on `[0, horizon]`: running cost, ICU
    /// violation on the interval, and failure to pass herd immunity by the
    /// horizon.
    fn finite_objective(&self, control: &PiecewiseControl, horizon: f64, step: f64) -> Option<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        let control = control.truncate_at(horizon);
        let trajectory = simulate(self.params, self.state0, &control, horizon, step).ok()?;
        let cost = cost_finite(self.weights, &trajectory).total;
        let terminal_excess = (trajectory.last().s - self.params.herd_threshold()).max(0.0);
        Some(self.penalized(cost, trajectory.max_infected()) + self.config.penalty * terminal_excess)
    }

    fn finite_knobs_objective(&self, knobs: StructureKnobs, horizon: f64, step: f64) -> f64 {
        knobs
            .build(self.params, self.state0, step)
            .ok()
            .and_then(|s| self.finite_objective(&s.control, horizon, step))
            .unwrap_or(f64::INFINITY)
    }
}

/// Coordinates used by the simplex for each family.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    /// `(sigma0, sigma1 - sigma0)`.
    BangBang,
    /// `(delta_sing, delta_post)` with the lockdown start held fixed. Used
    /// when the start is the greedy onset: any other start either stays
    /// below the ICU level or overshoots it.
    PinnedBoundary(f64),
    /// `(tau0, delta_sing, delta_post)`.
    Boundary,
}

impl Layout {
    fn for_knobs(knobs: &StructureKnobs, onset: Option<f64>) -> Self {
        match knobs {
            StructureKnobs::BangBang(_) => Layout::BangBang,
            StructureKnobs::BoundaryArc(b) if Some(b.tau0) == onset => Layout::PinnedBoundary(b.tau0),
            StructureKnobs::BoundaryArc(_) => Layout::Boundary,
        }
    }

    fn encode(&self, knobs: &StructureKnobs) -> Vec<f64> {
        match (self, knobs) {
            (Layout::BangBang, StructureKnobs::BangBang(k)) => vec![k.sigma0, k.sigma1 - k.sigma0],
            (Layout::PinnedBoundary(_), StructureKnobs::BoundaryArc(k)) => vec![k.delta_sing, k.delta_post],
            (Layout::Boundary, StructureKnobs::BoundaryArc(k)) => vec![k.tau0, k.delta_sing, k.delta_post],
            _ => unreachable!("layout is derived from the knob family"),
        }
    }

    fn decode(&self, x: &[f64]) -> StructureKnobs {
        let clip = |v: f64| v.max(0.0);
        match self {
            Layout::BangBang => {
                let sigma0 = clip(x[0]);
                StructureKnobs::BangBang(BangBangKnobs { sigma0, sigma1: sigma0 + clip(x[1]) })
            }
            Layout::PinnedBoundary(tau0) => StructureKnobs::BoundaryArc(BoundaryKnobs {
                tau0: *tau0,
                delta_sing: clip(x[0]),
                delta_post: clip(x[1]),
            }),
            Layout::Boundary => StructureKnobs::BoundaryArc(BoundaryKnobs {
                tau0: clip(x[0]),
                delta_sing: clip(x[1]),
                delta_post: clip(x[2]),
            }),
        }
    }

    fn scales(&self, knobs: &StructureKnobs, grid_step: f64) -> Vec<f64> {
        match (self, knobs) {
            (Layout::BangBang, _) => vec![grid_step, grid_step],
            (Layout::PinnedBoundary(_), StructureKnobs::BoundaryArc(k)) => {
                vec![(0.05 * k.delta_sing).max(grid_step), grid_step]
            }
            (Layout::Boundary, StructureKnobs::BoundaryArc(k)) => {
                vec![0.25 * grid_step, (0.05 * k.delta_sing).max(grid_step), grid_step]
            }
            _ => unreachable!("layout is derived from the knob family"),
        }
    }
}

/// State along a lattice sweep together with the accumulated running cost
/// and the running maximum of `i`.
#[derive(Debug, Clone, Copy)]
struct PathPoint {
    t: f64,
    s: f64,
    i: f64,
    cost: f64,
    max_i: f64,
}

/// Integrates `law` from `start` and records `count` points spaced
/// `spacing` days apart (the start point is included first).
fn sweep(
    params: &EpidemicParams,
    weights: &CostWeights,
    law: ControlLaw,
    start: PathPoint,
    spacing: f64,
    count: usize,
    max_step: f64,
) -> Vec<PathPoint> {
    let mut points = Vec::with_capacity(count + 1);
    points.push(start);
    if count == 0 || spacing <= 0.0 {
        return points;
    }
    let per_point = step_count(spacing, max_step);
    let h = spacing / per_point as f64;
    let mut p = start;
    let mut u = law.value(params, p.t);
    for n in 0..count * per_point {
        let t_next = start.t + (n + 1) as f64 * h;
        let (s, i) = rk4_step(params, &law, p.t, p.s, p.i, t_next - p.t);
        let u_next = law.value(params, t_next);
        p.cost += 0.5 * (t_next - p.t) * (weights.lambda1 * (u + u_next) + weights.lambda2 * (p.i + i));
        p.max_i = p.max_i.max(i);
        p.t = t_next;
        p.s = s;
        p.i = i;
        u = u_next;
        if (n + 1) % per_point == 0 {
            points.push(p);
        }
    }
    points
}

/// Keeps the `capacity` lowest-objective entries.
struct Best {
    capacity: usize,
    items: Vec<(f64, StructureKnobs)>,
}

impl Best {
    fn new(capacity: usize) -> Self {
        Self { capacity, items: Vec::with_capacity(capacity + 1) }
    }

    fn offer(&mut self, objective: f64, knobs: StructureKnobs) {
        if !objective.is_finite() {
            return;
        }
        if self.items.len() == self.capacity && objective >= self.items[self.capacity - 1].0 {
            return;
        }
        let at = self.items.partition_point(|(v, _)| *v <= objective);
        self.items.insert(at, (objective, knobs));
        self.items.truncate(self.capacity);
    }
}

impl<'a> Problem<'a> {
    /// Objective of releasing the control at `point` forever.
    fn close(&self, point: &PathPoint) -> f64 {
        let state = EpidemicState { s: point.s, i: point.i };
        let tail = if self.weights.lambda2 == 0.0 {
            0.0
        } else {
            match tail_infected_integral(self.params, &state) {
                Ok(v) => self.weights.lambda2 * v,
                Err(_) => return f64::INFINITY,
            }
        };
        let peak = point.max_i.max(constant_control_peak(self.params, &state, 0.0));
        self.penalized(point.cost + tail, peak)
    }

    fn origin(&self) -> PathPoint {
        PathPoint { t: 0.0, s: self.state0.s, i: self.state0.i, cost: 0.0, max_i: self.state0.i }
    }

    fn bangbang_lattice(&self, range: f64) -> Best {
        let cfg = self.config;
        let g = cfg.grid_step;
        let m = (range / g).round().max(1.0) as usize;
        let mut best = Best::new(cfg.starts);
        let free = sweep(self.params, self.weights, ControlLaw::ZERO, self.origin(), g, m, cfg.search_step);
        let lockdown = ControlLaw::constant(self.params.u_max);
        for (k, start) in free.iter().enumerate() {
            let path = sweep(self.params, self.weights, lockdown, *start, g, m - k, cfg.search_step);
            for (j, point) in path.iter().enumerate() {
                let sigma0 = k as f64 * g;
                let knobs = BangBangKnobs { sigma0, sigma1: sigma0 + j as f64 * g };
                best.offer(self.close(point), StructureKnobs::BangBang(knobs));
            }
        }
        self.evaluations.set(self.evaluations.get() + (m + 1) * (m + 2) / 2);
        best
    }

    fn boundary_lattice(&self, range: f64, onset: Option<f64>) -> Best {
        let cfg = self.config;
        let g = cfg.grid_step;
        let m = (range / g).round().max(1.0) as usize;
        let mut best = Best::new(cfg.starts);
        let mut starts: Vec<f64> = (0..=m).map(|k| k as f64 * g).collect();
        starts.extend(onset);
        let lockdown = ControlLaw::constant(self.params.u_max);
        let post_count = (cfg.post_window / g).round().max(1.0) as usize;
        let icu = self.params.i_max;
        let gamma = self.params.gamma;
        for tau0 in starts {
            let knobs = BoundaryKnobs { tau0, delta_sing: 0.0, delta_post: 0.0 };
            self.evaluations.set(self.evaluations.get() + 1);
            let Ok(prefix) = build_boundary_with_step(self.params, self.state0, &knobs, cfg.search_step) else {
                continue;
            };
            let tau1 = prefix.switches.tau1;
            let Ok(trajectory) = simulate(self.params, self.state0, &prefix.control, tau1, cfg.search_step) else {
                continue;
            };
            let end = trajectory.last();
            let entry = PathPoint {
                t: tau1,
                s: end.s,
                i: end.i,
                cost: cost_finite(self.weights, &trajectory).total,
                max_i: trajectory.max_infected(),
            };
            let budget = ((entry.s - self.params.herd_threshold()) / (gamma * icu)).max(0.0);
            let law = ControlLaw::SingularBoundary { s_at_tau2: entry.s - gamma * icu * budget, tau2: tau1 + budget };
            let slices = if budget > 0.0 { cfg.singular_slices } else { 0 };
            let boundary = sweep(
                self.params,
                self.weights,
                law,
                entry,
                budget / cfg.singular_slices as f64,
                slices,
                cfg.search_step,
            );
            for (k, on_line) in boundary.iter().enumerate() {
                let delta_sing = if k == slices { budget } else { budget * k as f64 / cfg.singular_slices as f64 };
                let post = sweep(self.params, self.weights, lockdown, *on_line, g, post_count, cfg.search_step);
                for (j, point) in post.iter().enumerate() {
                    let knobs = BoundaryKnobs { tau0, delta_sing, delta_post: j as f64 * g };
                    best.offer(self.close(point), StructureKnobs::BoundaryArc(knobs));
                }
                self.evaluations.set(self.evaluations.get() + post.len());
            }
        }
        best
    }

    /// Simplex refinement from each lattice point; returns the best knobs
    /// found by search-step objective.
    fn refine(&self, starts: &[(f64, StructureKnobs)], onset: Option<f64>) -> Option<(f64, StructureKnobs)> {
        let options =
            SimplexOptions { max_evaluations: self.config.max_evaluations, f_tolerance: 1e-12, x_tolerance: 1e-6 };
        let mut best: Option<(f64, StructureKnobs)> = None;
        for (value, knobs) in starts {
            let layout = Layout::for_knobs(knobs, onset);
            let x0 = layout.encode(knobs);
            let scale = layout.scales(knobs, self.config.grid_step);
            let result = minimize(|x| self.objective(layout.decode(x)), &x0, &scale, &options);
            let (f, k) = if result.f < *value { (result.f, layout.decode(&result.x)) } else { (*value, *knobs) };
            if best.is_none_or(|(b, _)| f < b) {
                best = Some((f, k));
            }
        }
        best
    }
}

fn family_best(scored: &Scored, feasibility_tol: f64, icu: f64) -> FamilyBest {
    FamilyBest {
        family: scored.knobs.family(),
        knobs: scored.knobs,
        cost: scored.cost,
        objective: scored.objective,
        max_infected: scored.max_infected,
        feasible: scored.max_infected <= icu + feasibility_tol,
    }
}

/// Minimizes the infinite-horizon cost over both structured families.
///
/// Time knobs are searched up to `horizon_hint`, which should be at least
/// [`choose_horizon`] of the expected optimum.
pub fn optimize_structured(
    params: &EpidemicParams,
    weights: &CostWeights,
    state0: &EpidemicState,
    horizon_hint: f64,
    config: &SearchConfig,
) -> Result<OptimizationReport, OptimizeError> {
    params.validate()?;
    weights.validate()?;
    config.validate()?;
    if !(horizon_hint > 0.0 && horizon_hint.is_finite()) {
        return Err(OptimizeError::InvalidHorizon(horizon_hint));
    }
    let zone = classify(params, state0).map_err(PolicyError::from)?;
    if zone == Zone::Infeasible {
        return Err(OptimizeError::InfeasibleStart);
    }
    let problem = Problem { params, weights, state0, config, evaluations: Cell::new(0) };

    let coarse_greedy = greedy_with_step(params, state0, config.search_step)?;
    let onset = match zone {
        Zone::ViableLockdown => Some(coarse_greedy.switches.tau0),
        _ => None,
    };

    let bangbang_starts = problem.bangbang_lattice(horizon_hint);
    let boundary_starts = problem.boundary_lattice(horizon_hint, onset);
    let refined_bangbang = problem.refine(&bangbang_starts.items, onset);
    let refined_boundary = problem.refine(&boundary_starts.items, onset);

    let final_bangbang = refined_bangbang.and_then(|(_, k)| problem.score_knobs(k, config.step));
    let mut final_boundary = refined_boundary.and_then(|(_, k)| problem.score_knobs(k, config.step));

    let greedy = greedy_with_step(params, state0, config.step)?;
    let greedy_knobs = StructureKnobs::BoundaryArc(BoundaryKnobs {
        tau0: greedy.switches.tau0,
        delta_sing: greedy.switches.boundary_duration(),
        delta_post: 0.0,
    });
    let greedy_scored = problem.score(greedy_knobs, greedy.clone(), config.step);
    let greedy_cost = greedy_scored.as_ref().map(|g| g.cost);
    if zone == Zone::Safe {
        // The greedy control is u = 0, a bang-bang member.
        let zero = StructureKnobs::BangBang(BangBangKnobs { sigma0: 0.0, sigma1: 0.0 });
        let zero_scored = problem.score_knobs(zero, config.step);
        return assemble(
            &problem,
            final_bangbang.into_iter().chain(zero_scored).collect(),
            final_boundary,
            greedy_cost,
        );
    }
    if let Some(g) = greedy_scored {
        if final_boundary.as_ref().is_none_or(|b| g.objective <= b.objective) {
            final_boundary = Some(g);
        }
    }
    assemble(&problem, final_bangbang.into_iter().collect(), final_boundary, greedy_cost)
}

fn assemble(
    problem: &Problem,
    bangbang: Vec<Scored>,
    boundary: Option<Scored>,
    greedy_cost: Option<CostBreakdown>,
) -> Result<OptimizationReport, OptimizeError> {
    let config = problem.config;
    let icu = problem.params.i_max;
    let bangbang = bangbang.into_iter().min_by(|a, b| a.objective.total_cmp(&b.objective));
    let family_compared: Vec<FamilyBest> =
        bangbang.iter().chain(boundary.iter()).map(|s| family_best(s, config.feasibility_tol, icu)).collect();
    let (winner, tie) = match (bangbang, boundary) {
        (None, None) => return Err(OptimizeError::NoCandidate),
        (Some(b), None) | (None, Some(b)) => (b, false),
        (Some(bb), Some(bd)) => {
            let scale = bb.objective.abs().max(bd.objective.abs()).max(1e-12);
            let tie = (bb.objective - bd.objective).abs() <= config.tie_tol * scale;
            if tie || bb.objective < bd.objective {
                (bb, tie)
            } else {
                (bd, false)
            }
        }
    };
    Ok(OptimizationReport {
        best_knobs: winner.knobs,
        best_cost: winner.cost,
        switch_times: winner.structured.switches,
        feasible: winner.max_infected <= icu + config.feasibility_tol,
        max_infected: winner.max_infected,
        evaluations: problem.evaluations.get(),
        family_compared,
        tie,
        greedy_cost,
        control: winner.structured.control,
    })
}

/// Smallest multiple of [`HORIZON_GRID`] days at which `s` is below
/// `gamma/beta - margin` under `control`.
pub fn choose_horizon(
    params: &EpidemicParams,
    state0: &EpidemicState,
    control: &PiecewiseControl,
    margin: f64,
) -> Result<f64, OptimizeError> {
    params.validate()?;
    if !state0.in_triangle() {
        return Err(ModelError::InvalidInitialState { s: state0.s, i: state0.i }.into());
    }
    if !control.is_eventually_zero() {
        return Err(CostError::NonTerminatingControl.into());
    }
    control.validate(params)?;
    let target = params.herd_threshold() - margin;
    let mut state = *state0;
    for (a, b, law) in control.segments(HORIZON_LIMIT)? {
        let run = run_arc(params, law, a, state, b, DEFAULT_STEP, b - a, |_, s, _| target - s);
        if let Some(t) = run.stop {
            let mut horizon = (t / HORIZON_GRID).ceil() * HORIZON_GRID;
            if horizon <= t && t > 0.0 {
                horizon += HORIZON_GRID;
            }
            if horizon > HORIZON_LIMIT {
                break;
            }
            return Ok(horizon);
        }
        let end = run.end();
        state = EpidemicState { s: end.s, i: end.i };
    }
    Err(OptimizeError::HorizonNotFound { limit: HORIZON_LIMIT })
}

/// Horizon that the greedy control needs to pass herd immunity with the
/// default margin; a natural search range for [`optimize_structured`].
pub fn default_horizon_hint(params: &EpidemicParams, state0: &EpidemicState) -> Result<f64, OptimizeError> {
    let greedy = greedy_with_step(params, state0, DEFAULT_STEP).map_err(|e| match e {
        PolicyError::InfeasibleStart => OptimizeError::InfeasibleStart,
        other => other.into(),
    })?;
    choose_horizon(params, state0, &greedy.control, DEFAULT_MARGIN)
}

/// Optimizes the problem restricted to each finite horizon and compares the
/// zero-extended optima with the infinite-horizon optimum.
///
/// Every horizon must be at least the time the limit control needs to pass
/// herd immunity; shorter horizons are rejected with
/// [`OptimizeError::HorizonTooShort`].
pub fn gamma_diagnostic(
    params: &EpidemicParams,
    weights: &CostWeights,
    state0: &EpidemicState,
    horizons: &[f64],
    config: &SearchConfig,
) -> Result<GammaDiagnostic, OptimizeError> {
    let sorted = horizons.windows(2).all(|w| w[0] < w[1]);
    if horizons.is_empty() || !sorted || horizons.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(OptimizeError::UnsortedHorizons);
    }
    let last = *horizons.last().expect("horizons are non-empty");
    let hint = default_horizon_hint(params, state0)?.max(last);
    let limit = optimize_structured(params, weights, state0, hint, config)?;
    let required = choose_horizon(params, state0, &limit.control, DEFAULT_MARGIN)?;
    if horizons[0] < required {
        return Err(OptimizeError::HorizonTooShort { horizon: horizons[0], required });
    }

    let problem = Problem { params, weights, state0, config, evaluations: Cell::new(0) };
    let onset = greedy_with_step(params, state0, config.search_step).ok().map(|g| g.switches.tau0);
    let mut starts: Vec<StructureKnobs> = vec![limit.best_knobs];
    for other in &limit.family_compared {
        if !starts.contains(&other.knobs) {
            starts.push(other.knobs);
        }
    }
    let options = SimplexOptions { max_evaluations: config.max_evaluations, f_tolerance: 1e-12, x_tolerance: 1e-6 };

    let mut truncated_costs = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let mut incumbent = limit.control.truncate_at(horizon);
        let mut incumbent_value = problem.finite_objective(&incumbent, horizon, config.step).unwrap_or(f64::INFINITY);
        for knobs in &starts {
            let layout = Layout::for_knobs(knobs, onset);
            let x0 = layout.encode(knobs);
            let scale = layout.scales(knobs, config.grid_step);
            let result = minimize(
                |x| problem.finite_knobs_objective(layout.decode(x), horizon, config.search_step),
                &x0,
                &scale,
                &options,
            );
            let Ok(candidate) = layout.decode(&result.x).build(params, state0, config.step) else {
                continue;
            };
            let Some(value) = problem.finite_objective(&candidate.control, horizon, config.step) else {
                continue;
            };
            if value < incumbent_value - config.tie_tol * (1.0 + incumbent_value.abs()) {
                incumbent = candidate.control.truncate_at(horizon);
                incumbent_value = value;
            }
        }
        truncated_costs.push(cost_infinite(params, weights, &incumbent, state0, config.step)?.total);
    }
    let limit_cost = limit.best_cost.total;
    let gaps = truncated_costs.iter().map(|c| (c - limit_cost).abs()).collect();
    Ok(GammaDiagnostic {
        horizons: horizons.to_vec(),
        truncated_costs,
        limit_cost,
        gaps,
        required_horizon: required,
        limit_knobs: limit.best_knobs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControlArc, EventKind};

    #[test]
    fn lattice_sweep_matches_direct_simulation() {
        let p = EpidemicParams::italy_2020();
        let w = CostWeights::new(1.0, 2.0).unwrap();
        let s0 = EpidemicState::new(0.94, 0.001).unwrap();
        let start = PathPoint { t: 0.0, s: s0.s, i: s0.i, cost: 0.0, max_i: s0.i };
        let law = ControlLaw::constant(0.05);
        let points = sweep(&p, &w, law, start, 2.0, 20, 0.1);
        let control = PiecewiseControl::new(vec![ControlArc::new(0.0, 40.0, law)], true).unwrap();
        let traj = simulate(&p, &s0, &control, 40.0, 0.1).unwrap();
        let end = points.last().unwrap();
        assert!((end.t - 40.0).abs() < 1e-12);
        assert!((end.s - traj.last().s).abs() < 1e-12);
        assert!((end.cost - cost_finite(&w, &traj).total).abs() < 1e-9);
    }

    #[test]
    fn best_keeps_lowest_entries() {
        let mut best = Best::new(2);
        let k = |x: f64| StructureKnobs::BangBang(BangBangKnobs { sigma0: x, sigma1: x });
        for v in [5.0, 1.0, f64::INFINITY, 3.0, 0.5] {
            best.offer(v, k(v));
        }
        let values: Vec<f64> = best.items.iter().map(|(v, _)| *v).collect();
        assert_eq!(values, vec![0.5, 1.0]);
    }

    #[test]
    fn layout_round_trip() {
        let knobs = StructureKnobs::BoundaryArc(BoundaryKnobs { tau0: 3.0, delta_sing: 40.0, delta_post: 7.0 });
        for layout in [Layout::Boundary, Layout::PinnedBoundary(3.0)] {
            assert_eq!(layout.decode(&layout.encode(&knobs)), knobs);
        }
        let knobs = StructureKnobs::BangBang(BangBangKnobs { sigma0: 3.0, sigma1: 9.0 });
        assert_eq!(Layout::BangBang.decode(&Layout::BangBang.encode(&knobs)), knobs);
    }

    #[test]
    fn horizon_after_uncontrolled_herd_crossing() {
        let p = EpidemicParams::italy_2020();
        let s0 = EpidemicState::new(0.94, 0.001).unwrap();
        let control = PiecewiseControl::zero();
        let horizon = choose_horizon(&p, &s0, &control, 0.0).unwrap();
        let traj = simulate(&p, &s0, &control, horizon, DEFAULT_STEP).unwrap();
        let crossing = traj.first_event(EventKind::HerdCross).unwrap();
        assert!(crossing < horizon && crossing >= horizon - HORIZON_GRID, "{crossing} vs {horizon}");
    }

    #[test]
    fn non_terminating_control_has_no_horizon() {
        let p = EpidemicParams::italy_2020();
        let s0 = EpidemicState::new(0.94, 0.001).unwrap();
        let r = choose_horizon(&p, &s0, &PiecewiseControl::constant(p.u_max), DEFAULT_MARGIN);
        assert_eq!(r, Err(OptimizeError::Cost(CostError::NonTerminatingControl)));
    }

    #[test]
    fn rejects_unsorted_horizons() {
        let p = EpidemicParams::italy_2020();
        let w = CostWeights::new(1.0, 1.0).unwrap();
        let s0 = EpidemicState::new(0.94, 0.001).unwrap();
        let r = gamma_diagnostic(&p, &w, &s0, &[400.0, 300.0], &SearchConfig::default());
        assert_eq!(r, Err(OptimizeError::UnsortedHorizons));
    }
}
