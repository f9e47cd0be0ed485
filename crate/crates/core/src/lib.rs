//! Optimal lockdown policies for SIR epidemics under an ICU capacity
//! constraint.
//!
//! The crate simulates the controlled SIR model, classifies initial states by
//! the closed-form viability curves, synthesizes the greedy lockdown,
//! searches the bang-bang and boundary-arc control families for the least
//! infinite-horizon cost, and checks candidates against the Pontryagin
//! necessary conditions.

pub mod cli;
pub mod cost;
pub mod model;
pub mod optimize;
pub mod pmp;
pub mod policy;
pub mod scenario;
mod simplex;
pub mod viability;

pub use cost::{
    cost_finite, cost_infinite, cumulative_cost, evaluate_infinite, s_infinity, tail_infected_integral, CostBreakdown,
    CostError, CostWeights, InfiniteEvaluation,
};
pub use model::{
    mass_balance_residual, simulate, ControlArc, ControlLaw, EpidemicParams, EpidemicState, Event, EventKind,
    ModelError, PiecewiseControl, Sample, Trajectory, DEFAULT_STEP,
};
pub use optimize::{
    choose_horizon, default_horizon_hint, gamma_diagnostic, optimize_structured, FamilyBest, GammaDiagnostic,
    OptimizationReport, OptimizeError, SearchConfig, DEFAULT_MARGIN,
};
pub use pmp::{
    integrate_adjoint, verification_horizon, verify_pmp, AdjointPath, AdjointSample, JunctionAtom, JunctionKind,
    JunctionResidual, PmpError, PmpReport, PmpTolerances,
};
pub use policy::{
    build_bangbang, build_boundary, build_boundary_with_step, greedy_with_step, singular_value, synthesize_greedy,
    t_stab, BangBangKnobs, BoundaryKnobs, Family, PolicyError, StructureKnobs, StructuredControl, SwitchTimes,
};
pub use scenario::{Scenario, ScenarioError, PRESETS};
pub use viability::{
    classify, constant_control_peak, critical_susceptibles, curve_value, CriticalSusceptibles, CurveKind,
    ViabilityError, Zone,
};
