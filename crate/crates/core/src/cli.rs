//! Command-line front end: `epictrl <command> <scenario> [options]`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cost::{cumulative_cost, evaluate_infinite, CostBreakdown, CostWeights};
use crate::model::{simulate, EpidemicParams, EpidemicState, PiecewiseControl, Trajectory};
use crate::optimize::{default_horizon_hint, gamma_diagnostic, optimize_structured, OptimizeError, SearchConfig};
use crate::pmp::{integrate_adjoint, verification_horizon, verify_pmp, PmpTolerances};
use crate::policy::{greedy_with_step, PolicyError, SwitchTimes};
use crate::scenario::{Scenario, ScenarioError};
use crate::viability::{classify, critical_susceptibles, curve_value, CriticalSusceptibles, CurveKind, Zone};

/// Spacing of the `s` grid in `zones.csv`.
const ZONE_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "epictrl", version, about = "Optimal lockdowns for SIR epidemics under an ICU capacity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the uncontrolled epidemic.
    Simulate(Common),
    /// Tabulate the viability curves and classify the initial state.
    Viability(Common),
    /// Build the greedy lockdown.
    Greedy(Common),
    /// Search the structured control families for the cheapest lockdown.
    Optimize(Common),
    /// Optimize, then check the Pontryagin conditions along the optimum.
    Verify(Common),
    /// Compare finite-horizon optima with the infinite-horizon one.
    Gamma {
        #[command(flatten)]
        common: Common,
        /// Comma-separated increasing horizons, days.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Preset name or path to a scenario file.
    scenario: String,
    /// Weight on the infected share in the running cost.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Output window in days.
    #[arg(long)]
    horizon: Option<f64>,
    /// Integration step in days.
    #[arg(long)]
    step: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Infeasible(String),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Infeasible(_) => 2,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Infeasible(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<PolicyError> for Failure {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::InfeasibleStart => Failure::Infeasible(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::InfeasibleStart | OptimizeError::Policy(PolicyError::InfeasibleStart) => {
                Failure::Infeasible(e.to_string())
            }
            other => Failure::Other(other.to_string()),
        }
    }
}

fn other<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Other(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status: 0 on success, 2 when the initial state cannot be
/// kept below the ICU level, 1 on any other error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("epictrl: {}", failure.message());
            failure.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(c) => {
            let (scenario, out) = prepare(&c)?;
            run_simulate(&scenario, &out)
        }
        Command::Viability(c) => {
            let (scenario, out) = prepare(&c)?;
            run_viability(&scenario, &out)
        }
        Command::Greedy(c) => {
            let (scenario, out) = prepare(&c)?;
            run_greedy(&scenario, &out)
        }
        Command::Optimize(c) => {
            let (scenario, out) = prepare(&c)?;
            run_optimize(&scenario, &out)
        }
        Command::Verify(c) => {
            let (scenario, out) = prepare(&c)?;
            run_verify(&scenario, &out)
        }
        Command::Gamma { common, horizons } => {
            let (scenario, out) = prepare(&common)?;
            run_gamma(&scenario, horizons, &out)
        }
    }
}

/// Resolves the scenario, applies overrides and creates the output directory.
pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(source);
    if path.is_file() || path.extension().is_some_and(|e| e == "toml") {
        Scenario::load(path)
    } else {
        Scenario::preset(source)
    }
}

fn prepare(common: &Common) -> Result<(Scenario, PathBuf), Failure> {
    let mut scenario = load_scenario(&common.scenario)?;
    if let Some(lambda2) = common.lambda2 {
        scenario.weights.lambda2 = lambda2;
    }
    if let Some(horizon) = common.horizon {
        scenario.horizon = horizon;
    }
    if let Some(step) = common.step {
        scenario.step = step;
    }
    scenario.validate()?;
    std::fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Other(format!("cannot create {}: {e}", common.out.display())))?;
    Ok((scenario, common.out.clone()))
}

fn search_config(scenario: &Scenario) -> SearchConfig {
    SearchConfig { step: scenario.step, ..SearchConfig::default() }
}

fn run_simulate(scenario: &Scenario, out: &Path) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report {
        scenario: String,
        horizon: f64,
        max_infected: f64,
        herd_crossing: Option<f64>,
        final_state: EpidemicState,
        cost: CostBreakdown,
    }
    let control = PiecewiseControl::zero();
    let trajectory = write_trajectory(scenario, &control, out)?;
    let evaluation = evaluate_infinite(&scenario.params, &scenario.weights, &control, &scenario.state0, scenario.step)
        .map_err(other)?;
    let report = Report {
        scenario: scenario.name.clone(),
        horizon: scenario.horizon,
        max_infected: evaluation.max_infected,
        herd_crossing: trajectory.first_event(crate::model::EventKind::HerdCross),
        final_state: trajectory.final_state(),
        cost: evaluation.cost,
    };
    write_json(out, &report)
}

fn run_viability(scenario: &Scenario, out: &Path) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report {
        scenario: String,
        state0: EpidemicState,
        zone: Zone,
        thresholds: CriticalSusceptibles,
    }
    let params = &scenario.params;
    std::fs::write(out.join("zones.csv"), zones_csv(params)).map_err(other)?;
    let zone = classify(params, &scenario.state0).map_err(other)?;
    let report = Report {
        scenario: scenario.name.clone(),
        state0: scenario.state0,
        zone,
        thresholds: critical_susceptibles(params),
    };
    write_json(out, &report)
}

/// `s,phi0,psi0,phimax` on `s = k * 1e-3`, `k = 1..=1000`.
pub fn zones_csv(params: &EpidemicParams) -> String {
    let count = (1.0 / ZONE_RESOLUTION).round() as usize;
    let mut text = String::from("s,phi0,psi0,phimax\n");
    for k in 1..=count {
        let s = k as f64 * ZONE_RESOLUTION;
        let curve = |which| curve_value(params, which, s).expect("s is positive");
        let _ = writeln!(
            text,
            "{:.11e},{:.11e},{:.11e},{:.11e}",
            s,
            curve(CurveKind::Phi0),
            curve(CurveKind::Psi0),
            curve(CurveKind::PhiMax)
        );
    }
    text
}

fn run_greedy(scenario: &Scenario, out: &Path) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report {
        scenario: String,
        switch_times: SwitchTimes,
        cost: CostBreakdown,
        max_infected: f64,
        control: PiecewiseControl,
    }
    let greedy = greedy_with_step(&scenario.params, &scenario.state0, scenario.step)?;
    write_trajectory(scenario, &greedy.control, out)?;
    let evaluation =
        evaluate_infinite(&scenario.params, &scenario.weights, &greedy.control, &scenario.state0, scenario.step)
            .map_err(other)?;
    let report = Report {
        scenario: scenario.name.clone(),
        switch_times: greedy.switches,
        cost: evaluation.cost,
        max_infected: evaluation.max_infected,
        control: greedy.control,
    };
    write_json(out, &report)
}

fn optimum(scenario: &Scenario) -> Result<crate::optimize::OptimizationReport, Failure> {
    let hint = default_horizon_hint(&scenario.params, &scenario.state0)?.max(scenario.horizon);
    Ok(optimize_structured(&scenario.params, &scenario.weights, &scenario.state0, hint, &search_config(scenario))?)
}

fn run_optimize(scenario: &Scenario, out: &Path) -> Result<(), Failure> {
    let report = optimum(scenario)?;
    write_trajectory(scenario, &report.control, out)?;
    write_json(out, &report)
}

fn run_verify(scenario: &Scenario, out: &Path) -> Result<(), Failure> {
    let best = optimum(scenario)?;
    let params = &scenario.params;
    let horizon = verification_horizon(params, &scenario.state0, &best.control).map_err(other)?;
    let control = best.control.truncate_at(horizon);
    let trajectory = simulate(params, &scenario.state0, &control, horizon, scenario.step).map_err(other)?;
    let adjoint = integrate_adjoint(params, &scenario.weights, &trajectory, &control).map_err(other)?;
    let report = verify_pmp(params, &scenario.weights, &adjoint, &control, &PmpTolerances::default());
    write_trajectory(scenario, &best.control, out)?;
    write_json(out, &report)
}

fn run_gamma(scenario: &Scenario, horizons: Option<Vec<f64>>, out: &Path) -> Result<(), Failure> {
    let horizons = match horizons {
        Some(h) => h,
        None => {
            let base = default_horizon_hint(&scenario.params, &scenario.state0)?.max(scenario.horizon);
            vec![base, 1.5 * base, 2.0 * base]
        }
    };
    let diagnostic =
        gamma_diagnostic(&scenario.params, &scenario.weights, &scenario.state0, &horizons, &search_config(scenario))?;
    write_json(out, &diagnostic)
}

/// Simulates `control` over the scenario window and writes `trajectory.csv`.
fn write_trajectory(scenario: &Scenario, control: &PiecewiseControl, out: &Path) -> Result<Trajectory, Failure> {
    let control = control.truncate_at(scenario.horizon);
    let trajectory =
        simulate(&scenario.params, &scenario.state0, &control, scenario.horizon, scenario.step).map_err(other)?;
    std::fs::write(out.join("trajectory.csv"), trajectory_csv(&scenario.weights, &trajectory)).map_err(other)?;
    Ok(trajectory)
}

/// `t,s,i,u,cumulative_cost` with 12 significant digits.
pub fn trajectory_csv(weights: &CostWeights, trajectory: &Trajectory) -> String {
    let cumulative = cumulative_cost(weights, trajectory);
    let mut text = String::from("t,s,i,u,cumulative_cost\n");
    for (p, c) in trajectory.samples.iter().zip(&cumulative) {
        let _ = writeln!(text, "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}", p.t, p.s, p.i, p.u, c);
    }
    text
}

fn write_json<T: Serialize>(out: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(other)?;
    std::fs::write(out.join("report.json"), text + "\n").map_err(other)
}
