//! The six-agent leader-follower benchmark: embedded scenarios and the
//! expected verdict grid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sbdc_core::dynamics::{simulate, Trajectory, Verdict};
use sbdc_core::robustness::{analyze, RobustnessReport};

use crate::error::CliError;
use crate::scenario::{Mode, Resolved, Scenario};

/// Leader input the followers should track.
pub const LEADER_INPUT: f64 = -0.5;
/// Allowed final distance from the leader input.
pub const LIMIT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Converge,
    Diverge,
}

pub struct Cell {
    pub name: &'static str,
    pub json: &'static str,
    pub expected: Expected,
}

pub const CELLS: [Cell; 6] = [
    Cell { name: "k6_e2_ct", json: include_str!("../scenarios/k6_e2_ct.json"), expected: Expected::Diverge },
    Cell { name: "k6_e2_dt", json: include_str!("../scenarios/k6_e2_dt.json"), expected: Expected::Diverge },
    Cell { name: "k2_e2_ct", json: include_str!("../scenarios/k2_e2_ct.json"), expected: Expected::Converge },
    Cell { name: "k2_e2_dt", json: include_str!("../scenarios/k2_e2_dt.json"), expected: Expected::Converge },
    Cell { name: "k6_e1_ct", json: include_str!("../scenarios/k6_e1_ct.json"), expected: Expected::Converge },
    Cell { name: "k6_e1_dt", json: include_str!("../scenarios/k6_e1_dt.json"), expected: Expected::Converge },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub name: String,
    pub gain: f64,
    pub attacked_edges: usize,
    pub mode: String,
    pub epsilon: Option<f64>,
    pub rho: f64,
    pub epsilon_star: f64,
    pub deviation: f64,
    pub certified: bool,
    pub expected: Expected,
    pub observed: String,
    pub limit: Option<f64>,
    /// `max_i |x_i(T) − u₁|`.
    pub final_error: Option<f64>,
    pub matches: bool,
    /// Discrete step above `ε*`: the DT bound no longer matches the CT one.
    pub epsilon_above_star: bool,
}

pub struct CellRun {
    pub outcome: CellOutcome,
    pub trajectory: Trajectory,
    pub report: RobustnessReport,
    pub scenario: Scenario,
}

pub fn scenario(cell: &Cell, epsilon: Option<f64>) -> Result<Scenario, CliError> {
    let mut s = Scenario::parse(cell.json)?;
    if let (Some(eps), Some(sim)) = (epsilon, s.simulation.as_mut()) {
        if sim.mode == Mode::Dt {
            sim.epsilon = Some(eps);
        }
    }
    Ok(s)
}

pub fn run_cell(cell: &Cell, epsilon: Option<f64>) -> Result<CellRun, CliError> {
    let scenario = scenario(cell, epsilon)?;
    let Resolved { graph, coding, theta, attack, attacked, san, simulation, epsilon } = scenario.resolve(None)?;
    let sim = simulation.expect("benchmark scenarios simulate");
    let attack = attack.expect("benchmark scenarios attack");
    let attacked = attacked.expect("benchmark scenarios attack");
    let report = analyze(&graph, &coding, &theta, &attacked, Some(&attack), epsilon)?;
    let trajectory = simulate(&graph, &coding, &theta, Some(&attack), san.as_ref(), &sim.x0, &sim.config)?;

    let final_error = trajectory.final_state().iter().map(|x| (x - LEADER_INPUT).abs()).fold(0.0, f64::max);
    let (limit, final_error) = match &trajectory.verdict {
        Verdict::Converged { limit } => (Some(limit[0]), Some(final_error)),
        _ => (None, if final_error.is_finite() { Some(final_error) } else { None }),
    };
    let matches = match cell.expected {
        Expected::Converge => trajectory.verdict.is_converged() && final_error.is_some_and(|e| e <= LIMIT_TOL),
        Expected::Diverge => trajectory.verdict.is_diverged(),
    };
    let epsilon_star = report.epsilon.epsilon_star;
    let verdicts = report.attack.as_ref().expect("attack present");
    let outcome = CellOutcome {
        name: cell.name.to_string(),
        gain: report.k_delta,
        attacked_edges: attacked.len(),
        mode: match sim.mode {
            Mode::Ct => "ct".into(),
            Mode::Dt => "dt".into(),
        },
        epsilon,
        rho: report.rho_ct,
        epsilon_star,
        deviation: verdicts.deviation_norm,
        certified: report.all_pass,
        expected: cell.expected,
        observed: trajectory.verdict.label().to_string(),
        limit,
        final_error,
        matches,
        epsilon_above_star: epsilon.is_some_and(|e| e > epsilon_star),
    };
    Ok(CellRun { outcome, trajectory, report, scenario })
}

/// Runs every cell on its own thread.
pub fn run_all(epsilon: Option<f64>) -> Result<Vec<CellRun>, CliError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = CELLS.iter().map(|c| scope.spawn(move || run_cell(c, epsilon))).collect();
        handles.into_iter().map(|h| h.join().expect("benchmark cell panicked")).collect()
    })
}

pub fn emit_scenarios(dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    CELLS
        .iter()
        .map(|c| {
            let path = dir.join(format!("{}.json", c.name));
            crate::output::write_atomic(&path, c.json.as_bytes())?;
            Ok(path)
        })
        .collect()
}
