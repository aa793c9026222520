//! Command implementations. Each returns the process exit code.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use sbdc_core::dynamics::simulate;
use sbdc_core::numfmt::fmt_sig;
use sbdc_core::robustness::{analyze, RobustnessReport};

use crate::benchmark::{self, CellOutcome, Expected};
use crate::error::CliError;
use crate::output::{output_root, rounded_json, write_atomic};
use crate::plot::trajectory_svg;
use crate::record::{RunRecord, SimulationRecord, TOOLKIT_VERSION};
use crate::scenario::{Mode, Resolved, Scenario, ValidationError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CERTIFICATE_FAILED: i32 = 2;

struct Loaded {
    scenario: Scenario,
    stem: String,
    root: PathBuf,
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let scenario = Scenario::parse(&text)?;
    let outputs = scenario.outputs.as_ref();
    let stem = outputs
        .and_then(|o| o.stem.clone())
        .or_else(|| scenario.name.clone())
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "scenario".into());
    let root = output_root(outputs.and_then(|o| o.dir.as_deref()));
    Ok(Loaded { scenario, stem, root })
}

fn report_for(r: &Resolved) -> Result<Option<RobustnessReport>, CliError> {
    match &r.attacked {
        None => Ok(None),
        Some(attacked) => Ok(Some(analyze(&r.graph, &r.coding, &r.theta, attacked, r.attack.as_ref(), r.epsilon)?)),
    }
}

fn print_report(report: &RobustnessReport) {
    let res = &report.resistance;
    println!("attacked edges      {}", res.attacked.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "));
    println!("R (multi-edge)      {}", fmt_sig(res.r_multi));
    println!("R* (single edge)    {} on {}", fmt_sig(res.r_star), res.argmax_edge);
    println!("R total             {}", fmt_sig(res.r_tot));
    println!("resilience gap      {}", fmt_sig(report.gap));
    println!("K_delta             {}", fmt_sig(report.k_delta));
    println!("rho (ct)            {}", fmt_sig(report.rho_ct));
    println!("rho*                {}", fmt_sig(report.rho_star));
    println!(
        "rho* with K'        {}  (K' = {})",
        fmt_sig(report.rho_star_compensated),
        fmt_sig(report.compensated_k_delta)
    );
    println!("Psi                 {}", fmt_sig(report.epsilon.psi));
    println!("epsilon*            {}", fmt_sig(report.epsilon.epsilon_star));
    if let Some(d) = &report.discrete {
        let bound = d.rho_dt.map_or_else(|| "undefined (epsilon >= 1/Psi)".into(), fmt_sig);
        println!("rho (dt, eps={})   {}", fmt_sig(d.epsilon), bound);
    }
    print_verdicts(report);
}

fn print_verdicts(report: &RobustnessReport) {
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    match &report.attack {
        None => println!("no attack given; bounds only"),
        Some(v) => {
            println!(
                "{}  codeword deviation {} < rho {}",
                mark(v.codeword_bound.holds),
                fmt_sig(v.deviation_norm),
                fmt_sig(v.codeword_bound.bound)
            );
            println!(
                "{}  weight deviation {} < 1/R {}",
                mark(v.weight_bound.holds),
                fmt_sig(v.weight_bound.value),
                fmt_sig(v.weight_bound.bound)
            );
            if let Some(p) = &v.phi {
                println!("{}  phi {} < 1/epsilon {}", mark(p.phi_ok), fmt_sig(p.phi), fmt_sig(1.0 / p.epsilon));
            }
            if let Some(c) = &v.discrete_bound {
                println!("{}  codeword deviation {} < rho_dt {}", mark(c.holds), fmt_sig(c.value), fmt_sig(c.bound));
            }
        }
    }
    println!("overall: {}", mark(report.all_pass));
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    scenario: &'a str,
    scenario_hash: String,
    all_pass: bool,
    verdicts: &'a Option<sbdc_core::robustness::AttackVerdicts>,
}

/// `analyze` and `certify`: writes the report and exits 0/2 on the verdicts.
pub fn cmd_analyze(path: &Path, verdicts_only: bool) -> Result<i32, CliError> {
    let start = Instant::now();
    let Loaded { scenario, stem, root } = load(path)?;
    let resolved = scenario.resolve(None)?;
    let report = report_for(&resolved)?.ok_or_else(|| ValidationError {
        field: "attacked".into(),
        message: "give an attack or an attacked edge list to analyse".into(),
    })?;
    let hash = scenario.content_hash();
    let out = if verdicts_only {
        let file = root.join(format!("{stem}.verdicts.json"));
        let body =
            CertifyOutput { scenario: &stem, scenario_hash: hash, all_pass: report.all_pass, verdicts: &report.attack };
        write_atomic(&file, rounded_json(&body).as_bytes())?;
        print_verdicts(&report);
        file
    } else {
        let file = root.join(format!("{stem}.report.json"));
        let record = RunRecord {
            scenario: stem.clone(),
            scenario_hash: hash,
            toolkit_version: TOOLKIT_VERSION.into(),
            command: "analyze".into(),
            seed: None,
            report: Some(report.clone()),
            simulation: None,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        write_atomic(&file, rounded_json(&record).as_bytes())?;
        print_report(&report);
        file
    };
    println!("wrote {}", out.display());
    Ok(if report.all_pass { EXIT_OK } else { EXIT_CERTIFICATE_FAILED })
}

/// Simulates the scenario; exit 0 whenever the run completes.
pub fn cmd_simulate(path: &Path, plot: bool, seed: Option<u64>) -> Result<i32, CliError> {
    let start = Instant::now();
    let Loaded { scenario, stem, root } = load(path)?;
    let resolved = scenario.resolve(seed)?;
    let sim = resolved
        .simulation
        .as_ref()
        .ok_or_else(|| ValidationError { field: "simulation".into(), message: "required for simulate".into() })?;
    let traj = simulate(
        &resolved.graph,
        &resolved.coding,
        &resolved.theta,
        resolved.attack.as_ref(),
        resolved.san.as_ref(),
        &sim.x0,
        &sim.config,
    )?;
    let report = report_for(&resolved)?;

    let csv_path = root.join(format!("{stem}.csv"));
    let verdict_path = root.join(format!("{stem}.verdict.json"));
    let record_path = root.join(format!("{stem}.run.json"));
    write_atomic(&csv_path, traj.to_csv().as_bytes())?;
    let summary = traj.summary();
    write_atomic(&verdict_path, rounded_json(&summary).as_bytes())?;
    if plot {
        let svg_path = root.join(format!("{stem}.svg"));
        write_atomic(&svg_path, trajectory_svg(&traj, &stem).as_bytes())?;
        println!("wrote {}", svg_path.display());
    }
    let record = RunRecord {
        scenario: stem.clone(),
        scenario_hash: scenario.content_hash(),
        toolkit_version: TOOLKIT_VERSION.into(),
        command: "simulate".into(),
        seed: seed.or(scenario.seed),
        report,
        simulation: Some(SimulationRecord {
            mode: match sim.mode {
                Mode::Ct => "ct".into(),
                Mode::Dt => "dt".into(),
            },
            samples: traj.times.len(),
            final_time: *traj.times.last().expect("samples"),
            summary: summary.clone(),
            csv: csv_path.display().to_string(),
        }),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_atomic(&record_path, rounded_json(&record).as_bytes())?;

    print!("verdict: {}", summary.verdict);
    if let Some(limit) = &summary.limit {
        print!("  limit {}", limit.iter().map(|v| fmt_sig(*v)).collect::<Vec<_>>().join(" "));
    }
    if let Some(t) = summary.escape_time {
        print!("  escape at t = {}", fmt_sig(t));
    }
    println!("  final disagreement {}", fmt_sig(summary.disagreement_final));
    println!("wrote {}", csv_path.display());
    println!("wrote {}", verdict_path.display());
    println!("wrote {}", record_path.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ReproduceSummary {
    toolkit_version: &'static str,
    epsilon_override: Option<f64>,
    all_match: bool,
    cells: Vec<CellOutcome>,
}

/// Runs the benchmark grid; exit 2 when any cell deviates from the
/// expected verdict.
pub fn cmd_reproduce(json: bool, epsilon: Option<f64>, emit: Option<&Path>) -> Result<i32, CliError> {
    if let Some(e) = epsilon {
        if !(e > 0.0 && e.is_finite()) {
            return Err(CliError::Usage(format!("--epsilon must be positive, got {e}")));
        }
    }
    if let Some(dir) = emit {
        for p in benchmark::emit_scenarios(dir)? {
            if !json {
                println!("wrote {}", p.display());
            }
        }
    }
    let runs = benchmark::run_all(epsilon)?;
    let root = output_root(None).join("reproduce");
    for run in &runs {
        let name = &run.outcome.name;
        write_atomic(&root.join(format!("{name}.csv")), run.trajectory.to_csv().as_bytes())?;
        write_atomic(&root.join(format!("{name}.verdict.json")), rounded_json(&run.trajectory.summary()).as_bytes())?;
    }
    let cells: Vec<CellOutcome> = runs.into_iter().map(|r| r.outcome).collect();
    let all_match = cells.iter().all(|c| c.matches);
    let summary = ReproduceSummary { toolkit_version: TOOLKIT_VERSION, epsilon_override: epsilon, all_match, cells };
    write_atomic(&root.join("summary.json"), rounded_json(&summary).as_bytes())?;

    if json {
        print!("{}", rounded_json(&summary));
    } else {
        print_table(&summary.cells);
        println!(
            "{}",
            if all_match { "all cells match the expected verdicts" } else { "MISMATCH: see rows marked no" }
        );
    }
    Ok(if all_match { EXIT_OK } else { EXIT_CERTIFICATE_FAILED })
}

fn print_table(cells: &[CellOutcome]) {
    println!(
        "{:<9} {:>4} {:>5} {:>4} {:>6} {:>14} {:>14} {:>9} {:>10} {:>10} {:>14} {:>6}  note",
        "run", "K", "edges", "mode", "eps", "rho", "eps*", "certified", "expected", "observed", "limit", "match"
    );
    for c in cells {
        let expected = match c.expected {
            Expected::Converge => "converge",
            Expected::Diverge => "diverge",
        };
        let note = if c.epsilon_above_star { "eps above eps*; dt bound no longer matches ct" } else { "" };
        println!(
            "{:<9} {:>4} {:>5} {:>4} {:>6} {:>14} {:>14} {:>9} {:>10} {:>10} {:>14} {:>6}  {note}",
            c.name,
            fmt_sig(c.gain),
            c.attacked_edges,
            c.mode,
            c.epsilon.map_or("-".into(), fmt_sig),
            fmt_sig(c.rho),
            fmt_sig(c.epsilon_star),
            if c.certified { "yes" } else { "no" },
            expected,
            c.observed,
            c.limit.map_or("-".into(), fmt_sig),
            if c.matches { "yes" } else { "no" },
        );
    }
}
