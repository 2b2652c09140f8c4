//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::field::edrf_grid;
use crate::grid::{GridError, GridSpec, RiskGrid};
use crate::interaction::{interaction_risk_grid, risk_level, sort_reports, monitor_all, EntityField, RiskReport};
use crate::math::Vec2;
use crate::output::{write_csv, write_grid_files};
use crate::planner::{
    candidate_field, rank_candidates, sample_candidates, score_candidates, PlannerError,
};
use crate::scenario::{load_params, load_scenario, ModelParams, Scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "edrf", version, about = "Driver risk field evaluation, monitoring and planning")]
pub struct Cli {
    /// JSON file overriding model constants: {"field": {...}, "ego": {...}}.
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// Directory for grid files and the JSON report.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Output grid cell size in meters, overriding the scenario.
    #[arg(long, value_name = "M")]
    pub grid_res: Option<f64>,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Risk level of every entity pair.
    Monitor(CommonArgs),
    /// Risk of the ego vehicle against every other entity.
    Ego(CommonArgs),
    /// Rank the nine candidate trajectories of the ego vehicle.
    Plan(CommonArgs),
    /// EDRF grid of a single entity; CSV on stdout without --out-dir.
    Field {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_name = "ID")]
        entity: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Everything a command produces, written out after the computation.
struct Outcome {
    stdout: String,
    report_name: String,
    grids: Vec<(String, RiskGrid)>,
}

#[derive(Serialize)]
struct FieldSummary<'a> {
    entity: &'a str,
    grid: GridSpec,
    max: f64,
    argmax_point: Vec2,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = match &cli.params {
        Some(p) => load_params(p)?,
        None => ModelParams::default(),
    };
    let outcome = match cli.threads {
        None => compute(&cli.command, params)?,
        Some(0) => return Err(CliError::Validation("--threads must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            pool.install(|| compute(&cli.command, params))?
        }
    };
    let common = match &cli.command {
        Command::Monitor(c) | Command::Ego(c) | Command::Plan(c) => c,
        Command::Field { common, .. } => common,
    };
    if let Some(dir) = &common.out_dir {
        write_outputs(dir, &outcome)?;
    }
    stdout
        .write_all(outcome.stdout.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    let io = |e: std::io::Error, what: &Path| CliError::Io(format!("{}: {e}", what.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    for (stem, grid) in &outcome.grids {
        write_grid_files(grid, dir, stem).map_err(|e| io(e, &dir.join(stem)))?;
    }
    let report = dir.join(&outcome.report_name);
    std::fs::write(&report, &outcome.stdout).map_err(|e| io(e, &report))
}

fn load(common: &CommonArgs, params: ModelParams) -> Result<(Scenario, GridSpec), CliError> {
    if let Some(r) = common.grid_res {
        if !(r.is_finite() && r > 0.0) {
            return Err(CliError::Validation(format!("--grid-res must be > 0, got {r}")));
        }
    }
    let scenario = Scenario::build(load_scenario(&common.scenario)?, params)?;
    let grid = scenario.output_grid(common.grid_res);
    grid.validate(scenario.spec.monitor.cell_budget)?;
    Ok((scenario, grid))
}

fn pair_grids(pairs: &[(&EntityField, &EntityField)], spec: GridSpec, budget: usize) -> Result<Vec<(String, RiskGrid)>, CliError> {
    pairs
        .iter()
        .map(|(a, b)| Ok((format!("ir_{}__{}", a.id, b.id), interaction_risk_grid(a, b, spec, budget)?)))
        .collect()
}

fn compute(command: &Command, params: ModelParams) -> Result<Outcome, CliError> {
    match command {
        Command::Monitor(common) => {
            let (scenario, spec) = load(common, params)?;
            let fields = scenario.fields();
            let monitor = scenario.spec.monitor;
            let reports = monitor_all(&fields, &monitor)?;
            let pairs: Vec<_> = (0..fields.len())
                .flat_map(|i| (i + 1..fields.len()).map(move |j| (i, j)))
                .map(|(i, j)| (&fields[i], &fields[j]))
                .collect();
            let grids = pair_grids(&pairs, spec, monitor.cell_budget)?;
            Ok(Outcome { stdout: to_json(&reports), report_name: "monitor.json".into(), grids })
        }
        Command::Ego(common) => {
            let (scenario, spec) = load(common, params)?;
            let ego = scenario.ego()?;
            let others = scenario.non_ego_fields();
            let monitor = scenario.spec.monitor;
            let mut reports = others
                .iter()
                .map(|o| risk_level(&ego.field, o, &monitor))
                .collect::<Result<Vec<RiskReport>, _>>()?;
            sort_reports(&mut reports);
            let pairs: Vec<_> = others.iter().map(|o| (&ego.field, o)).collect();
            let grids = pair_grids(&pairs, spec, monitor.cell_budget)?;
            Ok(Outcome { stdout: to_json(&reports), report_name: "ego.json".into(), grids })
        }
        Command::Plan(common) => {
            let (scenario, spec) = load(common, params)?;
            let ego = scenario.ego()?;
            let others = scenario.non_ego_fields();
            let monitor = scenario.spec.monitor;
            let config = scenario.spec.planner.unwrap_or_default();
            let candidates = sample_candidates(&ego.state, &config)?;
            let scores = score_candidates(
                &candidates,
                &ego.id,
                &others,
                &ego.state,
                &scenario.params.ego,
                &scenario.params.field,
                &config,
                &monitor,
            )?;
            let ranked = rank_candidates(scores);
            let mut grids = Vec::with_capacity(candidates.len());
            for c in &candidates {
                let field = EntityField::ego(
                    ego.id.clone(),
                    ego.state.position,
                    candidate_field(c, &ego.state, &scenario.params.ego, &scenario.params.field),
                );
                spec.validate(monitor.cell_budget)?;
                let mut combined = RiskGrid::zeros(spec);
                for o in &others {
                    combined.max_with(&interaction_risk_grid(&field, o, spec, monitor.cell_budget)?);
                }
                grids.push((format!("plan_{}", c.label()), combined));
            }
            Ok(Outcome { stdout: to_json(&ranked), report_name: "plan.json".into(), grids })
        }
        Command::Field { common, entity } => {
            let (scenario, spec) = load(common, params)?;
            let e = scenario
                .entity(entity)
                .ok_or_else(|| CliError::Validation(format!("unknown entity id {entity:?}")))?;
            let grid = match &e.prediction {
                Some(p) => edrf_grid(&scenario.params.field, p, &e.state, spec, scenario.spec.monitor.cell_budget)?,
                None => RiskGrid::evaluate(spec, scenario.spec.monitor.cell_budget, |q| e.field.evaluate(q))?,
            };
            let stdout = if common.out_dir.is_some() {
                let m = grid.argmax();
                to_json(&FieldSummary { entity: &e.id, grid: spec, max: m.value, argmax_point: m.center })
            } else {
                let mut buf = Vec::new();
                write_csv(&grid, &mut buf).expect("in-memory write");
                String::from_utf8(buf).expect("ascii csv")
            };
            Ok(Outcome { stdout, report_name: format!("field_{}.json", e.id), grids: vec![(format!("field_{}", e.id), grid)] })
        }
    }
}
