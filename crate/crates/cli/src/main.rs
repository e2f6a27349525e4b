//! Command-line front end: validate an input directory, build cost tables,
//! solve one scenario, sweep a whole manifest, and aggregate run outputs.
//!
//! Exit codes: 0 success, 1 validation error (bad arguments, malformed or
//! inconsistent inputs, rule violations), 2 solver failure (infeasible,
//! unbounded, or a solution that fails verification), 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridwork_core::costs;
use gridwork_core::domain::{self, LoadError, SystemDescription};
use gridwork_core::formulation::assemble;
use gridwork_core::lp::{import_solution, SolutionIoError, Status};
use gridwork_core::metrics::compute_run_metrics;
use gridwork_core::report::{self, ReportError, RunKey};
use gridwork_core::scenario::{self, CostCase, Mode, RunStatus};

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gridwork",
    version,
    about = "Capacity-expansion planning for co-located generation and storage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a system directory and report every rule violation.
    Validate {
        /// Directory holding the system CSV files.
        dir: PathBuf,
    },
    /// Build the annualized cost tables and write them into the directory.
    Costs {
        /// Directory holding the (optional) cost configuration CSV files.
        dir: PathBuf,
    },
    /// Solve one scenario and write its outputs under <dir>/runs/.
    Solve(SolveArgs),
    /// Run every scenario in a manifest, in parallel, under <dir>/runs/.
    Matrix(MatrixArgs),
    /// Aggregate <runs-dir>/*/metrics.csv into <runs-dir>/summary.csv.
    Report {
        /// Directory containing one subdirectory per finished run.
        runs_dir: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Directory holding the system CSV files.
    dir: PathBuf,
    /// Siting mode: fixed, optimized, or colocated.
    #[arg(long)]
    mode: String,
    /// Cost case: low or mid.
    #[arg(long)]
    cost_case: String,
    /// System-wide new storage power the plan must build, MW.
    #[arg(long)]
    forced_battery_mw: f64,
    /// Also write the assembled LP in MPS format to this path.
    #[arg(long)]
    export_mps: Option<PathBuf>,
    /// Verify and report a previously exported solution instead of solving.
    #[arg(long)]
    import_solution: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Directory holding the system CSV files.
    dir: PathBuf,
    /// Scenario manifest; a relative path is also tried inside <dir>.
    #[arg(long)]
    manifest: PathBuf,
    /// Worker threads for the run pool (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

/// A user-facing error carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_VALIDATION, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_SOLVER, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_IO, message: message.into() }
    }
}

// Unreadable files are I/O failures; files that read fine but say the
// wrong thing are validation failures.
fn load_failure(err: LoadError) -> Failure {
    match err {
        LoadError::Io { .. } => Failure::io(err.to_string()),
        _ => Failure::validation(err.to_string()),
    }
}

fn report_failure(err: ReportError) -> Failure {
    match err {
        ReportError::Io { .. } => Failure::io(err.to_string()),
        ReportError::Load(inner) => load_failure(inner),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version arrive here too; they are not failures.
            let code = if err.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { dir } => cmd_validate(&dir),
        Command::Costs { dir } => cmd_costs(&dir),
        Command::Solve(args) => cmd_solve(&args),
        Command::Matrix(args) => cmd_matrix(&args),
        Command::Report { runs_dir } => cmd_report(&runs_dir),
    }
}

/// Loads and rule-checks a system directory, printing every violation.
fn load_checked(dir: &Path) -> Result<SystemDescription, Failure> {
    let system = domain::load_system(dir).map_err(load_failure)?;
    let violations = domain::validate(&system);
    if violations.is_empty() {
        return Ok(system);
    }
    for v in &violations {
        eprintln!("{v}");
    }
    Err(Failure::validation(format!(
        "{} violation(s) in {}",
        violations.len(),
        dir.display()
    )))
}

fn cmd_validate(dir: &Path) -> Result<(), Failure> {
    let system = load_checked(dir)?;
    println!(
        "ok: {} zone(s), {} line(s), {} co-located resource(s), {} thermal resource(s), {} hour(s)",
        system.zones.len(),
        system.lines.len(),
        system.colo_resources.len(),
        system.thermal_resources.len(),
        system.horizon
    );
    Ok(())
}

fn cmd_costs(dir: &Path) -> Result<(), Failure> {
    let cases = costs::assemble_cases(dir).map_err(load_failure)?;
    for table in [&cases.low, &cases.mid] {
        let path = dir.join(costs::annualized_file(&table.case_name));
        costs::write_annualized_costs(table, &path)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        println!("case {}: wrote {}", table.case_name, path.display());
        println!(
            "  pv {:.1} + wind {:.1} + storage {:.1} + inverter {:.1} $/unit-yr, grid {:.4} $/MW-km-yr",
            table.pv.invest,
            table.wind.invest,
            table.storage_energy.invest,
            table.inverter.invest,
            table.grid_per_mw_km_yr
        );
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let mode = Mode::parse(&args.mode).ok_or_else(|| {
        Failure::validation(format!(
            "unknown mode {:?} (expected fixed, optimized, or colocated)",
            args.mode
        ))
    })?;
    let case = CostCase::parse(&args.cost_case).ok_or_else(|| {
        Failure::validation(format!("unknown cost case {:?} (expected low or mid)", args.cost_case))
    })?;
    if !(args.forced_battery_mw >= 0.0) {
        return Err(Failure::validation("forced battery power must be nonnegative"));
    }

    let system = load_checked(&args.dir)?;
    let table = costs::case_table_for(&args.dir, case.label()).map_err(load_failure)?;
    let prepared = scenario::prepare_run(&system, &table, mode, args.forced_battery_mw);
    let violations = domain::validate(&prepared);
    if let Some(first) = violations.first() {
        return Err(Failure::validation(format!(
            "scenario is invalid ({} violation(s), first: {first})",
            violations.len()
        )));
    }
    let model = assemble(&prepared).map_err(|e| Failure::validation(e.to_string()))?;

    if let Some(path) = &args.export_mps {
        model
            .lp
            .export_mps(path)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }

    let sol = match &args.import_solution {
        Some(path) => import_solution(&model.lp, path).map_err(|e| match e {
            SolutionIoError::Io { .. } => Failure::io(e.to_string()),
            _ => Failure::solver(e.to_string()),
        })?,
        None => model.lp.solve().map_err(|e| Failure::solver(e.to_string()))?,
    };
    if sol.status != Status::Optimal {
        return Err(Failure::solver(format!("solve ended {:?}", sol.status)));
    }

    let metrics = compute_run_metrics(&model, &sol, &prepared);
    let run_dir = args.dir.join("runs").join(format!(
        "{}_{}_{}",
        mode.label(),
        case.label(),
        args.forced_battery_mw
    ));
    let key = RunKey {
        run_id: 0,
        mode: mode.label().to_string(),
        cost_case: case.label().to_string(),
        forced_battery_mw: args.forced_battery_mw,
    };
    report::write_run_outputs(&run_dir, &key, &prepared, &model, &sol, &metrics)
        .map_err(report_failure)?;
    println!("optimal, objective {} $/yr, outputs in {}", sol.objective, run_dir.display());
    Ok(())
}

fn cmd_matrix(args: &MatrixArgs) -> Result<(), Failure> {
    let system = load_checked(&args.dir)?;
    let cases = costs::assemble_cases(&args.dir).map_err(load_failure)?;
    let manifest_path = resolve_manifest(&args.dir, &args.manifest);
    let manifest = scenario::load_manifest(&manifest_path).map_err(load_failure)?;

    let runs_dir = args.dir.join("runs");
    let outcomes = scenario::run_matrix(&system, &cases, &manifest, &runs_dir, args.workers);
    let mut failed = 0usize;
    for outcome in &outcomes {
        match &outcome.status {
            RunStatus::Optimal => {
                println!("run {:>4}: optimal, objective {}", outcome.run_id, outcome.objective.unwrap_or(f64::NAN));
            }
            RunStatus::Failed(message) => {
                failed += 1;
                println!("run {:>4}: FAILED: {message}", outcome.run_id);
            }
        }
    }
    println!(
        "{} of {} run(s) optimal, outputs in {}",
        outcomes.len() - failed,
        outcomes.len(),
        runs_dir.display()
    );
    if failed > 0 {
        return Err(Failure::solver(format!("{failed} run(s) failed")));
    }
    Ok(())
}

/// Uses the manifest path as given when it exists; otherwise a relative
/// path is retried inside the system directory.
fn resolve_manifest(dir: &Path, manifest: &Path) -> PathBuf {
    if manifest.exists() || !manifest.is_relative() {
        return manifest.to_path_buf();
    }
    let inside = dir.join(manifest);
    if inside.exists() {
        inside
    } else {
        manifest.to_path_buf()
    }
}

fn cmd_report(runs_dir: &Path) -> Result<(), Failure> {
    let rows = report::summarize_runs(runs_dir).map_err(report_failure)?;
    let path = runs_dir.join("summary.csv");
    report::write_summary(&rows, &path).map_err(report_failure)?;
    println!("{} run(s) summarized into {}", rows.len(), path.display());
    Ok(())
}
