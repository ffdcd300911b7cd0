//! Thin command-line front end: every subcommand maps one-to-one onto a
//! library operation family; no computation lives here.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plaplace::error::Error;
use plaplace::scenario::{self, Format, RadialMode, Task};

#[derive(Parser)]
#[command(
    name = "plaplace",
    version,
    about = "Numerical toolkit for p-Laplacian equations with singular potentials: \
             exponents, radial and planar solves, dilation limits, capacity and flux identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file to execute.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Tolerance overrides, name=value (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tols: Vec<String>,
    /// Grid-size override (radial interval count or planar n_r).
    #[arg(long)]
    grid: Option<usize>,
    /// Seed override for scenarios with randomized inputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact format for profile exports.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(format!("format must be csv or json, got '{other}'")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Hardy-type power exponents over a coupling grid.
    Exponents(RunArgs),
    /// Radial initial-value or Dirichlet solve.
    SolveRadial(RunArgs),
    /// Asymptotic classification of a radial solution near 0 or infinity.
    Classify(RunArgs),
    /// Minimal-growth solution by annulus exhaustion.
    MinimalGrowth(RunArgs),
    /// Dilation limits and weak Fuchsian certification.
    Dilate(RunArgs),
    /// L^q integrability criterion for weak Fuchsian singularities.
    LqCheck(RunArgs),
    /// Energy of a tapered power profile (optionally scanning for
    /// negative-energy profiles above the Hardy constant).
    Energy(RunArgs),
    /// Picone Lagrangian decay of cutoff separable solutions on sectors.
    Picone(RunArgs),
    /// Inversion transform of a p-harmonic solution and its weighted residual.
    Kelvin(RunArgs),
    /// Weighted condenser capacity: closed form vs convex minimization.
    Capacity(RunArgs),
    /// Cutoff-independent flux constants of radial power solutions.
    Flux(RunArgs),
    /// Planar Dirichlet solve on an annulus or sector.
    #[command(name = "solve-2d")]
    Solve2d(RunArgs),
    /// Sphere-wise Harnack quotient profile of two planar solutions.
    Harnack(RunArgs),
    /// Regular-point probe: generalized limit of a quotient of solutions.
    Probe(RunArgs),
    /// Separable plane-sector exponents by angular shooting.
    Sector(RunArgs),
    /// Run the full acceptance suite.
    Verify {
        /// Output directory for determinism artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Tolerance overrides, name=value (repeatable).
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tols: Vec<String>,
    },
    /// Emit plot-ready data from a run record.
    Emit {
        /// record.json produced by a previous run.
        #[arg(long)]
        record: PathBuf,
        /// Output directory for plot files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_tols(pairs: &[String]) -> Result<BTreeMap<String, f64>, Error> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--tol expects name=value, got '{pair}'")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Usage(format!("--tol {name}: bad value '{value}'")))?;
        map.insert(name.trim().to_string(), v);
    }
    Ok(map)
}

/// Apply command-line overrides onto a parsed scenario.
fn apply_overrides(sc: &mut scenario::Scenario, args: &RunArgs) -> Result<(), Error> {
    for (k, v) in parse_tols(&args.tols)? {
        sc.tols.insert(k, v);
    }
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    if let Some(format) = args.format {
        sc.format = format;
    }
    if let Some(n) = args.grid {
        match &mut sc.task {
            Task::SolveRadial { mode, .. } | Task::Classify { mode, .. } => {
                if let RadialMode::Bvp { n: grid_n, .. } = mode {
                    *grid_n = n;
                }
            }
            Task::Capacity { n: grid_n, .. } => *grid_n = n,
            Task::Solve2d { n_r, .. }
            | Task::Harnack { n_r, .. }
            | Task::Probe { n_r, .. }
            | Task::Picone { n_r, .. }
            | Task::Sector { n_r, .. } => *n_r = n,
            _ => {}
        }
    }
    Ok(())
}

fn run_task(kind: &'static str, args: &RunArgs) -> Result<(), Error> {
    let mut sc = scenario::load_scenario(&args.scenario)?;
    if sc.task.kind() != kind {
        return Err(Error::Usage(format!(
            "subcommand '{kind}' got a scenario with task '{}'",
            sc.task.kind()
        )));
    }
    apply_overrides(&mut sc, args)?;
    let record = scenario::run(&sc, &args.out)?;
    println!(
        "{}: {} checks, {} passed ({:.2}s); artifacts in {}",
        record.scenario_name,
        record.checks.len(),
        record.checks.iter().filter(|c| c.pass).count(),
        record.wall_time_s,
        args.out.join(&record.scenario_name).display()
    );
    for check in &record.checks {
        println!(
            "  [{}] {}: target {}, measured {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.target,
            check.measured
        );
    }
    if record.all_pass() {
        Ok(())
    } else {
        Err(Error::CheckFailure(format!(
            "{} of {} embedded checks failed",
            record.checks.iter().filter(|c| !c.pass).count(),
            record.checks.len()
        )))
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Exponents(a) => run_task("exponents", a),
        Command::SolveRadial(a) => run_task("solve-radial", a),
        Command::Classify(a) => run_task("classify", a),
        Command::MinimalGrowth(a) => run_task("minimal-growth", a),
        Command::Dilate(a) => run_task("dilate", a),
        Command::LqCheck(a) => run_task("lq-check", a),
        Command::Energy(a) => run_task("energy", a),
        Command::Picone(a) => run_task("picone", a),
        Command::Kelvin(a) => run_task("kelvin", a),
        Command::Capacity(a) => run_task("capacity", a),
        Command::Flux(a) => run_task("flux", a),
        Command::Solve2d(a) => run_task("solve-2d", a),
        Command::Harnack(a) => run_task("harnack", a),
        Command::Probe(a) => run_task("probe", a),
        Command::Sector(a) => run_task("sector", a),
        Command::Verify { out, tols } => {
            let tols = parse_tols(tols)?;
            let summary = plaplace::acceptance::verify_suite(out, &tols)?;
            if summary.all_pass {
                Ok(())
            } else {
                Err(Error::CheckFailure("acceptance criteria failed".into()))
            }
        }
        Command::Emit { record, out } => {
            let text = std::fs::read_to_string(record)?;
            let record: scenario::RunRecord = serde_json::from_str(&text)?;
            let files = scenario::emit_plotdata(&record, out)?;
            for f in files {
                println!("emitted {}", out.join(f).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
