mod commands;
mod output;
mod scene;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fibra::bundles::BundleError;
use fibra::cylinder::CylinderError;
use fibra::reduction::ReductionError;
use serde_json::json;
use thiserror::Error;

use commands::{Report, Settings};

const DEFAULT_STEPS: usize = 10_000;
const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("scene does not match the schema: {0}")]
    Schema(String),
    #[error("{0}")]
    Reference(String),
    #[error("path '{name}': {message}")]
    Path { name: String, message: String },
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Cylinder(#[from] CylinderError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
            CliError::Schema(_) => "schema",
            CliError::Reference(_) => "reference",
            CliError::Path { .. } => "path",
            CliError::Bundle(_) => "bundle",
            CliError::Cylinder(CylinderError::OpenPathInInvarianceTest(_)) => "open_path_in_invariance_test",
            CliError::Cylinder(_) => "cylinder",
            CliError::Reduction(_) => "reduction",
        }
    }
}

/// Gauge geometry computations on scene documents.
#[derive(Debug, Parser)]
#[command(name = "fibra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scene document (JSON).
    #[arg(long, global = true)]
    scene: Option<PathBuf>,
    /// Integration steps per transport [default: scene value, else 10000].
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Pass/fail tolerance [default: scene value, else 1e-6].
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for random gauges [default: scene value, else 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Product table of the Clifford basis, checked against blade arithmetic.
    CliffordTable,
    /// Parallel transporter along a path.
    Transport {
        #[arg(long)]
        path: String,
        #[arg(long)]
        conn: String,
    },
    /// Holonomy of a closed path.
    Holonomy {
        #[arg(long)]
        path: String,
        #[arg(long)]
        conn: String,
    },
    /// Relative element T_ref⁻¹·T of two connections along a path; the
    /// reference defaults to the canonical flat connection.
    Compare {
        #[arg(long)]
        path: String,
        #[arg(long)]
        conn: String,
        #[arg(long = "ref")]
        reference: Option<String>,
    },
    /// Reparametrization, inverse and composition laws of a connection or table.
    CheckConsistency {
        #[arg(long)]
        conn: String,
        /// Comma-separated path names [default: every scene path].
        #[arg(long, value_delimiter = ',')]
        paths: Vec<String>,
    },
    /// Winding number of the equator transition.
    Winding,
    /// Global-section test of the scene bundle.
    Trivial {
        /// Include the full null-homotopy.
        #[arg(long)]
        full: bool,
    },
    /// Structure-group reduction of a clutching loop.
    Reduce {
        #[arg(long = "loop")]
        loop_name: String,
        /// Include the section and the reduced transition samples.
        #[arg(long)]
        full: bool,
    },
    /// Value of a cylinder function.
    Cylinder {
        #[arg(long)]
        cylinder: String,
        #[arg(long)]
        conn: String,
    },
    /// Largest change of a cylinder function under random gauges.
    GaugeTest {
        #[arg(long)]
        cylinder: String,
        #[arg(long)]
        conn: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Report the change under the single gauge drawn from the seed,
        /// without requiring a trivialization-independent expression.
        #[arg(long)]
        witness: bool,
    },
}

fn load_scene(path: Option<&PathBuf>) -> Result<scene::Scene, CliError> {
    let path = path.ok_or_else(|| CliError::Usage("this command needs --scene".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    scene::parse(&text)?.resolve()
}

fn settings(cli: &Cli, scene: Option<&scene::Scene>) -> Result<Settings, CliError> {
    let steps = cli.steps.or(scene.and_then(|s| s.steps)).unwrap_or(DEFAULT_STEPS);
    let tol = cli.tol.or(scene.and_then(|s| s.tolerance)).unwrap_or(DEFAULT_TOL);
    let seed = cli.seed.or(scene.and_then(|s| s.seed)).unwrap_or(0);
    if steps == 0 {
        return Err(CliError::Usage("--steps must be positive".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Usage("--tol must be a positive number".into()));
    }
    Ok(Settings { steps, tol, seed })
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    if let Command::CliffordTable = cli.command {
        return commands::clifford(settings(cli, None)?);
    }
    let scene = load_scene(cli.scene.as_ref())?;
    let s = settings(cli, Some(&scene))?;
    match &cli.command {
        Command::CliffordTable => unreachable!(),
        Command::Transport { path, conn } => commands::transport_cmd(&scene, s, path, conn),
        Command::Holonomy { path, conn } => commands::holonomy(&scene, s, path, conn),
        Command::Compare { path, conn, reference } => commands::compare(&scene, s, path, conn, reference.as_deref()),
        Command::CheckConsistency { conn, paths } => commands::check_consistency(&scene, s, conn, paths),
        Command::Winding => commands::winding(&scene),
        Command::Trivial { full } => commands::trivial(&scene, s, *full),
        Command::Reduce { loop_name, full } => commands::reduce(&scene, s, loop_name, *full),
        Command::Cylinder { cylinder, conn } => commands::cylinder(&scene, s, cylinder, conn),
        Command::GaugeTest { cylinder, conn, trials, witness } => {
            commands::gauge_test(&scene, s, cylinder, conn, *trials, *witness)
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn error_record(e: &CliError) -> String {
    output::render(&json!({ "error": { "kind": e.kind(), "message": e.to_string() } }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            print!("{}", error_record(&CliError::Usage(first.to_string())));
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    let result = run(&cli).and_then(|report| {
        emit(&output::render(&report.doc), cli.out.as_ref())?;
        Ok(report.pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            print!("{}", error_record(&e));
            ExitCode::from(2)
        }
    }
}
