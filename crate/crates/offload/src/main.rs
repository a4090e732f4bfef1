use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hybrid_offload::experiment::{execute, load_spec, SUMMARY_FILE};
use hybrid_offload::instance::{AssignmentFile, InstanceFile};
use hybrid_offload::{read_input, OffloadError};
use hybrid_offload_core::{build_p1, export_mps, optimize, verify_assignment, OptimizeOptions, P1Options, ValidatedInstance};

#[derive(Parser)]
#[command(name = "hybrid-offload", version, about = "Hybrid vertical/horizontal task offloading experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    /// Built-in branch and bound; prints the assignment as JSON.
    Builtin,
    /// Prints the linearized program as fixed MPS for an external solver.
    MpsExport,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec, or replay a manifest.
    Run {
        spec: PathBuf,
        /// Output directory, overriding the one in the experiment file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance.
    Assign {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "builtin")]
        solver: Solver,
        #[arg(long, default_value_t = 5)]
        n_grid: usize,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check an assignment against the nonlinear constraints.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Write the linearized program of an instance as fixed MPS.
    ExportMps {
        #[arg(long)]
        instance: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        n_grid: usize,
    },
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, OffloadError> {
    serde_json::from_str(&read_input(path)?).map_err(|e| OffloadError::Validation(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<ValidatedInstance, OffloadError> {
    parse_json::<InstanceFile>(path)?.to_instance()
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), OffloadError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|source| OffloadError::Io { path: p.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn options(n_grid: usize, node_limit: Option<usize>) -> OptimizeOptions {
    let mut o = OptimizeOptions { p1: P1Options { grid_size: n_grid, ..Default::default() }, ..Default::default() };
    if let Some(limit) = node_limit {
        o.milp.node_limit = limit;
    }
    o
}

fn mps_text(inst: &ValidatedInstance, n_grid: usize) -> Result<String, OffloadError> {
    let (problem, _) =
        build_p1(inst, &options(n_grid, None).p1).map_err(|e| OffloadError::Validation(e.to_string()))?;
    Ok(export_mps(&problem))
}

fn run(cli: Cli) -> Result<(), OffloadError> {
    match cli.command {
        Command::Run { spec, out } => {
            let (spec, base) = load_spec(&spec)?;
            let outcome = execute(&spec, &base, out.as_deref())?;
            let dir = out.unwrap_or_else(|| outcome.manifest.spec.output_dir.clone());
            eprintln!("{} runs, summary in {}", outcome.manifest.runs.len(), dir.join(SUMMARY_FILE).display());
            match outcome.failed_runs() {
                0 => Ok(()),
                n => Err(OffloadError::Run(format!("{n} run(s) failed; see the manifest"))),
            }
        }
        Command::Assign { instance, solver, n_grid, node_limit, output } => {
            let inst = load_instance(&instance)?;
            match solver {
                Solver::MpsExport => emit(output.as_deref(), &mps_text(&inst, n_grid)?),
                Solver::Builtin => {
                    if n_grid < 2 {
                        return Err(OffloadError::Validation(format!("--n-grid must be at least 2, got {n_grid}")));
                    }
                    let solved =
                        optimize(&inst, &options(n_grid, node_limit)).map_err(|e| OffloadError::Run(e.to_string()))?;
                    let file = AssignmentFile::new(&inst, &solved.assignment, Some(format!("{:?}", solved.status)));
                    eprintln!("objective {} tasks, {} nodes explored", solved.objective, solved.nodes_explored);
                    emit(output.as_deref(), &(serde_json::to_string_pretty(&file).expect("serializes") + "\n"))
                }
            }
        }
        Command::Verify { instance, assignment } => {
            let inst = load_instance(&instance)?;
            let a = parse_json::<AssignmentFile>(&assignment)?.to_assignment(&inst)?;
            let report = verify_assignment(&inst, &a);
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(OffloadError::Validation("assignment violates constraints".into()))
            }
        }
        Command::ExportMps { instance, output, n_grid } => {
            let inst = load_instance(&instance)?;
            emit(Some(&output), &mps_text(&inst, n_grid)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
