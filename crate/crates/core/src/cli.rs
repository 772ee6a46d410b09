//! Command-line surface: `validate`, `run`, `resume`, `report`, `simulate`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{load_config, Config};
use crate::engine::{run_network, NetworkRun, NullSink, RunControl};
use crate::report::RunReport;
use crate::session::{default_run_id, load_report, resume_run, start_run, SessionError};
use crate::store::RunStore;

#[derive(Debug, Parser)]
#[command(
    name = "evalnet",
    version,
    about = "Continual evaluation networks for language models"
)]
pub struct Cli {
    /// Directory holding runs; defaults to the config's `store.dir`.
    #[arg(long, global = true)]
    pub runs: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config file and list every problem.
    Validate { config: PathBuf },
    /// Start a new run.
    Run {
        config: PathBuf,
        #[arg(long)]
        run_id: Option<String>,
        /// Stop after this many rounds; the run can be resumed.
        #[arg(long)]
        max_rounds: Option<u64>,
    },
    /// Continue a stored run.
    Resume {
        run_id: String,
        /// Must match the config the run was created with.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_rounds: Option<u64>,
    },
    /// Print the report of a stored run.
    Report {
        run_id: String,
        /// Also write CSV files here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run with scripted backends only, nothing persisted.
    Simulate { config: PathBuf },
}

fn control(max_rounds: Option<u64>) -> RunControl {
    max_rounds.map_or_else(RunControl::new, RunControl::halt_after_rounds)
}

fn runs_dir(cli: &Cli, config: Option<&Config>) -> PathBuf {
    cli.runs
        .clone()
        .or_else(|| config.map(|c| c.store.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn print_report(out: &mut dyn Write, report: &RunReport, json: bool) -> std::io::Result<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string(report).expect("report serializes"))
    } else {
        write!(out, "{}", report.render_table())
    }
}

/// One categorized line per failed stream; exit 1 if there were any.
fn finish(out: &mut dyn Write, err: &mut dyn Write, run: &NetworkRun, json: bool) -> std::io::Result<i32> {
    print_report(out, &run.report, json)?;
    if run.interrupted {
        writeln!(err, "interrupted: {} resumable", run.report.run_id)?;
    }
    for f in &run.failures {
        writeln!(err, "error: stream {}: failed: {}", f.stream_id, f.reason)?;
    }
    Ok(if run.failures.is_empty() { 0 } else { 1 })
}

fn session_code(e: &SessionError) -> i32 {
    match e {
        SessionError::Config(_) => 2,
        _ => 1,
    }
}

/// Runs the CLI and returns the exit status.
pub fn run_cli(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            session_code(&e)
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, SessionError> {
    let io = |e: std::io::Error| {
        SessionError::Store(crate::store::StoreError::Io {
            path: "<stdout>".into(),
            source: e,
        })
    };
    match &cli.command {
        Command::Validate { config } => {
            let c = load_config(config)?;
            let net = c.network()?;
            if cli.json {
                writeln!(
                    out,
                    "{}",
                    serde_json::json!({
                        "valid": true,
                        "config_hash": c.hash(),
                        "topology": net.topology().to_string(),
                        "routes": net.routes().len(),
                    })
                )
                .map_err(io)?;
            } else {
                writeln!(
                    out,
                    "valid: {} topology, {} nodes, {} routes, config {}",
                    net.topology(),
                    net.nodes().len(),
                    net.routes().len(),
                    &c.hash()[..12]
                )
                .map_err(io)?;
            }
            Ok(0)
        }
        Command::Run {
            config,
            run_id,
            max_rounds,
        } => {
            let c = load_config(config)?;
            let store = RunStore::new(runs_dir(cli, Some(&c)));
            let id = run_id.clone().unwrap_or_else(default_run_id);
            let s = start_run(&store, &c, &id, false, &control(*max_rounds))?;
            finish(out, err, &s.run, cli.json).map_err(io)
        }
        Command::Resume {
            run_id,
            config,
            max_rounds,
        } => {
            let given = config.as_deref().map(load_config).transpose()?;
            let store = RunStore::new(runs_dir(cli, given.as_ref()));
            let s = resume_run(&store, run_id, given.as_ref(), false, &control(*max_rounds))?;
            finish(out, err, &s.run, cli.json).map_err(io)
        }
        Command::Report { run_id, csv } => {
            let store = RunStore::new(runs_dir(cli, None));
            let report = load_report(&store, run_id)?;
            if let Some(dir) = csv {
                report.write_to(dir).map_err(io)?;
            }
            print_report(out, &report, cli.json).map_err(io)?;
            Ok(0)
        }
        Command::Simulate { config } => {
            let c = load_config(config)?;
            let engine = c.engine(true)?;
            let mut net = c.network()?;
            let run = run_network(
                &engine,
                &mut net,
                "simulate",
                Default::default(),
                &NullSink,
                &RunControl::new(),
            )?;
            finish(out, err, &run, cli.json).map_err(io)
        }
    }
}
