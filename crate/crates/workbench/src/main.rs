use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rpl_core::lang::{preprocess, Profile, Tool};
use rpl_core::parser;
use rpl_core::peak::DEFAULT_BUDGET;
use rpl_workbench::presets;
use rpl_workbench::runner::{execute, render_diagnostics, RunError, RunRequest};
use rpl_workbench::service::{self, AppState};
use rpl_workbench::store::Store;

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "rpl", version, about = "Simulate and analyse RPL workflow models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and report diagnostics.
    Check { file: PathBuf },
    /// Run timed simulations and aggregate time, cost and deadline violations.
    Simulate(ToolArgs),
    /// Peak simultaneous resource allocation: observed, exact and static bound.
    Peak(ToolArgs),
    /// Closed-form execution time bounds in EFFICIENCY and CONC_CASES.
    Time(ToolArgs),
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "RPL_STORE", default_value = "rpl-runs.jsonl")]
        store: PathBuf,
        #[arg(long, env = "RPL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Args)]
struct ToolArgs {
    file: PathBuf,
    /// Resource efficiency in percent ($EFFICIENCY).
    #[arg(long)]
    efficiency: Option<u32>,
    /// Share of each resource group kept in the pool, in percent ($AVAILABILITY).
    #[arg(long)]
    availability: Option<u32>,
    /// Concurrent cases ($CONC_CASES).
    #[arg(long)]
    cases: Option<u32>,
    /// Number of simulations.
    #[arg(long)]
    sims: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
    /// Append the run to this history journal.
    #[arg(long)]
    store: Option<PathBuf>,
    /// State budget for the exhaustive peak search.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

impl ToolArgs {
    fn profile(&self, tool: Tool) -> Profile {
        let base = presets::default_for(tool);
        Profile {
            tool,
            efficiency_pct: self.efficiency.unwrap_or(base.efficiency_pct),
            availability_pct: self.availability.unwrap_or(base.availability_pct),
            conc_cases: self.cases.unwrap_or(base.conc_cases),
            num_sims: self.sims.unwrap_or(base.num_sims),
            seed: self.seed.unwrap_or(base.seed),
        }
    }
}

fn read(file: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))
}

fn file_name(file: &Path) -> String {
    file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn check(file: &PathBuf) -> anyhow::Result<ExitCode> {
    let source = read(file)?;
    let text = match preprocess(&source, &Profile::default()) {
        Ok(t) => t,
        Err(e) => {
            println!("{e}");
            return Ok(ExitCode::from(EXIT_DIAGNOSTICS));
        }
    };
    let out = parser::parse_with_diagnostics(&text);
    for d in &out.diagnostics {
        println!("{}:{d}", file.display());
    }
    if out.has_errors() {
        return Ok(ExitCode::from(EXIT_DIAGNOSTICS));
    }
    println!("OK");
    Ok(ExitCode::SUCCESS)
}

fn run_tool(tool: Tool, args: &ToolArgs) -> anyhow::Result<ExitCode> {
    let source = read(&args.file)?;
    let name = file_name(&args.file);
    let req = RunRequest {
        source,
        file_name: name.clone(),
        profile: args.profile(tool),
        budget: args.budget,
    };
    let mut outcome = match execute(&req) {
        Ok(o) => o,
        Err(RunError::Diagnostics(d)) => {
            println!("{}", render_diagnostics(&d));
            return Ok(ExitCode::from(EXIT_DIAGNOSTICS));
        }
        Err(e @ RunError::InvalidProfile(_)) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.store {
        let mut store = Store::open(path)?;
        store.record(&mut outcome, &name)?;
    }
    let text = if args.json {
        outcome.output.to_json_pretty() + "\n"
    } else {
        outcome.output.to_text()
    };
    // A closed pipe (`rpl ... | head`) is not an error.
    let _ = std::io::stdout().write_all(text.as_bytes());
    Ok(ExitCode::SUCCESS)
}

fn serve(store: PathBuf, addr: SocketAddr) -> anyhow::Result<ExitCode> {
    let store = Store::open(&store)?;
    tracing::info!(path = %store.path().display(), runs = store.len(), "opened store");
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(addr, AppState::new(store)))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Check { file } => check(file),
        Command::Simulate(a) => run_tool(Tool::Simulate, a),
        Command::Peak(a) => run_tool(Tool::Peak, a),
        Command::Time(a) => run_tool(Tool::Time, a),
        Command::Serve { store, port, host } => serve(store.clone(), SocketAddr::new(*host, *port)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
