use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use netauction::mechanisms::MechanismKind;

mod bench;
mod gen;
mod input;
mod run;
mod verify;

#[derive(Parser)]
#[command(name = "netauction", version, about = "Run and verify auctions on social networks")]
struct Cli {
    /// Worker threads for verification sweeps (default: all cores)
    #[arg(long, global = true, env = "NETAUCTION_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mechanism on a scenario
    Run(run::RunArgs),
    /// Run all three mechanisms on a scenario's truthful profile
    Compare(run::CompareArgs),
    /// Check incentive, budget and revenue properties
    Verify(verify::VerifyArgs),
    /// Write a generated scenario
    Gen(gen::GenArgs),
    /// Time the dominator tree against the deletion oracle
    Bench(bench::BenchArgs),
    /// Graphviz export of a scenario's diffusion graph and dominator tree
    Dot(DotArgs),
}

#[derive(Args)]
struct DotArgs {
    /// Scenario file or built-in name (line5, example12, single)
    scenario: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Pretty,
    Json,
    Csv,
}

/// Outcome of a command that did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A checked property failed.
    Failed,
    /// A resource bound stopped the work early.
    Truncated,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::Failed => ExitCode::from(1),
            Status::Truncated => ExitCode::from(3),
        }
    }
}

pub fn parse_mechanism(s: &str) -> Result<MechanismKind, String> {
    s.parse().map_err(|e: netauction::MechanismError| e.to_string())
}

/// Writes to `out` or stdout.
pub fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dot(args: &DotArgs) -> anyhow::Result<Status> {
    let (scenario, _) = input::load(&args.scenario, netauction::value::MAX_DECIMALS)?;
    let profile = input::effective_profile(&scenario);
    let graph = netauction::build_diffusion_graph(&scenario.network, &profile)?;
    let analysis = netauction::dominator_analysis(&graph);
    let text = netauction::graph::to_dot(&graph, &analysis, |a| scenario.label(a));
    emit(args.out.as_ref(), &text)?;
    Ok(Status::Ok)
}

fn dispatch(cli: Cli) -> anyhow::Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::Run(a) => run::run(&a),
        Command::Compare(a) => run::compare(&a),
        Command::Verify(a) => verify::verify(&a),
        Command::Gen(a) => gen::gen(&a),
        Command::Bench(a) => bench::bench(&a),
        Command::Dot(a) => dot(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
