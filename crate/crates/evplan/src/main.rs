use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evplan::pipeline::PipelineConfig;
use evplan::{execute, exit_code, Command, EXIT_LIMIT_REACHED, EXIT_OK};

#[derive(Parser)]
#[command(name = "evplan", version, about = "Plan fixed and mobile EV charging stations on a road network")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate candidate endpoints and the coverage matrix
    Candidates(Opts),
    /// Derive factor, zone and O-D equity weights
    Weights(Opts),
    /// Solve the fixed-station placement model
    Plan(Opts),
    /// Solve placement and the mobile-station schedule
    Schedule(Opts),
    /// Run every stage and write all reports and figures
    Pipeline(Opts),
    /// Draw the network, plans and unit positions as SVG
    Render(Opts),
    /// Write the optimization models in LP format
    ExportLp(Opts),
}

#[derive(Args)]
struct Opts {
    /// Pipeline configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rescale scenario probabilities to sum to one
    #[arg(long)]
    normalize_probs: bool,
    /// Branch-and-bound node limit per solve
    #[arg(long)]
    node_limit: Option<u64>,
    /// Wall-clock limit per solve, in seconds
    #[arg(long)]
    time_limit_s: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, opts) = match cli.command {
        Cmd::Candidates(o) => (Command::Candidates, o),
        Cmd::Weights(o) => (Command::Weights, o),
        Cmd::Plan(o) => (Command::Plan, o),
        Cmd::Schedule(o) => (Command::Schedule, o),
        Cmd::Pipeline(o) => (Command::Pipeline, o),
        Cmd::Render(o) => (Command::Render, o),
        Cmd::ExportLp(o) => (Command::ExportLp, o),
    };
    let code = match run(cmd, opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn run(cmd: Command, opts: Opts) -> anyhow::Result<i32> {
    let mut cfg = PipelineConfig::load(&opts.config)?;
    if let Some(out) = opts.out {
        cfg.out = out;
    }
    cfg.seed = opts.seed.or(cfg.seed);
    cfg.normalize_probs |= opts.normalize_probs;
    cfg.node_limit = opts.node_limit.or(cfg.node_limit);
    cfg.time_limit_s = opts.time_limit_s.or(cfg.time_limit_s);
    let outcome = execute(cmd, &cfg)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if outcome.limit_reached {
        eprintln!("warning: a solve stopped at its limit; the best solution found was written");
        Ok(EXIT_LIMIT_REACHED)
    } else {
        Ok(EXIT_OK)
    }
}
