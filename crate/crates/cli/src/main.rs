use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use pcnsim::congestion::SchedulingPolicy;
use pcnsim::routing::PathKind;
use pcnsim_cli::{
    cmd_ablate, cmd_deadlock_demo, cmd_export_milp, cmd_place, cmd_simulate, load_config, AblationGrid,
};

/// Payment channel network experiments: hub placement, routing and ablations.
///
/// Log verbosity follows RUST_LOG.
#[derive(Parser)]
#[command(name = "pcnsim", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override such as `routing.k=3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Place hubs and report costs.
    Place {
        /// ω values for a hub-count sweep, comma separated.
        #[arg(long, value_delimiter = ',')]
        omega: Vec<f64>,
    },
    /// Run one simulation.
    Simulate,
    /// Routing ablation over path kind, path count and scheduler.
    Ablate {
        #[arg(long, value_delimiter = ',', default_values = ["edw", "eds", "ksp"])]
        paths: Vec<PathKind>,
        #[arg(long, value_delimiter = ',', default_values = ["1", "3", "5"])]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values = ["fifo", "lifo"])]
        schedulers: Vec<SchedulingPolicy>,
        #[arg(long, value_delimiter = ',', default_values = ["1", "2", "3"])]
        seeds: Vec<u64>,
    },
    /// Three-node deadlock scenario, baseline against price-based routing.
    DeadlockDemo,
    /// Write the placement MILP in LP format.
    ExportMilp,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    let c = &cli.common;
    let cfg = load_config(c.config.as_deref(), c.seed, &c.sets)?;
    let manifest = match cli.command {
        Command::Place { omega } => cmd_place(&cfg, &omega, &c.out)?,
        Command::Simulate => {
            let (r, m) = cmd_simulate(&cfg, &c.out)?;
            println!("tsr = {:.6}", r.metrics.tsr);
            m
        }
        Command::Ablate { paths, k, schedulers, seeds } => {
            let grid = AblationGrid { path_kinds: paths, ks: k, schedulers, seeds };
            cmd_ablate(&cfg, &grid, &c.out)?.1
        }
        Command::DeadlockDemo => {
            let (b, p, m) = cmd_deadlock_demo(&cfg, &c.out)?;
            println!("baseline tsr = {:.6}, deadlocks = {}", b.metrics.tsr, b.metrics.deadlock_events);
            println!("price tsr = {:.6}, deadlocks = {}", p.metrics.tsr, p.metrics.deadlock_events);
            m
        }
        Command::ExportMilp => cmd_export_milp(&cfg, &c.out)?,
    };
    log::info!("wrote {}", manifest.display());
    Ok(())
}
