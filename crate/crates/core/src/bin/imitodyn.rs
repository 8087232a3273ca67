use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imitodyn::cli::{run, Command, Overrides};
use imitodyn::ensemble::Execution;

#[derive(Parser)]
#[command(name = "imitodyn", version, about = "Stochastic imitation dynamics on potential population games")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the seeded ensemble and write one trajectory CSV per run.
    Simulate(Common),
    /// Integrate the mean-field ODE and locate its limit.
    Ode(Common),
    /// Find and classify the critical points of the potential.
    Landscape(Common),
    /// Absorption, time-near-ESS and exit-time statistics over an n-sweep.
    Metastability(Common),
    /// Deviation between stochastic paths and the ODE, per n.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Run the ensemble on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("IMITODYN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("IMITODYN_THREADS must be a positive integer, got `{raw}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())?;
    #[cfg(not(feature = "parallel"))]
    log::info!("built without the parallel feature; ignoring IMITODYN_THREADS={threads}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let (cmd, common) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Ode(c) => (Command::Ode, c),
        Cmd::Landscape(c) => (Command::Landscape, c),
        Cmd::Metastability(c) => (Command::Metastability, c),
        Cmd::Compare(c) => (Command::Compare, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        out: common.out,
        runs: common.runs,
    };
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cmd, &common.config, &overrides, exec) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code as u8)
        }
    }
}
