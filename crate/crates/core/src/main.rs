use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use irs_gbsm::config::ScenarioConfig;
use irs_gbsm::experiment::{run_experiment, Subcommand};
use irs_gbsm::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "irs-gbsm", version, about = "IRS-assisted MIMO channel model: simulation and statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Dump end-to-end channels and sub-channel impulse responses.
    Simulate(RunArgs),
    /// Time autocorrelation (simulated and analytical).
    Acf(RunArgs),
    /// Spatial cross-correlation along one array.
    Ccf(RunArgs),
    /// Local Doppler spread, optionally swept over USER speed.
    Doppler(RunArgs),
    /// RMS delay-spread CDF per scatterer spread.
    DsCdf(RunArgs),
    /// Cluster visibility over an array.
    ClusterEvolve(RunArgs),
    /// Path loss and received power through the IRS.
    LinkBudget(RunArgs),
    /// Print the configuration JSON schema.
    Schema,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; machine parallelism by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(sub: Subcommand, args: &RunArgs) -> Result<(), Error> {
    let mut cfg = ScenarioConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let records = run_experiment(sub, &cfg, &args.out, args.threads)?;
    for r in records {
        println!("{}  {}", r.sha256, args.out.join(&r.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IRS_GBSM_LOG", "warn")).init();
    let cli = Cli::parse();
    let (sub, args) = match &cli.command {
        Command::Simulate(a) => (Subcommand::Simulate, a),
        Command::Acf(a) => (Subcommand::Acf, a),
        Command::Ccf(a) => (Subcommand::Ccf, a),
        Command::Doppler(a) => (Subcommand::Doppler, a),
        Command::DsCdf(a) => (Subcommand::DsCdf, a),
        Command::ClusterEvolve(a) => (Subcommand::ClusterEvolve, a),
        Command::LinkBudget(a) => (Subcommand::LinkBudget, a),
        Command::Schema => {
            return match ScenarioConfig::schema() {
                Ok(s) => {
                    println!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            };
        }
    };
    match run(sub, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
