//! Experiment CLI: SNR sweeps over designed detection trees (`sweep`) and
//! the self-check suites (`validate`).
//!
//! Exit codes: 0 on success, 1 when a validation suite fails, 2 on
//! configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treedet::experiment::{render_csv, render_strategy_dump, run_sweep, ExperimentConfig};
use treedet::oracle::OracleBudget;
use treedet::validation::{run_validation, FaultInjection, ValidationConfig};
use treedet::Error;

#[derive(Parser)]
#[command(name = "treedet", version, about = "Design of rate-constrained detection trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Design the network across an SNR sweep and emit CSV results.
    Sweep(SweepArgs),
    /// Run the oracle-equivalence, monotone-descent and design-vs-optimum suites.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Builtin topology name (tree22, parallel4) or path to a topology JSON file.
    #[arg(long, default_value = "tree22")]
    topology: String,
    /// Leaf link rate in bits.
    #[arg(long, default_value_t = 1, conflicts_with = "rate")]
    rl: u32,
    /// Relay link rate in bits.
    #[arg(long, default_value_t = 1, conflicts_with = "rate")]
    rr: u32,
    /// Uniform rate for all links (shorthand for --rl R --rr R).
    #[arg(long)]
    rate: Option<u32>,
    /// Comma-separated SNR list in dB.
    #[arg(
        long,
        default_value = "-5,-4,-3,-2,-1,0,1,2,3,4,5",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    snr: Vec<f64>,
    /// Comma-separated hypothesis priors.
    #[arg(long, default_value = "0.5,0.5", value_delimiter = ',')]
    priors: Vec<f64>,
    /// Observation cells per leaf for the builtin topologies.
    #[arg(long, default_value_t = 400)]
    bins: usize,
    /// Tail boundary of the discretization grid, in noise standard deviations.
    #[arg(long, default_value_t = 10.0)]
    half_range: f64,
    /// Independent design restarts per SNR point (best result wins).
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the designed decision tables as JSON.
    #[arg(long)]
    dump_strategies: Option<PathBuf>,
    /// Hypothesis model JSON file (replaces the Gaussian generator).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Cap on joint strategy assignments the oracle enumerates.
    #[arg(long, default_value_t = 1 << 24)]
    max_total_tables: u128,
    /// Cap on the joint leaf-observation space.
    #[arg(long, default_value_t = 1 << 20)]
    max_joint_outcomes: u128,
    /// Random networks in the oracle-equivalence suite.
    #[arg(long, default_value_t = 100)]
    nets: usize,
    /// Seeded designs in the monotone-descent suite.
    #[arg(long, default_value_t = 50)]
    design_runs: usize,
    /// Random 2-leaf instances in the design-vs-optimum suite.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Deliberately corrupt chain matrices (negative control; must fail).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::new(&args.topology);
    cfg.rl = args.rate.unwrap_or(args.rl);
    cfg.rr = args.rate.unwrap_or(args.rr);
    cfg.snr_db = args.snr;
    cfg.priors = args.priors;
    cfg.bins = args.bins;
    cfg.half_range = args.half_range;
    cfg.restarts = args.restarts;
    cfg.seed = args.seed;
    if let Some(path) = &args.model {
        cfg.model_json = Some(std::fs::read_to_string(path)?);
    }

    let points = run_sweep(&cfg)?;
    let rows: Vec<_> = points.iter().map(|p| p.row.clone()).collect();
    let csv = render_csv(&rows);
    match &args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.dump_strategies {
        std::fs::write(path, render_strategy_dump(&cfg, &points))?;
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<bool, Error> {
    let cfg = ValidationConfig {
        seed: args.seed,
        equivalence_networks: args.nets,
        descent_runs: args.design_runs,
        pbp_instances: args.instances,
        inject: if args.inject_fault { FaultInjection::CorruptChain } else { FaultInjection::None },
    };
    let budget = OracleBudget {
        max_total_tables: args.max_total_tables,
        max_joint_outcomes: args.max_joint_outcomes,
    };
    let report = run_validation(&cfg, &budget)?;
    println!("{report}");
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Sweep(args) => sweep(args).map(|()| true),
        Command::Validate(args) => validate(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
