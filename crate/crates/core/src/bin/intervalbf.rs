//! Command-line front end for interval null hypothesis analysis.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use intervalbf::cli::{
    cmd_reproduce_table3, cmd_run, cmd_sweep_tau, cmd_ttest, BatchSampling, CliError, EtaSpec,
    ModelKind, RunOverrides, SweepEtaMode, TauSpec, DEFAULT_TAU_GRID,
};

/// Bayes factors and ROPE decisions for interval null hypotheses, estimated
/// from posterior MCMC draws.
#[derive(Parser)]
#[command(name = "intervalbf", version, about, after_help = EXIT_CODES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const EXIT_CODES_HELP: &str = "Exit codes:
  0  success
  2  input error (bad flags, malformed data or config file)
  3  sampler failure (initialization found no finite log-posterior)
  4  diagnostics failure (split R-hat above 1.05, or diagnostics impossible)
  5  internal error (e.g. cannot write output)";

#[derive(Subcommand)]
enum Command {
    /// Run one analysis and write a JSON report.
    ///
    /// Settings resolve flag > config file > default. `--model` and
    /// `--delta` are required (here or in the config file).
    Run(RunArgs),
    /// Rerun the published meta-analysis table (delta in {0.1, 0.2, 0.3},
    /// tau = 1.5 delta, even prior odds) and print published vs computed.
    ReproduceTable3 {
        /// Also write the rows as JSON to this path.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Sweep the alternative-prior scale tau on the two-sample model and
    /// emit plot-ready CSV.
    SweepTau {
        /// Null-region half width.
        #[arg(long)]
        delta: f64,
        /// Comma-separated tau grid; defaults to the built-in grid.
        #[arg(long, value_delimiter = ',')]
        tau_grid: Option<Vec<f64>>,
        /// Which prior weight(s) to run: half, continuity or both.
        #[arg(long, default_value = "both")]
        eta1_mode: SweepEtaMode,
        /// Two-sample CSV (group,value); embedded fixture when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Classical equal-variance two-sample t-test on a group,value CSV.
    Ttest {
        /// Path to the data file.
        data: PathBuf,
    },
    /// Print the JSON schema that analysis reports validate against.
    Schema,
}

#[derive(Args)]
struct RunArgs {
    /// Model: two_sample, meta or toy.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Data CSV; the embedded fixture is used when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Flat key=value config file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Null-region half width.
    #[arg(long)]
    delta: Option<f64>,
    /// Alternative-prior scale: a number or "1.5delta".
    #[arg(long)]
    tau: Option<TauSpec>,
    /// Prior weight of the alternative: a number, "half" or "continuity".
    #[arg(long)]
    eta1: Option<EtaSpec>,
    /// HDI / declaration level parameter.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Post-warmup draws per chain.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path (default report.json).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Observation for the toy model.
    #[arg(long)]
    y_obs: Option<f64>,
    /// Cap on concurrently running chains (0 = no cap).
    #[arg(long)]
    threads: Option<usize>,
    /// Also export all post-warmup draws as CSV.
    #[arg(long)]
    draws_out: Option<PathBuf>,
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 10_000)]
    warmup: usize,
    /// Post-warmup draws per chain.
    #[arg(long, default_value_t = 20_000)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Cap on concurrently running chains (0 = no cap).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl From<SamplingArgs> for BatchSampling {
    fn from(a: SamplingArgs) -> Self {
        BatchSampling {
            chains: a.chains,
            warmup: a.warmup,
            draws: a.draws,
            seed: a.seed,
            threads: a.threads,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let flags = RunOverrides {
                model: args.model,
                data_path: args.data,
                delta: args.delta,
                tau: args.tau,
                eta1: args.eta1,
                alpha: args.alpha,
                chains: args.chains,
                warmup: args.warmup,
                draws: args.draws,
                seed: args.seed,
                output_path: args.output,
                y_obs: args.y_obs,
                threads: args.threads,
                draws_out: args.draws_out,
            };
            let from_file = match &args.config {
                Some(path) => RunOverrides::from_config_file(path)?,
                None => RunOverrides::default(),
            };
            let rc = flags.over(from_file).into_config()?;
            cmd_run(&rc)?;
            Ok(())
        }
        Command::ReproduceTable3 { output, sampling } => {
            cmd_reproduce_table3(&sampling.into(), output.as_deref())?;
            Ok(())
        }
        Command::SweepTau {
            delta,
            tau_grid,
            eta1_mode,
            data,
            output,
            sampling,
        } => {
            let grid = tau_grid.unwrap_or_else(|| DEFAULT_TAU_GRID.to_vec());
            cmd_sweep_tau(
                delta,
                &grid,
                eta1_mode,
                data.as_deref(),
                &sampling.into(),
                output.as_deref(),
            )?;
            Ok(())
        }
        Command::Ttest { data } => {
            cmd_ttest(&data)?;
            Ok(())
        }
        Command::Schema => {
            println!("{}", intervalbf::report::SCHEMA_JSON.trim_end());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
