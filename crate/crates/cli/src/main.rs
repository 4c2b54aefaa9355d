use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use extbandit::harness::Execution;
use extbandit_cli::{
    curves_command, exit_code, format_rows, run_command, sweep_command, validate_command,
    RegimeChoice, RunOptions,
};

/// Monte Carlo experiments for bandits with positive externalities.
#[derive(Debug, Parser)]
#[command(name = "bandit", version, about)]
struct Cli {
    /// Worker threads (0 or unset: hardware parallelism).
    #[arg(long, global = true, env = "BANDIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every policy at the configured horizon.
    Run(RunArgs),
    /// Run every policy over the configured horizon × alpha grid.
    Sweep(RunArgs),
    /// Fit reference regret curves to a results file.
    Curves(CurvesArgs),
    /// Check a config file without running it.
    Validate {
        config: PathBuf,
        /// Override a scalar field, e.g. `--set run.replications=500`.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    /// Replace `run.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `output.directory` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timestamps and wall-clock times so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// Override a scalar field, e.g. `--set model.mu.1=0.2`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// `results.csv` or `results.json` from a sweep.
    results: PathBuf,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    regime: RegimeArg,
    /// Directory for `curves.csv` (default: next to the results).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `plots/curves.svg`.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Auto,
    Lt1,
    Eq1,
    Gt1,
}

impl From<RegimeArg> for RegimeChoice {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Auto => RegimeChoice::Auto,
            RegimeArg::Lt1 => RegimeChoice::Lt1,
            RegimeArg::Eq1 => RegimeChoice::Eq1,
            RegimeArg::Gt1 => RegimeChoice::Gt1,
        }
    }
}

impl From<RunArgs> for RunOptions {
    fn from(a: RunArgs) -> Self {
        RunOptions {
            config: a.config,
            seed: a.seed,
            out: a.out,
            deterministic: a.deterministic,
            overrides: a.overrides,
        }
    }
}

fn execution(threads: Option<usize>) -> Execution {
    match threads {
        None | Some(0) => Execution::Parallel,
        Some(1) => Execution::Serial,
        Some(n) => Execution::ParallelWith(n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = execution(cli.threads);
    let outcome = match cli.command {
        Command::Run(args) => run_command(&args.into(), exec).map(|r| {
            print!("{}", format_rows(&r.rows));
            println!(
                "wrote {} file(s) to {}",
                r.files.len(),
                r.directory.display()
            );
        }),
        Command::Sweep(args) => sweep_command(&args.into(), exec).map(|r| {
            print!("{}", format_rows(&r.rows));
            println!(
                "wrote {} file(s) to {}",
                r.files.len(),
                r.directory.display()
            );
        }),
        Command::Curves(args) => curves_command(
            &args.results,
            args.regime.into(),
            args.out.as_deref(),
            args.plot,
        )
        .map(|(fits, files)| {
            for f in &fits {
                println!(
                    "{} [{}]: C = {:.4}, log RSS = {:.4}, linear-T RSS = {:.4}",
                    f.label(),
                    f.regime.tag(),
                    f.reference.constant,
                    f.reference.rss,
                    f.linear.rss
                );
            }
            for file in files {
                println!("wrote {}", file.display());
            }
        }),
        Command::Validate { config, overrides } => {
            validate_command(&config, &overrides).map(|s| println!("{s}"))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
