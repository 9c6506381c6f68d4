use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sgoal_cli::commands::{cmd_run, cmd_select_test, cmd_verify, load_config, SelectTestArgs};
use sgoal_cli::CliError;

#[derive(Parser)]
#[command(
    name = "sgoal",
    version,
    about = "Run, verify and inspect stochastic global optimizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicates and write per-seed traces plus summary.json.
    Run(ExperimentArgs),
    /// Build the exact chain of a finite instance and check the absorption bound.
    Verify(ExperimentArgs),
    /// Compare exact selection probabilities with sampled frequencies.
    SelectTest(SelectArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; replicate i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one config key, e.g. --set sa.T0=5. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SelectArgs {
    /// uniform, proportional, roulette, ranking or tournament.
    #[arg(long)]
    scheme: String,
    /// Comma-separated fitness values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fitness: Vec<f64>,
    /// Treat larger fitness as better.
    #[arg(long)]
    maximize: bool,
    /// Tournament size.
    #[arg(long, default_value_t = 2)]
    size: usize,
    /// Rates for proportional, roulette and tournament: ranking or fitness.
    #[arg(long, default_value = "ranking")]
    rate: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Significance level of the chi-square test.
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
}

fn load(a: &ExperimentArgs) -> Result<sgoal_cli::config::ExperimentConfig, CliError> {
    load_config(
        a.config.as_deref(),
        &a.set,
        a.seed,
        a.replicates,
        a.out.as_deref(),
    )
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run(a) => {
            let config = load(&a)?;
            let summary = cmd_run(&config)?;
            println!(
                "wrote {} traces and summary.json to {}",
                summary.seeds.len(),
                config.output.display()
            );
            Ok(true)
        }
        Command::Verify(a) => {
            let config = load(&a)?;
            let r = cmd_verify(&config)?;
            let worst = r
                .per_t
                .iter()
                .map(|row| row.margin)
                .fold(f64::INFINITY, f64::min);
            println!(
                "delta={} absorbing={} reach={} t_max={} min_margin={} holds={}",
                r.delta,
                r.premise_absorbing,
                r.premise_reach,
                r.per_t.len(),
                worst,
                r.holds()
            );
            Ok(r.holds())
        }
        Command::SelectTest(a) => {
            let args = SelectTestArgs {
                scheme: a.scheme,
                fitness: a.fitness,
                maximize: a.maximize,
                size: a.size,
                rate: a.rate,
                samples: a.samples,
                seed: a.seed,
            };
            let report = cmd_select_test(&args)?;
            print!("{}", report.render(&args.fitness, a.alpha));
            Ok(report.chi_square.passes(a.alpha))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("sgoal: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
