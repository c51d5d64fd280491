use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use token_auction::experiment::{run, Command, OutputFormat, Overrides};

#[derive(Parser)]
#[command(version, about = "Run token-auction experiments from a scenario file")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Expected market caps by backward induction.
    Solve,
    /// Path traces for each configured regime.
    Simulate,
    /// Second-price vs first-price expected revenue.
    CompareFormats,
    /// Full-burn front-loading check.
    BurnDemo,
    /// Burn-policy utility vs dollar savings rules.
    Corollary,
    /// Misappropriation-cost sweep of the effort model.
    Extension,
    /// Check a scenario file without running it.
    Validate,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("config error: --config is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Simulate => Command::Simulate,
        Cmd::CompareFormats => Command::CompareFormats,
        Cmd::BurnDemo => Command::BurnDemo,
        Cmd::Corollary => Command::Corollary,
        Cmd::Extension => Command::Extension,
        Cmd::Validate => Command::Validate,
    };
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out,
        format: match cli.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
    };
    match run(command, &config, &overrides) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for path in &report.artifacts {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
