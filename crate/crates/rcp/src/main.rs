use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use rcp::cli::{
    cmd_oracle, cmd_price, cmd_simulate, cmd_sweep, cmd_validate, write_output, Overrides,
    RunConfig,
};
use rcp::experiments::Normalizer;

#[derive(Parser)]
#[command(
    name = "rcp",
    version,
    about = "Robust clearing-price reserve mechanisms: exact solvers, closed-form oracles, and reproducible revenue/incentive sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact clearing price of a bid batch CSV (header bid_1,...,bid_n)
    Price {
        /// Path to the batch CSV
        #[arg(long)]
        batch: PathBuf,
        /// Match/revenue trade-off in [0, n]
        #[arg(long)]
        lambda: f64,
    },
    /// Closed-form population quantities for every grid cell of a config
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full (mechanism, lambda, epsilon) sweep and write the CSV
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path override
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread cap (output is identical for any value)
        #[arg(long)]
        jobs: Option<usize>,
        /// Revenue normalizer: welfare | second_value
        #[arg(long)]
        normalizer: Option<String>,
    },
    /// One two-stage simulation for the first grid cell; dumps the policy
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the bound/invariant validation suite; nonzero exit on failure
    Validate,
}

fn parse_normalizer(text: &str) -> anyhow::Result<Normalizer> {
    match text {
        "welfare" => Ok(Normalizer::Welfare),
        "second_value" => Ok(Normalizer::SecondValue),
        other => bail!("unknown normalizer '{other}' (expected welfare or second_value)"),
    }
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Price { batch, lambda } => {
            println!("{}", cmd_price(&batch, lambda)?);
        }
        Command::Oracle { config, seed } => {
            let overrides = Overrides {
                seed,
                ..Default::default()
            };
            let cfg = RunConfig::from_path(&config)?.resolve(&overrides)?;
            print!("{}", cmd_oracle(&cfg)?);
        }
        Command::Sweep {
            config,
            seed,
            out,
            jobs,
            normalizer,
        } => {
            let normalizer = normalizer.as_deref().map(parse_normalizer).transpose()?;
            let overrides = Overrides {
                seed,
                out,
                normalizer,
            };
            let cfg = RunConfig::from_path(&config)?.resolve(&overrides)?;
            let (csv, summary) = cmd_sweep(&cfg, jobs)?;
            write_output(&cfg.out, &csv)
                .with_context(|| format!("writing {}", cfg.out.display()))?;
            println!("wrote {}", cfg.out.display());
            print!("{summary}");
        }
        Command::Simulate { config, seed } => {
            let overrides = Overrides {
                seed,
                ..Default::default()
            };
            let cfg = RunConfig::from_path(&config)?.resolve(&overrides)?;
            print!("{}", cmd_simulate(&cfg)?);
        }
        Command::Validate => {
            let (report, all_pass) = cmd_validate()?;
            print!("{report}");
            return Ok(all_pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
