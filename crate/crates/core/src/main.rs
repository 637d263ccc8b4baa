use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbf_mem::commands;
use rbf_mem::config::{Overrides, RunConfig};
use rbf_mem::validate::ValidateOptions;

/// Multisource exchangeability models with distance-embedded priors.
#[derive(Parser)]
#[command(name = "rbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    width: Option<usize>,
    /// Prior mixing weight.
    #[arg(long)]
    a: Option<f64>,
    /// Correlation threshold.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Subsample-and-repeat analysis of a long-format CSV.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Long-format CSV (source_id,variable,value).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Primary source id, or "*" for every source in turn.
        #[arg(long)]
        primary: Option<String>,
        #[arg(long)]
        subsample_n: Option<usize>,
        /// Use supplements whole instead of subsampling them.
        #[arg(long)]
        whole_supplements: bool,
    },
    /// Run a simulation scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        scenario: Option<u8>,
        /// Named preset (see --list-presets).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        list_presets: bool,
    },
    /// Check the closed forms against numerical oracles.
    Validate {
        /// Fewer instances, for a fast smoke check.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        width: Option<usize>,
        /// Relative error injected into the closed forms (negative control).
        #[arg(long, hide = true)]
        perturb: Option<f64>,
    },
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        seed: c.seed,
        reps: c.reps,
        width: c.width,
        out: c.out.clone(),
        a: c.a,
        rho: c.rho,
        ..Overrides::default()
    }
}

fn load(path: &Option<PathBuf>) -> rbf_mem::Result<RunConfig> {
    path.as_deref()
        .map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn run(cli: Cli) -> rbf_mem::Result<u8> {
    match cli.command {
        Command::Analyze {
            common,
            data,
            primary,
            subsample_n,
            whole_supplements,
        } => {
            let cfg = load(&common.config)?;
            let flags = Overrides {
                data,
                primary,
                subsample_n,
                whole_supplements,
                ..overrides(&common)
            };
            let (options, data) = cfg.analysis(&flags)?;
            let settings = cfg.settings(&flags);
            let (_, summary) = commands::analyze(&data, &options, settings.width, &settings.out)?;
            print!("{}", commands::render_summary(&summary));
            println!("reports written to {}", settings.out.display());
        }
        Command::Simulate {
            common,
            scenario,
            preset,
            list_presets,
        } => {
            if list_presets {
                for name in rbf_mem::sim::ScenarioConfig::preset_names() {
                    println!("{name}");
                }
                return Ok(0);
            }
            let cfg = load(&common.config)?;
            let flags = Overrides {
                scenario,
                preset,
                ..overrides(&common)
            };
            let config = cfg.scenario(&flags)?;
            let settings = cfg.settings(&flags);
            let (_, summary) = commands::simulate(&config, settings.width, &settings.out)?;
            print!("{}", commands::render_summary(&summary));
            println!("reports written to {}", settings.out.display());
        }
        Command::Validate {
            quick,
            seed,
            width,
            perturb,
        } => {
            let base = if quick {
                ValidateOptions::quick()
            } else {
                ValidateOptions::full()
            };
            let options = ValidateOptions {
                seed: seed.unwrap_or(base.seed),
                width: width.unwrap_or(base.width),
                perturbation: perturb.unwrap_or(0.0),
                ..base
            };
            let report = commands::validate(&options)?;
            print!("{}", commands::render_validation(&report));
            if !report.passed() {
                eprintln!("failed checks: {}", report.failed_checks().join(", "));
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
