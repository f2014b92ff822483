use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kmfix::experiment::{cmd_axioms, cmd_iterate, cmd_product, cmd_rates, cmd_uafpp, ExperimentConfig, Overrides, Status};
use kmfix::suite::run_all;

#[derive(Parser)]
#[command(name = "kmfix", version, about = "Krasnoselski-Mann iteration, exact rates and product-space fixed points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the metric axioms and (W1)-(W4) on a space.
    Axioms(Common),
    /// Write the KM trace of a map as CSV.
    Iterate(Common),
    /// Print exact values of the rates h, h~, g and g~.
    Rates(Common),
    /// Certify an approximate fixed point of a product map.
    Product(Common),
    /// Tabulate UAFPP and regularity moduli.
    Uafpp(Common),
    /// Run the acceptance suite.
    Demo {
        /// Directory for the certificate files written by the suite.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn run(common: Common, cmd: fn(&ExperimentConfig) -> kmfix::experiment::CmdResult) -> ExitCode {
    let cfg = match ExperimentConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return exit(Status::ConfigError);
        }
    };
    let cfg = cfg.with_overrides(&Overrides {
        seed: common.seed,
        budget: common.budget,
        out: common.out,
        eta: common.eta,
    });
    let result = cmd(&cfg);
    if result.status == Status::ConfigError {
        eprintln!("{}", result.message);
    } else {
        print!("{}", result.message);
        if !result.message.ends_with('\n') {
            println!();
        }
    }
    exit(result.status)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Axioms(c) => run(c, cmd_axioms),
        Command::Iterate(c) => run(c, cmd_iterate),
        Command::Rates(c) => run(c, cmd_rates),
        Command::Product(c) => run(c, cmd_product),
        Command::Uafpp(c) => run(c, cmd_uafpp),
        Command::Demo { out } => {
            let dir = out.unwrap_or_else(|| std::env::temp_dir().join(format!("kmfix-demo-{}", std::process::id())));
            if let Err(e) = std::fs::create_dir_all(&dir) {
                eprintln!("cannot create {}: {e}", dir.display());
                return exit(Status::ConfigError);
            }
            let results = run_all(&dir);
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                exit(Status::Ok)
            } else {
                exit(Status::Violation)
            }
        }
    }
}
