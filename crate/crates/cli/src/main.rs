//! Config-driven experiment runner: `ratelab run <config.toml>` executes one
//! experiment and writes `<id>.report.json` plus `<id>.<table>.csv`;
//! `ratelab list` prints the family catalog.
//!
//! Exit codes: 0 when every verdict passes, 1 on FAIL verdicts, 2 on config
//! or model/grid errors. Output directory precedence: `--out`, then the
//! config's `out_dir`, then `RATELAB_OUT`, then the current directory.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use ratelab_cli::config::{self, ExperimentConfig};
use ratelab_cli::families::{catalog, family_info, run_family, RunError};
use ratelab_cli::report::{write_outputs, RunReport, Versions};

#[derive(Parser)]
#[command(
    name = "ratelab",
    version,
    about = "rate-function and limit-theorem experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for reports and tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the run (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replace the seed pinned in the config.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { path: PathBuf },
    /// Print the experiment catalog with parameter schemas.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            list_catalog();
            ExitCode::SUCCESS
        }
        Command::Run { ref path } => match run(&cli, path) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(2)
            }
        },
    }
}

fn list_catalog() {
    for info in catalog() {
        println!("{}", info.id);
        println!("    {}", info.claim);
        println!("    required:");
        for (field, constraint) in info.required {
            println!("        {field}: {constraint}");
        }
        if !info.optional.is_empty() {
            println!("    optional:");
            for (field, constraint) in info.optional {
                println!("        {field}: {constraint}");
            }
        }
        println!();
    }
    println!("{} families", catalog().len());
}

fn run(cli: &Cli, path: &PathBuf) -> Result<bool, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Run(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_str(&text)?;
    if family_info(&cfg.family).is_none() {
        return Err(config::ConfigError::UnknownFamily(cfg.family.clone()).into());
    }
    let seed = cli.seed_override.unwrap_or(cfg.seed);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .or_else(|| std::env::var_os("RATELAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let started = Instant::now();
    let output = match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| RunError::Run(e.to_string()))?;
            pool.install(|| run_family(&cfg, seed))?
        }
        None => run_family(&cfg, seed)?,
    };
    let timing_ms = started.elapsed().as_millis();

    let mut report = RunReport {
        id: cfg.id.clone(),
        family: cfg.family.clone(),
        seed,
        pass: output.pass(),
        verdicts: output.verdicts.clone(),
        tables: Vec::new(),
        config: config::config_echo(&cfg),
        versions: Versions {
            ratelab: env!("CARGO_PKG_VERSION"),
        },
        timing_ms,
    };
    write_outputs(&out_dir, &mut report, &output)
        .map_err(|e| RunError::Run(format!("cannot write outputs: {e}")))?;

    for v in &output.verdicts {
        println!(
            "[{}] {} — {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            cfg.id,
            v.name,
            v.detail
        );
    }
    Ok(output.pass())
}
