//! `stripeforge <command> --config <path> [--out <dir>] [--threads N]`

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{Command, Dumps, Run};
use config::RunConfig;
use error::CliError;
use output::{sha256_hex, write_error, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "stripeforge", version, about = "Stripe-pattern shells: synthesis, simulation, homogenization, inverse design")]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for data-parallel stages.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the periodic vertex pairing as `periodic.json`.
    #[arg(long)]
    dump_periodic: bool,
    /// Also write the cut sub-triangles as `cut.obj`.
    #[arg(long)]
    dump_cut: bool,
}

fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var("STRIPEFORGE_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("STRIPEFORGE_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn set_threads(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Invalid("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("cannot size thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<u8, (CliError, Option<PathBuf>)> {
    let early = |e: CliError| (e, cli.out.clone());
    if let Some(n) = cli.threads {
        set_threads(n).map_err(early)?;
    }
    let mut cfg = RunConfig::load(&cli.config).map_err(|e| early(e.into()))?;
    if let Some(seed) = seed_override().map_err(early)? {
        cfg.seed = seed;
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
    let fail = |e: CliError| (e, Some(dir.clone()));
    // the echoed config is location-independent: it lives in its own output dir
    cfg.output = PathBuf::from(".");
    let hash = sha256_hex(&serde_json::to_vec(&cfg).expect("serializable"));
    let mut out = OutputDir::create(&dir).map_err(fail)?;
    let _ = std::fs::remove_file(dir.join("error.json"));
    out.write_json("config.json", &cfg).map_err(fail)?;
    let mut run = Run { cfg: &cfg, seed: cfg.seed, dumps: Dumps { periodic: cli.dump_periodic, cut: cli.dump_cut }, out: &mut out };
    let code = commands::run(cli.command, &mut run).map_err(fail)?;
    out.finish(cli.command.name(), cfg.seed, &cfg, &hash).map_err(fail)?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err((e, dir)) => {
            eprintln!("error: {e}");
            if let Some(d) = dir {
                write_error(&d, &e);
            }
            ExitCode::from(e.exit_code())
        }
    }
}
