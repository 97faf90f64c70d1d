use clap::Parser;
use fracmix::config::{run, RunConfig};
use fracmix::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Batch driver for the mixed fractional parabolic-hyperbolic inverse
/// source toolkit: reads one JSON config, runs one command, writes
/// artifacts (JSON reports, CSV tables) into the output directory.
#[derive(Parser)]
#[command(name = "fracmix", version)]
struct Cli {
    /// path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory (overrides output_dir from the config)
    #[arg(long)]
    output: Option<PathBuf>,
    /// rayon thread count, 0 = auto
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// RNG seed for noise-driven probes
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FRACMIX_LOG", "warn")).init();
    let cli = Cli::parse();

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not configure {} threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let out_dir = cli
        .output
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    match run(&cfg, &out_dir, cli.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::IllPosedMode { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
