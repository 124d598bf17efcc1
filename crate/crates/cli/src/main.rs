use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use xxz_laser_cli::config::RunConfig;
use xxz_laser_cli::presets::{find_preset, list_presets};
use xxz_laser_cli::{runner, CliError};

/// Steady states, spectra and trajectory ensembles of the XXZ laser.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in configuration, see --list-presets.
    #[arg(long)]
    preset: Option<String>,

    /// Output directory for presets, or output file overriding `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,

    /// Replaces the ensemble base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Print the built-in presets and exit.
    #[arg(long)]
    list_presets: bool,
}

fn configs(args: &Args) -> Result<Vec<RunConfig>, CliError> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = RunConfig::from_json(&text)?;
        if let Some(out) = &args.out {
            config.output_path = out.to_string_lossy().into_owned();
        }
        return Ok(vec![config]);
    }
    if let Some(name) = &args.preset {
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
        return Ok(find_preset(name)?.expand(&dir));
    }
    Err(CliError::Config { field: "--config".into(), reason: "pass --config <file> or --preset <name>".into() })
}

fn main_inner(args: Args) -> Result<(), CliError> {
    if args.list_presets {
        for p in list_presets() {
            println!("{:<6} {}", p.name, p.description);
        }
        return Ok(());
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config { field: "--jobs".into(), reason: e.to_string() })?;
    }
    let mut first_error = None;
    for mut config in configs(&args)? {
        if let (Some(seed), Some(ensemble)) = (args.seed, config.ensemble.as_mut()) {
            ensemble.base_seed = seed;
        }
        match runner::run(&config) {
            Ok(outcome) => print!("{}", outcome.summary(&config)),
            Err(e) => {
                eprintln!("error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Partial { .. }) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
