use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnin::config::parse_frequency;
use pnin::{commands, CliError, CliResult, Parallel, RunConfig, OUT_DIR_ENV};

/// Phase-noise to intensity-noise conversion in Λ systems: spectra, trend
/// sweeps, Monte-Carlo validation, trace analysis and EIT widths.
#[derive(Debug, Parser)]
#[command(name = "pnin", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: config `output_dir`, then $PNIN_OUT_DIR, then ./pnin-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run everything on one thread.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// g2(0) against two-photon detuning.
    Spectrum,
    /// Central width against power and saturated width against laser width.
    Trends,
    /// Monte-Carlo validation report and optional synthetic traces.
    Oracle,
    /// g2(0) spectrum and width from `time_us,ch1,ch2` trace files.
    Analyze {
        files: Vec<PathBuf>,
        /// Detuning of one file, e.g. `--label run3.csv="0.5 rad/us"`.
        #[arg(long = "label", value_name = "FILE=FREQ")]
        labels: Vec<String>,
    },
    /// EIT spectra, FWHM against power and zero-power extrapolation.
    Eit,
}

fn parse_label(s: &str) -> CliResult<(PathBuf, f64)> {
    let (file, freq) = s
        .rsplit_once('=')
        .ok_or_else(|| CliError::config(format!("--label `{s}` is not FILE=FREQ")))?;
    let d = parse_frequency(freq).map_err(|e| CliError::config(format!("--label `{s}`: {e}")))?;
    Ok((PathBuf::from(file), d))
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Command::Analyze { .. }) => RunConfig::parse("")?,
        (None, _) => return Err(CliError::config("--config is required for this command")),
    };
    let cfg = match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pnin-out"));
    let exec = Parallel::new(cli.threads, cli.deterministic)?;
    match &cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &out, &exec),
        Command::Trends => commands::trends(&cfg, &out, &exec),
        Command::Oracle => commands::oracle(&cfg, &out, &exec),
        Command::Analyze { files, labels } => {
            let labels = labels
                .iter()
                .map(|s| parse_label(s))
                .collect::<CliResult<Vec<_>>>()?;
            commands::analyze(&cfg, files, &labels, &out)
        }
        Command::Eit => commands::eit(&cfg, &out, &exec),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
