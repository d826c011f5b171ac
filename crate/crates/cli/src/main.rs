mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{CountArgs, Ctx, SweepKind};
use config::{ConfigError, ConfigFile};
use dnctd::detection::Scheme;
use output::{Format, Output, Provenance};

/// Dispersion-compensated non-classical target detection simulator.
#[derive(Parser, Debug)]
#[command(name = "dnctd", version, about)]
struct Cli {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Skip Monte Carlo and emit analytic results only.
    #[arg(long, global = true)]
    mc_off: bool,
    /// Simulated seconds per Monte Carlo point (per pixel for `scan`).
    #[arg(long, global = true)]
    duration: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// True and false coincidence densities with and without dispersion.
    Histograms,
    /// SNR of all schemes across a parameter sweep.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
    },
    /// Raster scan of the letter scene.
    Scan,
    /// Coincidence histogram and windowed counts from stored tag files.
    Count {
        /// One file holding both channels, or one file per channel.
        #[arg(required = true, num_args = 1..=2)]
        files: Vec<PathBuf>,
        /// Window width in ps.
        #[arg(long)]
        window: Option<f64>,
        /// Window centre in ps.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
    },
    /// Simulates one run and writes its tag stream.
    Simulate {
        #[arg(long, default_value = "dnctd")]
        scheme: Scheme,
        /// Include ground-truth labels in the CSV output.
        #[arg(long)]
        truth: bool,
    },
    /// Detector saturation for pulsed and cw noise.
    Saturation,
    /// Prints the effective configuration.
    Config,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Histograms => "histograms".into(),
            Command::Sweep { kind } => format!("sweep {}", format!("{kind:?}").to_lowercase()),
            Command::Scan => "scan".into(),
            Command::Count { .. } => "count".into(),
            Command::Simulate { .. } => "simulate".into(),
            Command::Saturation => "saturation".into(),
            Command::Config => "config".into(),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ConfigFile::from_json(&text)?
        }
        None => ConfigFile::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(d) = cli.duration {
        if !(d > 0.0 && d.is_finite()) {
            return Err(ConfigError {
                path: "--duration".into(),
                reason: format!("must be positive, got {d}"),
            }
            .into());
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    if let Command::Config = cli.command {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let duration = cli.duration.unwrap_or(match cli.command {
        Command::Scan => cfg.scan.dwell_s,
        Command::Saturation => cfg.saturation.duration_s,
        _ => cfg.duration_s,
    });
    let provenance = Provenance::new(&cli.command.name(), &cfg.canonical_json(), cfg.seed);
    let out = Output::new(&cli.out, cli.format, provenance)?;
    let mut ctx = Ctx {
        cfg,
        out,
        mc_off: cli.mc_off,
        duration,
    };
    match cli.command {
        Command::Histograms => commands::histograms(&mut ctx)?,
        Command::Sweep { kind } => commands::sweep(&mut ctx, kind)?,
        Command::Scan => commands::scan(&mut ctx)?,
        Command::Count { files, window, offset } => commands::count(&mut ctx, &CountArgs { files, window, offset })?,
        Command::Simulate { scheme, truth } => commands::simulate(&mut ctx, scheme, truth)?,
        Command::Saturation => commands::saturation(&mut ctx)?,
        Command::Config => unreachable!(),
    }
    for p in ctx.out.written() {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn error_json(e: &anyhow::Error) -> (serde_json::Value, u8) {
    if let Some(c) = e.downcast_ref::<ConfigError>() {
        return (json!({"kind": "config", "path": c.path, "message": c.reason}), 2);
    }
    if let Some(d) = e.downcast_ref::<dnctd::Error>() {
        return match d {
            dnctd::Error::Parse { offset, reason } => {
                (json!({"kind": "parse", "offset": offset, "message": reason}), 1)
            }
            dnctd::Error::InvalidParameter { name, reason } => {
                (json!({"kind": "invalid_parameter", "path": name, "message": reason}), 2)
            }
            other => (json!({"kind": "runtime", "message": other.to_string()}), 1),
        };
    }
    (json!({"kind": "runtime", "message": format!("{e:#}")}), 1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = json!({"error": {"kind": "usage", "message": e.to_string().trim()}});
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (detail, code) = error_json(&e);
            eprintln!("{}", json!({ "error": detail }));
            ExitCode::from(code)
        }
    }
}
