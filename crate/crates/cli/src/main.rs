use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use manet_core::ensemble::EnsembleMode;
use manet_sim::commands::{execute, replay, Command, Run};
use manet_sim::config::{load, Layer, SigmaGrid, Target, Targets};
use manet_sim::default_threads;

#[derive(Parser)]
#[command(
    name = "manet",
    version,
    about = "Connectivity of mobile ad-hoc networks on a triangular lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure connectivity curves and fit them.
    Sweep(Common),
    /// Collapse the curves of all ranges onto one.
    Collapse {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        beta_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta_max: Option<f64>,
        #[arg(long)]
        beta_step: Option<f64>,
    },
    /// Degree distribution, clustering and neighbour degree at operating points.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Operating point as `z:sigma`; repeatable. Default: automatic.
        #[arg(long = "target", value_parser = parse_target)]
        targets: Vec<Target>,
        /// Occupancies for the cutoff-degree sweep.
        #[arg(long, value_delimiter = ',')]
        kc_sigma: Option<Vec<f64>>,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Independent,
    Trajectory,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lattice side L.
    #[arg(long)]
    side: Option<u32>,
    /// Transmission ranges, comma separated.
    #[arg(long = "z", value_delimiter = ',')]
    z_list: Option<Vec<u32>>,
    /// Occupancy grid, comma separated, or `adaptive`.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    eta_threshold: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

fn parse_target(s: &str) -> Result<Target, String> {
    let (z, sigma) = s.split_once(':').ok_or("expected z:sigma")?;
    Ok(Target {
        z: z.parse().map_err(|_| format!("bad z {z:?}"))?,
        sigma: sigma.parse().map_err(|_| format!("bad sigma {sigma:?}"))?,
    })
}

fn parse_grid(s: &str) -> Result<SigmaGrid> {
    if s == "adaptive" {
        return Ok(SigmaGrid::Named(s.into()));
    }
    if s.trim().is_empty() {
        return Ok(SigmaGrid::Explicit(Vec::new()));
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("--sigma: bad value {v:?}"))
        })
        .collect::<Result<_>>()
        .map(SigmaGrid::Explicit)
}

impl Common {
    fn layer(&self) -> Result<Layer> {
        Ok(Layer {
            preset: self.preset.clone(),
            output_dir: self.output_dir.clone(),
            side: self.side,
            z_list: self.z_list.clone(),
            sigma_grid: self.sigma.as_deref().map(parse_grid).transpose()?,
            realizations: self.realizations,
            warmup_steps: self.warmup,
            seed: self.seed,
            mode: self.mode.map(|m| match m {
                Mode::Independent => EnsembleMode::Independent,
                Mode::Trajectory => EnsembleMode::Trajectory,
            }),
            trajectory_stride: self.stride,
            eta_threshold: self.eta_threshold,
            epsilon: self.epsilon,
            ..Layer::default()
        })
    }

    fn run(&self, flags: Layer) -> Result<Run> {
        let resolved = load(self.config.as_deref(), &flags)?;
        Ok(Run {
            settings: resolved.settings,
            output_dir: resolved.output_dir,
            threads: self.threads.unwrap_or_else(default_threads),
        })
    }
}

fn dispatch(cli: Cli) -> Result<Vec<String>> {
    let outputs = match cli.command {
        Cmd::Sweep(common) => {
            let run = common.run(common.layer()?)?;
            execute(&run, Command::Sweep)?
        }
        Cmd::Collapse {
            common,
            beta_min,
            beta_max,
            beta_step,
        } => {
            let flags = Layer {
                beta_min,
                beta_max,
                beta_step,
                ..common.layer()?
            };
            execute(&common.run(flags)?, Command::Collapse)?
        }
        Cmd::Metrics {
            common,
            targets,
            kc_sigma,
        } => {
            let flags = Layer {
                metrics_targets: (!targets.is_empty()).then_some(Targets::Explicit(targets)),
                kc_sweep_sigma: kc_sigma,
                ..common.layer()?
            };
            execute(&common.run(flags)?, Command::Metrics)?
        }
        Cmd::Replay {
            manifest,
            output_dir,
            threads,
        } => replay(
            &manifest,
            output_dir,
            threads.unwrap_or_else(default_threads),
        )?,
    };
    Ok(outputs)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(outputs) => {
            for o in outputs {
                println!("{o}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
