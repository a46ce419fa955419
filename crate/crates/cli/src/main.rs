mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;

use anyhow::{Context, Result};
use biphoton::spinspace::TWO_DESIGN_X;
use clap::{Args, Parser, Subcommand};

use commands::{
    cmd_channel_export, cmd_detect, cmd_gram, cmd_purity_curve, cmd_qpt, cmd_wigner, DetectParams,
    ExportParams, GramParams, PurityParams, QptParams, WignerParams,
};
use config::{FileConfig, Globals, OutputFormat};

#[derive(Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Spin-1 biphoton decoherence, detection, and tomography toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Master seed; every simulated quantity is derived from it deterministically
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots (detection trials or tomography shots) per simulated data point
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Cap on the number of worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory output files are written to
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// JSON config file; explicit flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Purity of the jittered probe state across decoherence strengths
    PurityCurve {
        /// Probe mixing parameters (0 = coherent, 0.5 = N00N)
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        xs: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        gamma_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma_step: Option<f64>,
    },
    /// Nondetection probability and shot-noise jitter sensitivity per probe
    Detect {
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        xs: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        gamma_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma_step: Option<f64>,
    },
    /// Conditioning of the rotation-averaged probe ensemble across x
    Gram {
        #[arg(long, allow_negative_numbers = true)]
        x_step: Option<f64>,
    },
    /// Simulated process tomography sweep scored by average process infidelity
    Qpt {
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        xs: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        gammas: Option<Vec<f64>>,
        /// Independent repetitions per (x, gamma) point
        #[arg(long)]
        n_seeds: Option<usize>,
        /// Haar-random states per infidelity average
        #[arg(long)]
        n_states: Option<usize>,
    },
    /// Spherical Wigner function of the jittered probe state
    Wigner {
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        gammas: Option<Vec<f64>>,
        #[arg(long)]
        n_theta: Option<usize>,
        #[arg(long)]
        n_phi: Option<usize>,
    },
    /// Export the jitter channel (superoperator, Choi matrix, spectra) as JSON
    ChannelExport {
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PurityCurve { .. } => "purity-curve",
            Command::Detect { .. } => "detect",
            Command::Gram { .. } => "gram",
            Command::Qpt { .. } => "qpt",
            Command::Wigner { .. } => "wigner",
            Command::ChannelExport { .. } => "channel-export",
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.global.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let format = match cli.global.format {
        Some(f) => f,
        None => file.format()?.unwrap_or(OutputFormat::Csv),
    };
    let g = Globals {
        seed: cli.global.seed.or(file.seed).unwrap_or(7),
        shots: cli.global.shots.or(file.shots),
        out_dir: cli
            .global
            .out_dir
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        format,
        file,
    };
    std::fs::create_dir_all(&g.out_dir)
        .with_context(|| format!("creating output directory {}", g.out_dir.display()))?;

    match cli.command {
        Command::PurityCurve { xs, gamma_max, gamma_step } => {
            let p = PurityParams {
                xs: xs.or_else(|| g.file.xs.clone()).unwrap_or_else(|| vec![0.0, 0.15, 0.47]),
                gamma_max: gamma_max.or(g.file.gamma_max).unwrap_or(3.0),
                gamma_step: gamma_step.or(g.file.gamma_step).unwrap_or(0.05),
            };
            cmd_purity_curve(&g, &p)
        }
        Command::Detect { xs, gamma_max, gamma_step } => {
            let p = DetectParams {
                xs: xs.or_else(|| g.file.xs.clone()).unwrap_or_else(|| vec![0.0, 0.15, 0.5]),
                gamma_max: gamma_max.or(g.file.gamma_max).unwrap_or(3.0),
                gamma_step: gamma_step.or(g.file.gamma_step).unwrap_or(0.05),
            };
            cmd_detect(&g, &p)
        }
        Command::Gram { x_step } => {
            let p = GramParams { x_step: x_step.or(g.file.x_step).unwrap_or(0.002) };
            cmd_gram(&g, &p)
        }
        Command::Qpt { xs, gammas, n_seeds, n_states } => {
            let default_xs = || -> Result<Vec<f64>> {
                let mut xs = config::grid(0.5, 0.05)?;
                config::ensure_point(&mut xs, TWO_DESIGN_X);
                Ok(xs)
            };
            let p = QptParams {
                xs: match xs.or_else(|| g.file.xs.clone()) {
                    Some(v) => v,
                    None => default_xs()?,
                },
                gammas: gammas
                    .or_else(|| g.file.gammas.clone())
                    .unwrap_or_else(|| vec![0.5, 1.5]),
                n_seeds: n_seeds.or(g.file.n_seeds).unwrap_or(10),
                n_states: n_states.or(g.file.n_states).unwrap_or(40),
            };
            cmd_qpt(&g, &p)
        }
        Command::Wigner { x, gammas, n_theta, n_phi } => {
            let p = WignerParams {
                x: x.or(g.file.x).unwrap_or(0.47),
                gammas: gammas
                    .or_else(|| g.file.gammas.clone())
                    .unwrap_or_else(|| vec![0.0, 1.5]),
                n_theta: n_theta.or(g.file.n_theta).unwrap_or(64),
                n_phi: n_phi.or(g.file.n_phi).unwrap_or(128),
            };
            cmd_wigner(&g, &p)
        }
        Command::ChannelExport { gamma } => {
            let p = ExportParams { gamma: gamma.or(g.file.gamma).unwrap_or(0.5) };
            cmd_channel_export(&g, &p)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let name = cli.command.name();
    if let Err(err) = run(cli) {
        eprintln!("{}", serde_json::json!({ "command": name, "error": format!("{err:#}") }));
        std::process::exit(1);
    }
}
