use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cte_core::cli::{self, exit_code};
use cte_core::config::ConfigFile;
use cte_core::Error;

/// Simulate, process and localize with constant-tone-extension phase
/// samples from a circular antenna array.
#[derive(Debug, Parser)]
#[command(name = "cte", version)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Shared {
    /// TOML config file; flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (overrides [noise] seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// AoA grid step in degrees.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Estimation method: grid or harmonic.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Multi-packet strategy: avg-fit or fit-avg.
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Average with the arithmetic mean instead of the circular mean.
    #[arg(long, global = true)]
    compat_arithmetic_mean: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate packet dumps, one per (aoa, sigma) cell.
    Simulate {
        /// Angle of arrival in degrees.
        #[arg(long, conflicts_with = "sweep")]
        aoa: Option<f64>,
        /// Inclusive sweep START:STOP:STEP in degrees.
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated noise levels in degrees (default: config sigma).
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<f64>,
        /// Packets per cell.
        #[arg(long, default_value_t = 100)]
        packets: usize,
        #[arg(long, default_value = "sim")]
        transmitter: String,
    },
    /// Compute raw and folded difference-profile tables from dumps.
    Process {
        #[arg(required = true)]
        dumps: Vec<PathBuf>,
        /// Also write the normalized folded mean.
        #[arg(long)]
        normalize: bool,
    },
    /// Estimate the angle of arrival from dumps or folded tables.
    Estimate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Locate the receiver from per-beacon estimate files.
    Locate {
        #[arg(required = true)]
        estimates: Vec<PathBuf>,
        /// Receiver heading in degrees (overrides [locator] heading_deg).
        #[arg(long)]
        heading: Option<f64>,
    },
    /// Profile degradation against Gaussian phase noise.
    SweepNoise {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 45.0, 55.0, 65.0])]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0.0)]
        aoa: f64,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    let s = &cli.shared;
    let mut file = match &s.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = s.seed {
        file.noise.seed = seed;
    }
    if let Some(step) = s.grid_step {
        file.estimator.grid_step_deg = step;
    }
    if let Some(m) = &s.method {
        file.estimator.method = m.clone();
    }
    if let Some(st) = &s.strategy {
        file.estimator.strategy = st.clone();
    }
    if s.compat_arithmetic_mean {
        file.estimator.arithmetic_mean = true;
    }
    if let Command::Locate {
        heading: Some(h), ..
    } = &cli.command
    {
        file.locator.heading_deg = *h;
    }
    let rc = file.resolve()?;
    log::info!("config hash {}", rc.hash);

    match &cli.command {
        Command::Simulate {
            aoa,
            sweep,
            sigma,
            packets,
            transmitter,
        } => {
            let aoas = match (aoa, sweep) {
                (_, Some(range)) => {
                    let parts: Vec<f64> = range
                        .split(':')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| Error::Config(format!("bad sweep {range:?}")))?;
                    if parts.len() != 3 {
                        return Err(Error::Config(format!(
                            "sweep must be START:STOP:STEP, got {range:?}"
                        )));
                    }
                    cli::sweep(parts[0], parts[1], parts[2])?
                }
                (Some(a), None) => vec![*a],
                (None, None) => {
                    return Err(Error::Config("simulate needs --aoa or --sweep".into()))
                }
            };
            let sigmas = if sigma.is_empty() {
                vec![rc.noise.sigma_deg]
            } else {
                sigma.clone()
            };
            for f in cli::simulate(&rc, &s.out, &aoas, &sigmas, *packets, transmitter)? {
                println!("{}", f.display());
            }
        }
        Command::Process { dumps, normalize } => {
            for d in dumps {
                for f in cli::process(&rc, &s.out, d, *normalize)? {
                    println!("{}", f.display());
                }
            }
        }
        Command::Estimate { inputs } => {
            let (path, records) = cli::estimate(&rc, &s.out, inputs)?;
            for r in &records {
                println!(
                    "{}: {:.3} deg (residual {:.3}, {} packets)",
                    r.transmitter,
                    r.estimate.angle_deg,
                    r.estimate.residual_deg,
                    r.estimate.packets
                );
            }
            println!("{}", path.display());
        }
        Command::Locate { estimates, .. } => {
            let (path, est) = cli::locate_from_files(&rc, &s.out, estimates, rc.heading_deg)?;
            println!(
                "position ({:.3}, {:.3}) m, residual {:.3} deg",
                est.position.x, est.position.y, est.residual_deg
            );
            println!("{}", path.display());
        }
        Command::SweepNoise {
            sigmas,
            trials,
            aoa,
        } => {
            let (files, rows) = cli::sweep_noise(&rc, &s.out, sigmas, *trials, *aoa)?;
            for r in rows {
                println!(
                    "sigma {:>5.1}: mean rms deviation {:.3} deg over {} trials",
                    r.sigma_deg, r.mean_deviation_deg, r.trials
                );
            }
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.shared.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
