use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use survgp::commands::{aggregate, evaluate, render, run, synth};
use survgp::config::ExperimentConfig;
use survgp::io::Schema;
use survgp::{CliError, Result};
use survgp_core::xor::XorParams;

#[derive(Parser)]
#[command(
    name = "survgp",
    version,
    about = "Evolved survival trees: synthesis, runs, evaluation, aggregation, rendering"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic XOR survival cohort plus a JSON sidecar.
    Synth {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        scale_exp: f64,
        #[arg(long, default_value_t = 2.0)]
        shape_gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        scale_gamma: f64,
        /// Target censoring rates for the exponential and gamma patients.
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1])]
        censor_rates: Vec<f64>,
    },
    /// Run the repetitions described by a JSON experiment config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bootstrap IBS and C-index of every model member on an external CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "time")]
        time: String,
        #[arg(long, default_value = "event")]
        event: String,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool completed runs: attainment surface, hypervolume statistics and
    /// best model per complexity.
    Aggregate {
        /// Experiment or repetition directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the trees of a model file.
    Render {
        model: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        member: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Synth {
            n,
            seed,
            out,
            half_width,
            scale_exp,
            shape_gamma,
            scale_gamma,
            censor_rates,
        } => {
            let [exp_rate, gamma_rate] = censor_rates[..] else {
                return Err(CliError::Usage(format!(
                    "--censor-rates takes two values, got {}",
                    censor_rates.len()
                )));
            };
            let params = XorParams {
                n,
                seed,
                half_width: half_width.unwrap_or(XorParams::default().half_width),
                scale_exp,
                shape_gamma,
                scale_gamma,
                censor_rates: (exp_rate, gamma_rate),
            };
            synth::synth(&params, &out).map_err(|e| match e {
                CliError::Core(survgp_core::Error::InvalidArgument(m)) => CliError::Usage(m),
                e => e,
            })
        }
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            let manifest = run::run_experiment(&cfg)?;
            println!(
                "{} repetitions written to {}",
                manifest.repetitions.len(),
                cfg.output.display()
            );
            Ok(())
        }
        Command::Evaluate {
            model,
            data,
            time,
            event,
            bootstrap,
            seed,
            out,
        } => {
            let schema = Schema {
                time,
                event,
                ..Schema::default()
            };
            evaluate::evaluate(&model, &data, &schema, bootstrap, seed, &out)
        }
        Command::Aggregate { runs, level, out } => {
            if !(level > 0.0 && level <= 1.0) {
                return Err(CliError::Usage(format!("level {level} not in (0, 1]")));
            }
            let agg = aggregate::aggregate(&runs, level, &out)?;
            println!(
                "{} runs, median hypervolume {}, surface of {} points in {}",
                agg.hypervolume.runs.len(),
                agg.hypervolume.median,
                agg.surface.len(),
                out.display()
            );
            Ok(())
        }
        Command::Render {
            model,
            format,
            member,
            out,
        } => {
            let text = render::render(&model, &format, member)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })
                }
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
