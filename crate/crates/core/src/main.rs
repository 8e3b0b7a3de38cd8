use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holoshot::{runner, Error, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "holoshot",
    version,
    about = "Single-shot holographic recovery experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the level range, e.g. `2..7`.
    #[arg(long, value_parser = parse_levels)]
    levels: Option<(u32, u32)>,
    /// Override the noise seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, recover and reconstruct over the configured levels.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every violated hypothesis of a configuration.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Recover samples from a saved intensity CSV.
    Replay {
        #[command(flatten)]
        common: Common,
        /// Intensity CSV (default: `<output.dir>/intensities.csv`).
        #[arg(long)]
        intensities: Option<PathBuf>,
        /// Output directory (default: `<output.dir>/replay`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact admissibility ratio and certificate per level.
    Admissibility {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_levels(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let a: u32 = a.trim().parse().map_err(|_| format!("bad level '{a}'"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad level '{b}'"))?;
    Ok((a, b))
}

fn load(common: &Common) -> holoshot::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some((min, max)) = common.levels {
        config.levels.min = min;
        config.levels.max = max;
    }
    if let Some(seed) = common.seed {
        config.noise.seed = seed;
    }
    Ok(config)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|c| format!("{c:.6}")).unwrap_or_else(|| "-".into())
}

fn execute(cli: Cli) -> holoshot::Result<()> {
    match cli.command {
        Command::Run { common, out } => {
            let config = load(&common)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&config.output.dir));
            let result = runner::run(&config, &out)?;
            println!(
                "level  lattice  ratio      certificate  l2_error       baseline       skipped"
            );
            for r in &result.report.rows {
                println!(
                    "{:<6} {:<8} {:<10.6} {:<12} {:<14.6e} {:<14.6e} {}",
                    r.level,
                    r.lattice_size,
                    r.ratio,
                    fmt_opt(r.certificate),
                    r.l2_error,
                    r.baseline_l2_error,
                    r.skipped
                );
            }
            if let Some(fit) = &result.report.fit {
                println!(
                    "fitted decay exponent: {:.4} (residual {:.3e})",
                    fit.beta, fit.residual
                );
            }
            if let Some(fit) = &result.report.baseline_fit {
                println!("exact-sample baseline exponent: {:.4}", fit.beta);
            }
            for f in &result.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Validate { common } => {
            let config = load(&common)?;
            let violations = config.validate();
            if violations.is_empty() {
                println!("ok: no violated hypotheses");
                Ok(())
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Err(Error::Validation(violations))
            }
        }
        Command::Replay {
            common,
            intensities,
            out,
        } => {
            let config = load(&common)?;
            let base = Path::new(&config.output.dir);
            let input = intensities.unwrap_or_else(|| base.join(runner::INTENSITIES_FILE));
            let out = out.unwrap_or_else(|| base.join("replay"));
            let recovered = runner::replay(&config, &input, &out)?;
            for r in &recovered {
                println!(
                    "level {}: {} recovered, {} degenerate",
                    r.level,
                    r.len(),
                    r.skipped_count()
                );
            }
            println!("wrote {}", out.join(runner::RECOVERED_FILE).display());
            Ok(())
        }
        Command::Admissibility { common } => {
            let config = load(&common)?;
            let reports = runner::admissibility(&config)?;
            println!(
                "level,ratio,certificate,sup_amplitude,min_abs_mu,admissible,within_certificate"
            );
            for r in &reports {
                let within = r.certificate.map(|c| r.ratio <= c);
                println!(
                    "{},{:?},{},{:?},{:?},{},{}",
                    r.level,
                    r.ratio,
                    r.certificate.map(|c| format!("{c:?}")).unwrap_or_default(),
                    r.sup_amplitude,
                    r.min_abs_mu,
                    r.is_admissible(),
                    within.map(|w| w.to_string()).unwrap_or_default()
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let reason = match &e {
                Error::Validation(v) => v.first().map_or("validation", |x| x.code.as_str()),
                other => other.code(),
            };
            let violations = match &e {
                Error::Validation(v) => serde_json::to_value(v).unwrap_or_default(),
                _ => serde_json::Value::Array(Vec::new()),
            };
            let payload = serde_json::json!({
                "reason": reason,
                "message": e.to_string(),
                "violations": violations,
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
