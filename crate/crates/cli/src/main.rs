use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wiener_kernel::NoiseSpec;
use wiener_kernel_cli::config::{
    parse_noise, read_json, Fig1Config, Fig2Config, FitPredictConfig, Lemma3Config,
    Lemma3Overrides, StudyOverrides,
};
use wiener_kernel_cli::output::{Manifest, OutDir};
use wiener_kernel_cli::validate::{run_validation, ValidateConfig};
use wiener_kernel_cli::{commands, CliError, Result, EXIT_OK};

#[derive(Parser)]
#[command(name = "wkr", version, about = "Wiener kernel regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit on the configured data and predict at the given points.
    FitPredict {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scalar prediction points, replacing `predict` in the config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
    },
    /// Tube tables over the (n_x, n_sam) grid.
    Fig1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated location counts.
        #[arg(long, value_delimiter = ',')]
        n_x: Option<Vec<usize>>,
        /// Comma-separated repeat counts.
        #[arg(long, value_delimiter = ',')]
        n_sam: Option<Vec<usize>>,
        /// Prediction grid size.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Gamma-noise realization study.
    Fig2 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of Monte Carlo realizations.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        /// Realizations written to the paths file.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Variance at a point under N repeated samples.
    Lemma3 {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        x_bar: Option<f64>,
        /// Sweep N = 1..=n_max.
        #[arg(long)]
        n_max: Option<usize>,
        /// `gaussian` (sigma 1) or `gamma` (alpha 0.25, beta 2).
        #[arg(long, value_parser = parse_noise)]
        noise: Option<NoiseSpec>,
    },
    /// Run the built-in checks and print a JSON report.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the report and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mc: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<commands::RunSummary> {
    match cli.command {
        Command::FitPredict { common, x } => {
            let cfg = FitPredictConfig::resolve(read_json(common.config.as_deref())?, x)?;
            commands::run_fit_predict(&cfg, &common.out)
        }
        Command::Fig1 {
            common,
            seed,
            n_x,
            n_sam,
            grid,
        } => {
            let o = StudyOverrides {
                seed,
                n_x,
                n_sam,
                grid,
                ..Default::default()
            };
            let cfg = Fig1Config::resolve(read_json(common.config.as_deref())?, o)?;
            commands::run_fig1(&cfg, &common.out)
        }
        Command::Fig2 {
            common,
            seed,
            mc,
            grid,
            paths,
        } => {
            let o = StudyOverrides {
                seed,
                grid,
                mc,
                paths,
                ..Default::default()
            };
            let cfg = Fig2Config::resolve(read_json(common.config.as_deref())?, o)?;
            commands::run_fig2(&cfg, &common.out)
        }
        Command::Lemma3 {
            common,
            x_bar,
            n_max,
            noise,
        } => {
            let o = Lemma3Overrides {
                x_bar,
                n_max,
                noise,
            };
            let cfg = Lemma3Config::resolve(read_json(common.config.as_deref())?, o)?;
            commands::run_lemma3(&cfg, &common.out)
        }
        Command::Validate {
            config,
            out,
            seed,
            mc,
        } => {
            let cfg = ValidateConfig::resolve(read_json(config.as_deref())?, seed, mc)?;
            let report = run_validation(&cfg)?;
            let json = serde_json::to_string_pretty(&report).expect("serializable");
            // A closed pipe on stdout is not an error worth failing over.
            let _ = writeln!(std::io::stdout(), "{json}");
            let mut summary = commands::RunSummary::default();
            if let Some(out) = out {
                let dir = OutDir::create(out)?;
                summary
                    .files
                    .push(dir.write_json("validation_report.json", &report)?);
                let manifest = Manifest {
                    command: "validate",
                    version: env!("CARGO_PKG_VERSION"),
                    seed: Some(cfg.seed),
                    config: &cfg,
                    files: vec!["validation_report.json".into()],
                    extra: serde_json::Value::Null,
                };
                summary
                    .files
                    .push(dir.write_json(commands::MANIFEST, &manifest)?);
            }
            if !report.passed {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| {
                        !c.passed && c.severity == wiener_kernel_cli::validate::Severity::Hard
                    })
                    .map(|c| c.name.as_str())
                    .collect();
                return Err(CliError::ValidationFailed(failed.join(", ")));
            }
            Ok(summary)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = matches!(cli.command, Command::Validate { .. });
    match run(cli) {
        Ok(summary) => {
            for note in &summary.notes {
                eprintln!("warning: {note}");
            }
            if !quiet {
                let mut stdout = std::io::stdout().lock();
                for f in &summary.files {
                    let _ = writeln!(stdout, "{}", f.display());
                }
            }
            ExitCode::from(EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
