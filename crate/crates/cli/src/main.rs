use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use doq_cli::commands;
use doq_cli::config::CompressionUtility;
use doq_cli::output::Table;
use doq_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "doq", version, about = "Decision-oriented quantization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Effective single-band decision thresholds for ascending power levels.
    Thresholds {
        /// Comma-separated ascending powers, mW.
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Decision map of the exhaustive quantizer on a 2-band gain grid.
    Regions {
        #[command(flatten)]
        common: Common,
    },
    /// Fewest decisions per loss target and the resulting compression rate.
    Compression {
        #[arg(long, value_enum)]
        utility: Option<CompressionUtility>,
        #[command(flatten)]
        common: Common,
    },
    /// Expected utility against decision budget for the MIMO quantizers.
    Mimo {
        #[command(flatten)]
        common: Common,
    },
    /// Train a classifier quantizer and write it to `--out`.
    TrainNn {
        /// Also write the training report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a saved classifier on the test split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => table.write_csv(path),
        None => {
            print!("{}", table.to_csv());
            Ok(())
        }
    }
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes") + "\n";
    match out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Thresholds {
            powers,
            c,
            sigma2,
            common,
        } => {
            let from_file = match &common.config {
                Some(_) => Some(load(&common)?),
                None => None,
            };
            let (fp, fc, fs) = match from_file.as_ref().map(|cfg| &cfg.utility) {
                Some(doq_cli::config::UtilitySpec::MultibandEe(u)) => {
                    (from_file.as_ref().map(|cfg| cfg.powers.clone()), Some(u.c), Some(u.sigma2))
                }
                Some(_) => {
                    return Err(CliError::Validation(
                        "thresholds need a multiband_ee utility".into(),
                    ))
                }
                None => (None, None, None),
            };
            let missing = |name: &str| CliError::Validation(format!("--{name} is required"));
            let powers = powers.or(fp).ok_or_else(|| missing("powers"))?;
            let c = c.or(fc).ok_or_else(|| missing("c"))?;
            let sigma2 = sigma2.or(fs).ok_or_else(|| missing("sigma2"))?;
            let table = commands::cmd_thresholds(&powers, c, sigma2)?;
            print!("{}", table.to_pretty());
            match &common.out {
                Some(path) => table.write_csv(path),
                None => Ok(()),
            }
        }
        Command::Regions { common } => {
            let cfg = load(&common)?;
            emit(&commands::cmd_regions(&cfg)?, common.out.as_deref())
        }
        Command::Compression { utility, common } => {
            let cfg = load(&common)?;
            emit(&commands::cmd_compression(&cfg, utility)?, common.out.as_deref())
        }
        Command::Mimo { common } => {
            let cfg = load(&common)?;
            emit(&commands::cmd_mimo(&cfg)?, common.out.as_deref())
        }
        Command::TrainNn { report, common } => {
            let cfg = load(&common)?;
            let out = common
                .out
                .as_ref()
                .ok_or_else(|| CliError::Validation("--out is required for the model file".into()))?;
            let outcome = commands::cmd_train_nn(&cfg)?;
            write(out, &outcome.model_text)?;
            emit_json(&outcome.report, report.as_deref())
        }
        Command::Eval { model, common } => {
            let cfg = load(&common)?;
            let text = std::fs::read_to_string(&model).map_err(|source| CliError::Io {
                path: model.display().to_string(),
                source,
            })?;
            emit_json(&commands::cmd_eval(&cfg, &text)?, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
