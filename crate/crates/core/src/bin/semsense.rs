use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use semsense_core::codec::{encode, encode_payload, CodecConfig, SemanticCode};
use semsense_core::contest::{market_summary, optimal_awards, MarketReport, RiskAttitude};
use semsense_core::harness::{self, ingest_labeled, MarketSection};
use semsense_core::semantic_space::{
    accuracy, classification_report_csv, classify, to_point, ClassificationRecord, KnnConfig, TrainingSet,
};
use semsense_core::signal_model::io::write_dataset;
use semsense_core::signal_model::{make_activity_dataset, ActivityClass, DatasetConfig};
use semsense_core::{Error, Result};

#[derive(Parser)]
#[command(name = "semsense", version, about = "Semantic wireless sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a labeled synthetic dataset (CSV traces plus manifest.json).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated preset names; all presets by default.
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
        #[arg(long, default_value_t = 600.0)]
        rate: f64,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        subcarriers: usize,
    },
    /// Encode one trace and print its semantic code as JSON.
    Encode {
        trace: PathBuf,
        /// Codec settings as JSON.
        #[arg(long)]
        codec: Option<PathBuf>,
        /// Also write the packed binary payload here.
        #[arg(long)]
        payload: Option<PathBuf>,
    },
    /// Classify a test dataset against a training dataset; prints a CSV report.
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        codec: Option<PathBuf>,
    },
    /// Optimal award scheme and equilibrium efforts for a market.
    Contest {
        /// Market settings as JSON; reference values by default.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Risk::Neutral)]
        risk: Risk,
        /// Upload raw data instead of semantic codes.
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Risk {
    Neutral,
    Averse,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))
}

fn codec_config(path: Option<&Path>) -> Result<CodecConfig> {
    let cfg = match path {
        Some(p) => read_json(p)?,
        None => CodecConfig::default(),
    };
    cfg.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    Ok(cfg)
}

fn encode_labeled(path: &Path, cfg: &CodecConfig) -> Result<Vec<(SemanticCode, String)>> {
    ingest_labeled(path)?
        .into_iter()
        .map(|(t, label)| Ok((encode(&t, cfg)?, label)))
        .collect()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out, seed } => {
            let report = harness::run_with(config, out, seed)?;
            println!("{}", report.to_json());
        }
        Command::Synth {
            out,
            per_class,
            seed,
            classes,
            rate,
            duration,
            subcarriers,
        } => {
            let classes = if classes.is_empty() {
                ActivityClass::presets()
            } else {
                classes
                    .iter()
                    .map(|n| ActivityClass::preset(n).ok_or_else(|| Error::ConfigInvalid(format!("unknown preset {n:?}"))))
                    .collect::<Result<_>>()?
            };
            let cfg = DatasetConfig {
                sample_rate_hz: rate,
                duration_s: duration,
                n_subcarriers: subcarriers,
                ..DatasetConfig::with_classes(classes, per_class, seed)
            };
            let data = make_activity_dataset(&cfg)?;
            println!("{}", write_dataset(&out, &data, seed)?.display());
        }
        Command::Encode { trace, codec, payload } => {
            let cfg = codec_config(codec.as_deref())?;
            let t = semsense_core::signal_model::io::read_trace_csv(&trace)?;
            let code = encode(&t, &cfg)?;
            if let Some(p) = payload {
                std::fs::write(&p, encode_payload(&code, &cfg)?).map_err(|e| Error::Io {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
            }
            println!("{}", code.to_json());
        }
        Command::Classify {
            train,
            test,
            k,
            seed,
            codec,
        } => {
            let cfg = codec_config(codec.as_deref())?;
            let ts = TrainingSet::build(&encode_labeled(&train, &cfg)?)?;
            let knn = KnnConfig { k, tie_break_seed: seed };
            if k == 0 || k > ts.len() {
                return Err(Error::ConfigInvalid(format!("--k {k} with {} training traces", ts.len())));
            }
            let rows = encode_labeled(&test, &cfg)?
                .iter()
                .enumerate()
                .map(|(i, (code, label))| {
                    Ok(ClassificationRecord {
                        trace_id: i,
                        true_label: label.clone(),
                        predicted_label: Some(classify(&to_point(code)?, &ts, &knn)?),
                        link_count: 1,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            print!("{}", classification_report_csv(&rows));
            eprintln!("accuracy {:.4}", accuracy(&rows));
        }
        Command::Contest { config, risk, raw } => {
            let section: MarketSection = match config {
                Some(p) => read_json(&p)?,
                None => MarketSection::default(),
            };
            let risk = match risk {
                Risk::Neutral => RiskAttitude::Neutral,
                Risk::Averse => RiskAttitude::Averse,
            };
            let mut market = section.market(risk, !raw);
            if risk == RiskAttitude::Averse {
                market.total_award = section.averse_total_award;
            }
            let profiles = section.profiles();
            market.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
            let scheme = optimal_awards(&profiles, &market)?;
            let result = market_summary(&profiles, &market, &scheme)?;
            println!("{}", MarketReport::new(&scheme, &result).to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
