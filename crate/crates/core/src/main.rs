use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stemset::pipeline::{cmd_augment, cmd_evaluate, cmd_loss, cmd_report, cmd_separate, render_report};
use stemset::{Error, RunConfig, SeparatorKind, SeparatorSpec, SpectralConfig, TailPolicy};

#[derive(Parser, Debug)]
#[command(name = "stemset", version, about = "Power-set stem augmentation and silence-aware separation evaluation")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for per-entry work (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build power-set mixtures and the dataset manifest.
    Augment {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        work: Option<PathBuf>,
        #[arg(long)]
        segment_length: Option<f64>,
        #[arg(long, value_enum)]
        tail: Option<Tail>,
        #[arg(long)]
        min_subset_size: Option<usize>,
        /// Only emit the full-ensemble mixture.
        #[arg(long)]
        full_set_only: bool,
    },
    /// Run a reference separator over the manifest.
    Separate {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Output directory (defaults to <output_dir>/estimates/<kind>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1024)]
        window: usize,
        #[arg(long)]
        hop: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mask_exponent: f64,
    },
    /// Score an estimates directory and write report.json plus CSV tables.
    Evaluate {
        #[arg(long)]
        estimates: PathBuf,
        /// Report directory (defaults to <output_dir>/report).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the composite loss between two WAV files as JSON.
    Loss { estimate: PathBuf, target: PathBuf },
    /// Print a saved report as text tables.
    Report { report: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    OracleTargets,
    Passthrough,
    Zeros,
    IdealRatioMask,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Tail {
    DropTail,
    PadTail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }

    match cli.command {
        Command::Augment {
            input,
            work,
            segment_length,
            tail,
            min_subset_size,
            full_set_only,
        } => {
            if let Some(p) = input {
                cfg.paths.input_dir = absolute(p)?;
            }
            if let Some(p) = work {
                cfg.paths.work_dir = absolute(p)?;
            }
            if let Some(s) = segment_length {
                cfg.augment.segment_length_s = s;
            }
            if let Some(t) = tail {
                cfg.augment.tail_policy = match t {
                    Tail::DropTail => TailPolicy::DropTail,
                    Tail::PadTail => TailPolicy::PadTail,
                };
            }
            if let Some(k) = min_subset_size {
                cfg.augment.min_subset_size = k;
            }
            cfg.augment.include_full_set_only |= full_set_only;
            print_json(&cmd_augment(&cfg)?)
        }
        Command::Separate {
            kind,
            out,
            window,
            hop,
            mask_exponent,
        } => {
            let kind = match kind {
                Kind::OracleTargets => SeparatorKind::OracleTargets,
                Kind::Passthrough => SeparatorKind::Passthrough,
                Kind::Zeros => SeparatorKind::Zeros,
                Kind::IdealRatioMask => SeparatorKind::IdealRatioMask,
            };
            let spec = SeparatorSpec {
                kind,
                spectral: SpectralConfig::linear(window, hop.unwrap_or(window / 4)),
                mask_exponent,
            };
            print_json(&cmd_separate(&cfg, &spec, out.as_deref())?)
        }
        Command::Evaluate { estimates, out } => {
            let (summary, report) = cmd_evaluate(&cfg, &estimates, out.as_deref())?;
            eprint!("{}", render_report(&report));
            print_json(&summary)
        }
        Command::Loss { estimate, target } => print_json(&cmd_loss(&cfg, &estimate, &target)?),
        Command::Report { report } => {
            print!("{}", cmd_report(&report)?);
            Ok(())
        }
    }
}

/// CLI paths are relative to the working directory, not the config file.
fn absolute(p: PathBuf) -> Result<PathBuf, Error> {
    std::path::absolute(&p).map_err(|e| Error::Config(format!("bad path {}: {e}", p.display())))
}
