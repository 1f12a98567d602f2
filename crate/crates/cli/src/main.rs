mod commands;
mod config;
mod error;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fce_core::annotations::{AnnotatedImage, DelimitedOptions};
use fce_core::synth;

use crate::config::{parse_ends, Config};
use crate::error::{CliError, CliResult};

/// Fourier contour embedding toolkit.
#[derive(Parser)]
#[command(name = "fce", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set degree=7`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier signatures of every annotated instance, as JSON lines.
    Embed {
        annotations: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Polygons reconstructed from signature JSON lines.
    Reconstruct {
        signatures: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// IoU and truncation error of reconstructions per Fourier degree, as CSV.
    Fidelity {
        annotations: PathBuf,
        /// Ascending comma-separated degrees.
        #[arg(long, value_delimiter = ',', default_value = "3,5,10")]
        degrees: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write one SVG per instance and degree here.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
    /// Training targets per image and level as `<image_id>.<level>.fct` tensors.
    Targets {
        annotations: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write perfect prediction tensors here.
        #[arg(long)]
        predictions_dir: Option<PathBuf>,
    },
    /// Detections from a directory of prediction tensors, as JSON lines.
    ///
    /// Target tensors are accepted as perfect predictions.
    Decode {
        predictions_dir: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Loss breakdown of predictions against targets, as JSON.
    Loss {
        targets_dir: PathBuf,
        predictions_dir: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Precision, recall and h-mean of detections against annotations.
    Eval {
        detections: PathBuf,
        annotations: PathBuf,
        /// JSON report path; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write a one-row CSV summary.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Annotations of highly curved instances.
    Subset {
        annotations: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Same as `--set subset_threshold=...`.
        #[arg(long)]
        threshold: Option<f64>,
        /// Vertices kept fixed: `first-last` or `sides` (both ends of each side).
        #[arg(long)]
        ends: Option<String>,
        /// Keep every instance of an image with at least one selected instance.
        #[arg(long)]
        whole_images: bool,
    },
    /// SVG per image: annotations in green, detections in red.
    Plot {
        annotations: PathBuf,
        #[arg(long)]
        detections: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Converts `x1,y1,...,[transcription]` text files into annotation JSON lines.
    Import {
        files: Vec<PathBuf>,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        /// Transcription marking do-not-care regions.
        #[arg(long, default_value = "###")]
        ignore_marker: String,
        /// Reject lines with a trailing transcription instead of dropping it.
        #[arg(long)]
        strict: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Writes a seeded synthetic annotation corpus.
    Synth {
        #[arg(value_enum)]
        corpus: Corpus,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Corpus {
    Ribbons,
    Circles,
    Squares,
    Rectangles,
    Curved,
    Pipeline,
}

impl Corpus {
    fn generator(self) -> fn(usize, u64) -> Vec<AnnotatedImage> {
        match self {
            Corpus::Ribbons => synth::ribbon_corpus,
            Corpus::Circles => synth::circle_corpus,
            Corpus::Squares => synth::square_corpus,
            Corpus::Rectangles => synth::rectangle_corpus,
            Corpus::Curved => synth::curved_ribbon_corpus,
            Corpus::Pipeline => synth::pipeline_corpus,
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.apply(o)?;
    }
    if let Command::Subset { threshold, ends, .. } = &cli.command {
        if let Some(t) = threshold {
            cfg.subset_threshold = *t;
        }
        if let Some(e) = ends {
            cfg.subset_ends = parse_ends(e)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(&cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Embed { annotations, output } => commands::embed_cmd(&cfg, annotations, output.as_deref()),
        Command::Reconstruct { signatures, output } => commands::reconstruct_cmd(&cfg, signatures, output.as_deref()),
        Command::Fidelity {
            annotations,
            degrees,
            output,
            svg_dir,
        } => commands::fidelity_cmd(&cfg, annotations, degrees, output.as_deref(), svg_dir.as_deref()),
        Command::Targets {
            annotations,
            out_dir,
            predictions_dir,
        } => commands::targets_cmd(&cfg, annotations, out_dir, predictions_dir.as_deref()),
        Command::Decode {
            predictions_dir,
            output,
        } => commands::decode_cmd(&cfg, predictions_dir, output.as_deref()),
        Command::Loss {
            targets_dir,
            predictions_dir,
            output,
        } => commands::loss_cmd(&cfg, targets_dir, predictions_dir, output.as_deref()),
        Command::Eval {
            detections,
            annotations,
            output,
            csv,
        } => commands::eval_cmd(&cfg, detections, annotations, output.as_deref(), csv.as_deref()),
        Command::Subset {
            annotations,
            output,
            whole_images,
            ..
        } => commands::subset_cmd(&cfg, annotations, output.as_deref(), *whole_images),
        Command::Plot {
            annotations,
            detections,
            out_dir,
        } => commands::plot_cmd(annotations, detections.as_deref(), out_dir),
        Command::Import {
            files,
            width,
            height,
            ignore_marker,
            strict,
            output,
        } => {
            let opts = DelimitedOptions {
                drop_transcription: !strict,
                ignore_marker: ignore_marker.clone(),
            };
            commands::import_cmd(files, *width, *height, &opts, output.as_deref())
        }
        Command::Synth {
            corpus,
            count,
            seed,
            output,
        } => commands::synth_cmd(corpus.generator(), *count, *seed, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fce: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
