use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rodkit_cli::commands::{self, AnnotateMode, SequenceDetection};
use rodkit_cli::dataset::check_overwrite;
use rodkit_cli::plot::{confmap_image, overlay, ramap_image};
use rodkit_cli::{exit_code, Dataset, PipelineConfig, Supervision};
use rodkit_core::io::load_jsonl;
use rodkit_core::postproc::Detection;
use rodkit_core::{Error, Result};
use rodkit_nn::Variant;

#[derive(Parser)]
#[command(name = "rodkit", version, about = "Radar object detection pipeline on synthetic FMCW data")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RODKIT_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic sequences.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        sequences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Write camera-only (and with `--mode crf`, fused) annotations.
    Annotate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: AnnotateMode,
        #[arg(long)]
        force: bool,
    },
    /// Train a network and write its checkpoint.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "crf")]
        supervision: Supervision,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Detect objects with a trained network; repeat --stride for a speed table.
    Infer {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        stride: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Score detections against the ground truth.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        dets: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also score the CFAR baseline.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        force: bool,
    },
    /// Render a frame as a PGM/PPM image.
    Plot {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Sequence name; defaults to the first one.
        #[arg(long)]
        sequence: Option<String>,
        #[arg(long, value_enum)]
        what: PlotKind,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Labels rendered by `--what confmap` (and drawn by `--what dets` without `--dets`).
        #[arg(long, value_enum, default_value = "gt")]
        source: Supervision,
        #[arg(long)]
        dets: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Ramap,
    Confmap,
    Dets,
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Error::config(format!("--{name} is required (or set it under [paths])")))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, out, sequences, seed, force } => {
            let cfg = PipelineConfig::load_or_default(config.as_deref())?;
            let out = required(out, &cfg.paths.data, "out")?;
            let s = commands::simulate(&cfg, &out, sequences, seed, force)?;
            println!("wrote {} sequences to {}", s.sequences.len(), out.display());
            for d in rodkit_core::radar::Difficulty::ALL {
                println!("  {:<6} {}", d.name(), s.counts.get(&d).copied().unwrap_or(0));
            }
        }
        Command::Annotate { config, data, mode, force } => {
            let cfg = PipelineConfig::load_or_default(config.as_deref())?;
            let data = required(data, &cfg.paths.data, "data")?;
            let s = commands::annotate(&cfg, &data, mode, force)?;
            println!("annotated {} sequences: {} camera-only records", s.sequences, s.co_records);
            if mode == AnnotateMode::Crf {
                println!("  {} fused records", s.crf_records);
            }
        }
        Command::Train { config, data, supervision, variant, out, force } => {
            let cfg = PipelineConfig::load_or_default(config.as_deref())?;
            let data = required(data, &cfg.paths.data, "data")?;
            let out = required(out, &cfg.paths.checkpoint, "out")?;
            let rep = commands::train_command(&cfg, &data, supervision, variant, &out, force, |e| {
                println!("epoch {:>4}  loss {:>12.4}  steps {:>4}  {:>8.1}s", e.epoch, e.mean_loss, e.steps, e.elapsed_s);
            })?;
            println!("{} steps; checkpoint {}", rep.step_losses.len(), out.display());
        }
        Command::Infer { config, data, ckpt, stride, out, force } => {
            let cfg = PipelineConfig::load_or_default(config.as_deref())?;
            let data = required(data, &cfg.paths.data, "data")?;
            let ckpt = required(ckpt, &cfg.paths.checkpoint, "ckpt")?;
            let out = required(out, &cfg.paths.detections, "out")?;
            let strides = if stride.is_empty() { vec![cfg.postproc.stride] } else { stride };
            let rows = commands::infer(&cfg, &data, &ckpt, &strides, &out, force)?;
            print!("{}", commands::render_infer_table(&rows));
        }
        Command::Eval { config, data, dets, report, baseline, force } => {
            let cfg = PipelineConfig::load_or_default(config.as_deref())?;
            let data = required(data, &cfg.paths.data, "data")?;
            let dets = required(dets, &cfg.paths.detections, "dets")?;
            let report = report.or(cfg.paths.report.clone());
            let out = commands::eval_command(&cfg, &data, &dets, report.as_deref(), baseline, force)?;
            print!("{}", out.table);
        }
        Command::Plot { config, data, sequence, what, frame, source, dets, out, force } => {
            let cfg = PipelineConfig::load_or_default(config.as_deref())?;
            let data = required(data, &cfg.paths.data, "data")?;
            check_overwrite(&out, force)?;
            plot(&cfg, &data, sequence.as_deref(), what, frame, source, dets.as_deref(), &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plot(cfg: &PipelineConfig, data: &Path, sequence: Option<&str>, what: PlotKind, frame: usize, source: Supervision, dets: Option<&Path>, out: &Path) -> Result<()> {
    let ds = Dataset::open(data)?;
    let seq = match sequence {
        Some(name) => ds.get(name)?,
        None => &ds.sequences[0],
    };
    if frame >= seq.meta.num_frames {
        return Err(Error::config(format!("frame {frame} outside 0..{}", seq.meta.num_frames)));
    }
    let img = match what {
        PlotKind::Ramap => ramap_image(&seq.ramaps()?[frame]),
        PlotKind::Confmap => confmap_image(&commands::label_confmaps(cfg, seq, source)?[frame]),
        PlotKind::Dets => {
            let marks: Vec<Detection> = match dets {
                Some(p) => load_jsonl::<SequenceDetection>(p)?
                    .into_iter()
                    .filter(|d| d.sequence == seq.meta.name && d.detection.frame_index == frame)
                    .map(|d| d.detection)
                    .collect(),
                None => seq
                    .labels(source)?
                    .iter()
                    .filter(|r| r.frame == frame)
                    .map(|r| Detection { frame_index: frame, class: r.class, range_m: r.range_m, azimuth_rad: r.azimuth_rad, confidence: r.score })
                    .collect(),
            };
            overlay(&ramap_image(&seq.ramaps()?[frame]), &marks, &cfg.radar.grid())
        }
    };
    img.save(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
