use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use detbench::baselines::{BaselineKind, RandParams};
use detbench::dataset::{scan_dataset, FetchOptions, FetchOutcome, Layout};
use detbench::error::{Error, Result};
use detbench::geometry::QuickReject;
use detbench::protocol::EvalParams;
use detbench::runner::{self, BaselineConfig, RunConfig};

/// Exit code for a strict run that produced degenerate records.
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "detbench",
    version,
    about = "Repeatability benchmark for local feature detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score detection files against a dataset and write results, tables and figures.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Detection budgets.
        #[arg(long, value_delimiter = ',', default_value = "100,200,500,1000")]
        top_n: Vec<usize>,
        /// Leave degenerate records out of the aggregates.
        #[arg(long)]
        exclude_degenerate: bool,
        /// Exit with code 3 when any record is degenerate.
        #[arg(long)]
        strict: bool,
        /// Reference detectors for the scatter grid (default: all).
        #[arg(long, value_delimiter = ',')]
        scatter_references: Option<Vec<String>>,
    },
    /// Generate random baseline detections for every image of a dataset.
    Baseline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "rand-t,rand-s,rand-a")]
        types: Vec<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Regions per image.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0.1)]
        s_min: f64,
        #[arg(long, default_value_t = 50.0)]
        s_max: f64,
        #[arg(long, default_value_t = 10.0)]
        point_radius: f64,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Repeatability as a function of a magnification factor applied to all regions.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4,8")]
        gammas: Vec<f64>,
        /// Detection budget.
        #[arg(long, default_value_t = 1000)]
        top_n: usize,
    },
    /// Download and verify the files listed in a manifest.
    Fetch {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        dest: PathBuf,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        #[arg(long, default_value_t = 3)]
        attempts: usize,
    },
    /// Write a manifest for an extracted dataset by scanning its directories.
    Scan {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, value_enum)]
        layout: LayoutArg,
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory with the sequence folders (default: the manifest's directory).
    #[arg(long)]
    data_root: Option<PathBuf>,
    #[arg(long)]
    detections: PathBuf,
    /// Detector subdirectories to use (default: all).
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
    /// Maximum overlap error for a correspondence.
    #[arg(long, default_value_t = 0.4)]
    overlap_eps: f64,
    /// Area the reference region is rescaled to before measuring overlap.
    #[arg(long, default_value_t = 900.0)]
    norm_area: f64,
    #[arg(long, default_value_t = 10.0)]
    point_radius: f64,
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Reject pairs on the unnormalized enclosing circles (reproduces the scale bias).
    #[arg(long)]
    legacy_quick_reject: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Hpatches,
    Vgg,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunArgs {
    fn config(self, top_n: Vec<usize>, exclude_degenerate: bool) -> RunConfig {
        RunConfig {
            manifest: self.manifest,
            data_root: self.data_root,
            detections: self.detections,
            detectors: self.detectors,
            out: self.out,
            params: EvalParams {
                overlap_eps: self.overlap_eps,
                norm_area: self.norm_area,
                top_n,
                point_radius: self.point_radius,
                quick_reject: if self.legacy_quick_reject {
                    QuickReject::Legacy
                } else {
                    QuickReject::Normalized
                },
                ..EvalParams::default()
            },
            workers: self.workers,
            exclude_degenerate,
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Evaluate {
            run,
            top_n,
            exclude_degenerate,
            strict,
            scatter_references,
        } => {
            let config = run.config(top_n, exclude_degenerate);
            let outcome = runner::evaluate(&config, scatter_references.as_deref())?;
            let bundle = &outcome.bundle;
            eprintln!(
                "{} records, {} degenerate; results in {}",
                bundle.records.len(),
                outcome.degenerate,
                config.out.join("results.json").display()
            );
            let mut ranked: Vec<_> = bundle.average_ranks.iter().collect();
            ranked.sort_by(|a, b| a.1.total_cmp(b.1).then_with(|| a.0.cmp(b.0)));
            for (detector, rank) in ranked {
                eprintln!("  {detector:<16} avg rank {rank:.2}");
            }
            Ok(if strict && outcome.degenerate > 0 {
                EXIT_PARTIAL
            } else {
                0
            })
        }
        Command::Baseline {
            manifest,
            types,
            seed,
            out,
            count,
            s_min,
            s_max,
            point_radius,
            workers,
        } => {
            let kinds = types
                .iter()
                .map(|t| BaselineKind::parse(t))
                .collect::<Result<Vec<_>>>()?;
            let config = BaselineConfig {
                kinds,
                count,
                params: RandParams {
                    s_min,
                    s_max,
                    point_radius,
                    seed,
                },
                workers,
                ..BaselineConfig::new(manifest, out, seed)
            };
            let files = runner::generate_baselines(&config)?;
            eprintln!("wrote {files} detection files under {}", config.out.display());
            Ok(0)
        }
        Command::Sweep { run, gammas, top_n } => {
            let config = run.config(vec![top_n], false);
            let report = runner::sweep(&config, top_n, &gammas)?;
            for s in &report.series {
                eprintln!("  {:<16} spread {:.4}", s.detector, s.spread());
            }
            Ok(0)
        }
        Command::Fetch {
            manifest,
            dest,
            concurrency,
            attempts,
        } => {
            let options = FetchOptions {
                concurrency,
                max_attempts: attempts,
                backoff: Duration::from_millis(500),
                ..FetchOptions::default()
            };
            let report = runner::fetch(&manifest, &dest, &options)?;
            for f in &report.files {
                if let FetchOutcome::Failed { message } = &f.outcome {
                    eprintln!("  failed {}: {message}", f.path.display());
                }
            }
            eprintln!(
                "{} downloaded, {} already present, {} failed, {} without a source",
                report.downloaded(),
                report.verified(),
                report.failed(),
                report.without_source()
            );
            if report.failed() > 0 {
                return Err(Error::Download {
                    url: manifest.display().to_string(),
                    message: format!("{} file(s) could not be fetched", report.failed()),
                });
            }
            Ok(0)
        }
        Command::Scan {
            root,
            layout,
            name,
            out,
        } => {
            let layout = match layout {
                LayoutArg::Hpatches => Layout::HPatches,
                LayoutArg::Vgg => Layout::VggAffine,
            };
            let manifest = scan_dataset(&root, layout, &name)?;
            std::fs::write(&out, manifest.to_json()?).map_err(|e| Error::Io {
                context: format!("writing {}", out.display()),
                source: e,
            })?;
            eprintln!(
                "{} sequences, {} images, {} pairs",
                manifest.sequences.len(),
                manifest.image_count(),
                manifest.pair_count()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
