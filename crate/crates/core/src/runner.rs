//! End-to-end commands behind the `detbench` binary.
//!
//! Detections live at `<detections>/<detector>/<sequence>/<image index>.det`
//! with 1-based image indices as in the manifest. A detector directory may
//! also hold a `provenance.json` with a `seed` field, which is copied into
//! the run metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{derive_seed, sample, BaselineKind, RandParams};
use crate::dataset::{
    fetch_dataset, load_detections, load_manifest, write_detections, DatasetManifest, FetchOptions, FetchReport,
};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::metrics::{aggregate, AggregateOptions};
use crate::protocol::{magnification_sweep, pair_repeatability, EvalParams, PairTask, RepeatabilityRecord};
use crate::report::{emit_scatter_grid, emit_sweep, write_file, ReportBundle, RunMetadata, SplitSummary, SweepSeries};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Name of the split that pools every task.
pub const ALL_SPLIT: &str = "all";

pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
}

/// Inputs shared by `evaluate` and `sweep`.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub manifest: PathBuf,
    /// Directory holding the sequence folders; defaults to the manifest's directory.
    pub data_root: Option<PathBuf>,
    pub detections: PathBuf,
    /// Detector subdirectories to use; all of them when `None`.
    pub detectors: Option<Vec<String>>,
    pub out: PathBuf,
    pub params: EvalParams,
    pub workers: usize,
    pub exclude_degenerate: bool,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, detections: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            data_root: None,
            detections: detections.into(),
            detectors: None,
            out: out.into(),
            params: EvalParams::default(),
            workers: 1,
            exclude_degenerate: false,
        }
    }

    fn data_root(&self) -> PathBuf {
        self.data_root.clone().unwrap_or_else(|| {
            self.manifest
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."))
        })
    }
}

/// Path of the detection file for one image.
pub fn detection_path(root: &Path, detector: &str, sequence: &str, index: usize) -> PathBuf {
    root.join(detector).join(sequence).join(format!("{index}.det"))
}

fn check_name(name: &str, what: &str) -> Result<()> {
    let mut parts = Path::new(name).components();
    match (parts.next(), parts.next()) {
        (Some(Component::Normal(_)), None) if !name.contains(char::is_whitespace) => Ok(()),
        _ => Err(Error::InvalidParameter(format!(
            "{what} `{name}` is not a plain directory name"
        ))),
    }
}

fn list_detectors(root: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
        if entry.path().is_dir() {
            let name = entry
                .file_name()
                .into_string()
                .map_err(|n| Error::InvalidParameter(format!("detector directory {n:?} is not UTF-8")))?;
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidParameter("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating output directory {}", dir.display()), e))?;
    let probe = dir.join(".detbench-write-test");
    fs::write(&probe, b"").map_err(|e| Error::io(format!("output directory {} is not writable", dir.display()), e))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Manifest, tasks and every detection list needed for a run.
pub struct LoadedRun {
    pub manifest: DatasetManifest,
    pub tasks: Vec<PairTask>,
    pub detectors: Vec<String>,
    /// `(detector, sequence, image index)` → detections.
    pub detections: BTreeMap<(String, String, usize), Vec<Region>>,
    /// SHA-256 of every input, keyed `manifest`, `data/...` or `detections/...`.
    pub checksums: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
}

impl LoadedRun {
    pub fn detections_for(&self, detector: &str, task: &PairTask, index: usize) -> &[Region] {
        &self.detections[&(detector.to_string(), task.sequence.clone(), index)]
    }
}

fn image_index(image_id: &str) -> usize {
    image_id
        .rsplit('/')
        .next()
        .and_then(|s| s.parse().ok())
        .expect("image ids are `<sequence>/<index>`")
}

/// Loads and validates everything a run reads, failing before any work
/// when detection files are missing.
pub fn load_run(config: &RunConfig, pool: &rayon::ThreadPool) -> Result<LoadedRun> {
    config.params.validate()?;
    let manifest_bytes = read_bytes(&config.manifest)?;
    let manifest = load_manifest(&config.manifest)?;
    let root = config.data_root();

    let detectors = match &config.detectors {
        Some(list) => {
            let mut list = list.clone();
            list.sort();
            list.dedup();
            list
        }
        None => list_detectors(&config.detections)?,
    };
    if detectors.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no detector directories under {}",
            config.detections.display()
        )));
    }
    for d in &detectors {
        check_name(d, "detector")?;
    }

    let mut wanted = Vec::new();
    for d in &detectors {
        for seq in &manifest.sequences {
            for k in 1..=seq.images.len() {
                wanted.push((d.clone(), seq.id.clone(), k));
            }
        }
    }
    let missing: Vec<PathBuf> = wanted
        .iter()
        .map(|(d, s, k)| detection_path(&config.detections, d, s, *k))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingDetections(missing));
    }

    let tasks = manifest.pair_tasks(&root)?;

    let loaded: Vec<Result<(String, Vec<Region>)>> = pool.install(|| {
        wanted
            .par_iter()
            .map(|(d, s, k)| {
                let path = detection_path(&config.detections, d, s, *k);
                let bytes = read_bytes(&path)?;
                let regions = load_detections(&path)?;
                Ok((sha256_hex(&bytes), regions))
            })
            .collect()
    });
    let mut detections = BTreeMap::new();
    let mut checksums = BTreeMap::new();
    checksums.insert("manifest".to_string(), sha256_hex(&manifest_bytes));
    for ((d, s, k), result) in wanted.into_iter().zip(loaded) {
        let (digest, regions) = result?;
        checksums.insert(format!("detections/{d}/{s}/{k}.det"), digest);
        detections.insert((d, s, k), regions);
    }
    for seq in &manifest.sequences {
        for h in &seq.homographies {
            let bytes = read_bytes(&root.join(&seq.id).join(&h.file))?;
            checksums.insert(format!("data/{}/{}", seq.id, h.file), sha256_hex(&bytes));
        }
    }

    let mut seeds = BTreeMap::new();
    for d in &detectors {
        let path = config.detections.join(d).join(PROVENANCE_FILE);
        if path.is_file() {
            let bytes = read_bytes(&path)?;
            let prov: Provenance = serde_json::from_slice(&bytes)?;
            checksums.insert(format!("detections/{d}/{PROVENANCE_FILE}"), sha256_hex(&bytes));
            seeds.insert(d.clone(), prov.seed);
        }
    }

    Ok(LoadedRun {
        manifest,
        tasks,
        detectors,
        detections,
        checksums,
        seeds,
    })
}

/// Every `(detector, task, n)` record, in detector, task, then `n` order.
pub fn compute_records(
    run: &LoadedRun,
    params: &EvalParams,
    pool: &rayon::ThreadPool,
) -> Result<Vec<RepeatabilityRecord>> {
    let cells: Vec<(&str, &PairTask, usize)> = run
        .detectors
        .iter()
        .flat_map(|d| {
            run.tasks
                .iter()
                .flat_map(move |t| params.top_n.iter().map(move |&n| (d.as_str(), t, n)))
        })
        .collect();
    pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, task, n)| {
                let refs = run.detections_for(d, task, image_index(&task.reference.id));
                let targets = run.detections_for(d, task, image_index(&task.target.id));
                pair_repeatability(d, refs, targets, task, params, n)
            })
            .collect()
    })
}

/// Per-nuisance splits (ranked) followed by the pooled split.
pub fn build_splits(
    records: &[RepeatabilityRecord],
    tasks: &[PairTask],
    options: AggregateOptions,
) -> Result<Vec<SplitSummary>> {
    let nuisances: BTreeSet<&str> = tasks.iter().map(|t| t.nuisance.as_str()).collect();
    let mut splits = Vec::with_capacity(nuisances.len() + 1);
    for nuisance in &nuisances {
        let ids: BTreeSet<&str> = tasks
            .iter()
            .filter(|t| t.nuisance == *nuisance)
            .map(|t| t.id.as_str())
            .collect();
        let subset: Vec<RepeatabilityRecord> = records
            .iter()
            .filter(|r| ids.contains(r.task.as_str()))
            .cloned()
            .collect();
        splits.push(SplitSummary {
            name: nuisance.to_string(),
            tasks: ids.len(),
            ranked: true,
            summaries: aggregate(&subset, options)?,
        });
    }
    splits.push(SplitSummary {
        name: ALL_SPLIT.to_string(),
        tasks: tasks.len(),
        ranked: false,
        summaries: aggregate(records, options)?,
    });
    Ok(splits)
}

#[derive(Clone, Debug, Serialize)]
struct RunInfo<'a> {
    tool_version: &'a str,
    command: &'a str,
    started_unix: u64,
    finished_unix: u64,
    workers: usize,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_run_info(dir: &Path, command: &str, started: u64, workers: usize) -> Result<()> {
    let info = RunInfo {
        tool_version: TOOL_VERSION,
        command,
        started_unix: started,
        finished_unix: unix_now(),
        workers,
    };
    write_file(
        &dir.join("run_info.json"),
        &(serde_json::to_string_pretty(&info)? + "\n"),
    )
}

#[derive(Clone, Debug)]
pub struct EvaluateOutcome {
    pub bundle: ReportBundle,
    /// Records whose filtered detection sets were empty.
    pub degenerate: usize,
}

/// Evaluates every detector on every task and writes results, tables and
/// figures into `config.out`. `scatter_references` selects the reference
/// rows of the scatter grid (all detectors when `None`).
pub fn evaluate(config: &RunConfig, scatter_references: Option<&[String]>) -> Result<EvaluateOutcome> {
    let started = unix_now();
    let pool = pool(config.workers)?;
    let run = load_run(config, &pool)?;
    prepare_out_dir(&config.out)?;

    let records = compute_records(&run, &config.params, &pool)?;
    let options = AggregateOptions {
        exclude_degenerate: config.exclude_degenerate,
    };
    let splits = build_splits(&records, &run.tasks, options)?;
    let degenerate = records.iter().filter(|r| r.degenerate).count();

    let references: Vec<String> = match scatter_references {
        Some(list) => list.to_vec(),
        None => run.detectors.clone(),
    };
    let n_max = *config.params.top_n.iter().max().expect("validated non-empty");
    let scatter = emit_scatter_grid(&records, &references, &run.detectors, n_max)?;

    let metadata = RunMetadata {
        tool_version: TOOL_VERSION.to_string(),
        dataset: run.manifest.name.clone(),
        params: config.params.clone(),
        exclude_degenerate: config.exclude_degenerate,
        seeds: run.seeds.clone(),
        inputs: run.checksums.clone(),
    };
    let mut bundle = ReportBundle::new(metadata, records, splits);
    bundle.write(&config.out, vec![(format!("scatter_n{n_max}.svg"), scatter)])?;
    write_run_info(&config.out, "evaluate", started, config.workers)?;
    Ok(EvaluateOutcome { bundle, degenerate })
}

#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub kinds: Vec<BaselineKind>,
    pub seed: u64,
    /// Regions per image.
    pub count: usize,
    pub params: RandParams,
    pub workers: usize,
}

impl BaselineConfig {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            manifest: manifest.into(),
            out: out.into(),
            kinds: BaselineKind::ALL.to_vec(),
            seed,
            count: 1000,
            params: RandParams::default(),
            workers: 1,
        }
    }
}

/// Seed for one generated file, fixed by the master seed, image and type.
pub fn baseline_seed(master: u64, sequence: &str, index: usize, kind: BaselineKind) -> u64 {
    derive_seed(master, &[sequence, &index.to_string(), kind.name()])
}

/// Writes one detection file per image and baseline type under
/// `<out>/<RAND-x>/<sequence>/<index>.det`; returns the number of files.
pub fn generate_baselines(config: &BaselineConfig) -> Result<usize> {
    config.params.validate()?;
    if config.count == 0 {
        return Err(Error::InvalidParameter("baseline count must be at least 1".into()));
    }
    let manifest = load_manifest(&config.manifest)?;
    prepare_out_dir(&config.out)?;
    let pool = pool(config.workers)?;

    let mut kinds = config.kinds.clone();
    kinds.sort();
    kinds.dedup();
    let mut jobs = Vec::new();
    for &kind in &kinds {
        for seq in &manifest.sequences {
            for (i, img) in seq.images.iter().enumerate() {
                jobs.push((kind, seq.id.as_str(), i + 1, img.width, img.height));
            }
        }
    }
    pool.install(|| {
        jobs.par_iter().try_for_each(|&(kind, seq, k, w, h)| {
            let params = config.params.with_seed(baseline_seed(config.seed, seq, k, kind));
            let regions = sample(kind, w as f64, h as f64, config.count, &params)?;
            write_detections(detection_path(&config.out, kind.name(), seq, k), &regions)
        })
    })?;
    for &kind in &kinds {
        let prov = Provenance {
            generator: kind.name().to_string(),
            seed: config.seed,
        };
        write_file(
            &config.out.join(kind.name()).join(PROVENANCE_FILE),
            &(serde_json::to_string_pretty(&prov)? + "\n"),
        )?;
    }
    Ok(jobs.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub tool_version: String,
    pub dataset: String,
    pub params: EvalParams,
    pub n: usize,
    pub gammas: Vec<f64>,
    pub series: Vec<SweepSeries>,
}

/// Mean repeatability over all tasks for each magnification factor, per
/// detector, at budget `n`. Writes `sweep.json` and `sweep.svg`.
pub fn sweep(config: &RunConfig, n: usize, gammas: &[f64]) -> Result<SweepReport> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter("empty magnification list".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "magnification factor {g} must be positive"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let started = unix_now();
    let pool = pool(config.workers)?;
    let run = load_run(config, &pool)?;
    prepare_out_dir(&config.out)?;

    let mut gammas = gammas.to_vec();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();

    let mut series = Vec::with_capacity(run.detectors.len());
    for d in &run.detectors {
        let per_task: Vec<Vec<(f64, f64)>> = pool.install(|| {
            run.tasks
                .par_iter()
                .map(|task| {
                    let refs = run.detections_for(d, task, image_index(&task.reference.id));
                    let targets = run.detections_for(d, task, image_index(&task.target.id));
                    magnification_sweep(refs, targets, task, &config.params, n, &gammas)
                })
                .collect::<Result<_>>()
        })?;
        let points = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let sum: f64 = per_task.iter().map(|t| t[i].1).sum();
                (g, sum / per_task.len().max(1) as f64)
            })
            .collect();
        series.push(SweepSeries {
            detector: d.clone(),
            points,
        });
    }

    let report = SweepReport {
        tool_version: TOOL_VERSION.to_string(),
        dataset: run.manifest.name.clone(),
        params: config.params.clone(),
        n,
        gammas,
        series,
    };
    write_file(
        &config.out.join("sweep.json"),
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    write_file(&config.out.join("sweep.svg"), &emit_sweep(&report.series))?;
    write_run_info(&config.out, "sweep", started, config.workers)?;
    Ok(report)
}

/// Downloads every manifest file with a source into `dest`.
pub fn fetch(manifest: &Path, dest: &Path, options: &FetchOptions) -> Result<FetchReport> {
    let manifest = load_manifest(manifest)?;
    fetch_dataset(&manifest, dest, options)
}
