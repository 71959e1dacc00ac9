//! Result bundles, tables and figures.
//!
//! Everything written here is a pure function of the bundle: floats use
//! fixed formatting, maps are ordered, and the wall-clock time of a run
//! goes to a separate `run_info.json` instead of the results file.

mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DetectorSummary;
use crate::protocol::{EvalParams, RepeatabilityRecord};

pub use svg::{emit_box_whisker, emit_scatter_grid, emit_sweep, SweepSeries, BOX_X0, BOX_X_SCALE};

pub const RESULTS_SCHEMA: &str = "detbench-results/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub dataset: String,
    pub params: EvalParams,
    pub exclude_degenerate: bool,
    /// Seeds that produced any of the inputs, keyed by detector.
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every input file, keyed by path relative to its root.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub name: String,
    pub tasks: usize,
    /// Whether this split contributes to the average rank.
    pub ranked: bool,
    pub summaries: Vec<DetectorSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema: String,
    pub metadata: RunMetadata,
    pub records: Vec<RepeatabilityRecord>,
    pub splits: Vec<SplitSummary>,
    pub average_ranks: BTreeMap<String, f64>,
    /// Files written next to the results, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl ReportBundle {
    pub fn new(metadata: RunMetadata, records: Vec<RepeatabilityRecord>, splits: Vec<SplitSummary>) -> Self {
        let average_ranks =
            crate::metrics::average_ranks(splits.iter().filter(|s| s.ranked).map(|s| s.summaries.as_slice()));
        Self {
            schema: RESULTS_SCHEMA.to_string(),
            metadata,
            records,
            splits,
            average_ranks,
            artifacts: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: Self = serde_json::from_str(text)?;
        if bundle.schema != RESULTS_SCHEMA {
            return Err(Error::InvalidParameter(format!(
                "unsupported results schema `{}`",
                bundle.schema
            )));
        }
        Ok(bundle)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn split(&self, name: &str) -> Option<&SplitSummary> {
        self.splits.iter().find(|s| s.name == name)
    }

    /// Writes `results.json`, the tables, the box plots and any `extra`
    /// `(name, body)` files into `dir`, recording their names in `artifacts`.
    pub fn write(&mut self, dir: &Path, extra: Vec<(String, String)>) -> Result<()> {
        let mut files = extra;
        for split in &self.splits {
            let stem = file_stem(&split.name);
            files.push((format!("table_{stem}.csv"), machine_table(split)?));
            files.push((format!("box_{stem}.svg"), emit_box_whisker(&split.summaries)));
        }
        files.push(("table.csv".to_string(), human_table(self)?));
        self.artifacts = files.iter().map(|(name, _)| name.clone()).collect();
        self.artifacts.push("results.json".to_string());
        self.artifacts.sort();
        for (name, body) in &files {
            write_file(&dir.join(name), body)?;
        }
        write_file(&dir.join("results.json"), &self.to_json()?)
    }
}

pub(crate) fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("flushing table", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Full-precision table of one split; empty `stability` means undefined.
pub fn machine_table(split: &SplitSummary) -> Result<String> {
    let ns: Vec<usize> = split
        .summaries
        .first()
        .map(|s| s.rep_by_n.keys().copied().collect())
        .unwrap_or_default();
    let mut header: Vec<String> = ["detector", "rep", "stability", "rank"].map(String::from).to_vec();
    header.extend(ns.iter().map(|n| format!("rep_{n}")));
    header.extend(["p10", "p25", "p50", "p75", "p90", "mean"].map(String::from));
    let mut rows = vec![header];
    for s in &split.summaries {
        let mut row = vec![
            s.detector.clone(),
            s.rep.to_string(),
            s.stability.map(|v| v.to_string()).unwrap_or_default(),
            s.rank.to_string(),
        ];
        row.extend(
            ns.iter()
                .map(|n| s.rep_by_n.get(n).map(|v| v.to_string()).unwrap_or_default()),
        );
        let p = &s.percentiles;
        row.extend([p.p10, p.p25, p.p50, p.p75, p.p90, s.mean].map(|v| v.to_string()));
        rows.push(row);
    }
    csv_text(rows)
}

/// A machine table row: detector name and `column → value`.
pub type TableRow = (String, BTreeMap<String, Option<f64>>);

/// Reads a machine table back into rows.
pub fn parse_machine_table(text: &str) -> Result<Vec<TableRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut values = BTreeMap::new();
        for (name, field) in header.iter().zip(record.iter()).skip(1) {
            let value = if field.is_empty() {
                None
            } else {
                Some(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("column `{name}`: invalid number `{field}`")))?,
                )
            };
            values.insert(name.to_string(), value);
        }
        out.push((record[0].to_string(), values));
    }
    Ok(out)
}

/// Combined table with `stb`, `rep` (percent) and `rnk` per ranked split and
/// the average rank, best first, rounded to two decimals.
pub fn human_table(bundle: &ReportBundle) -> Result<String> {
    let ranked: Vec<&SplitSummary> = bundle.splits.iter().filter(|s| s.ranked).collect();
    let mut header = vec!["detector".to_string()];
    for s in &ranked {
        header.extend([
            format!("{} stb", s.name),
            format!("{} rep", s.name),
            format!("{} rnk", s.name),
        ]);
    }
    header.push("Avg. rnk".to_string());

    let mut detectors: Vec<(&String, f64)> = bundle.average_ranks.iter().map(|(d, r)| (d, *r)).collect();
    detectors.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut rows = vec![header];
    for (detector, avg) in detectors {
        let mut row = vec![detector.clone()];
        for s in &ranked {
            match s.summaries.iter().find(|x| &x.detector == detector) {
                Some(x) => row.extend([
                    x.stability.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()),
                    format!("{:.2}", 100.0 * x.rep),
                    x.rank.to_string(),
                ]),
                None => row.extend(["-", "-", "-"].map(String::from)),
            }
        }
        row.push(format!("{avg:.2}"));
        rows.push(row);
    }
    csv_text(rows)
}
