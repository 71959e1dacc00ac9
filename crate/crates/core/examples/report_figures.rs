//! Builds a results bundle from hand-made records and writes the tables
//! and figures.
//!
//!     cargo run --example report_figures -- [out-dir]

use std::collections::BTreeMap;
use std::path::PathBuf;

use detbench::metrics::{aggregate, AggregateOptions};
use detbench::protocol::{EvalParams, RepeatabilityRecord};
use detbench::report::{emit_scatter_grid, emit_sweep, ReportBundle, RunMetadata, SplitSummary, SweepSeries};

fn record(detector: &str, task: usize, n: usize, rep: f64) -> RepeatabilityRecord {
    RepeatabilityRecord {
        detector: detector.to_string(),
        task: format!("seq{:02}/1-2", task),
        n,
        rep,
        correspondences: 0,
        ref_filtered: 0,
        target_filtered: 0,
        degenerate: false,
        warp_drops: 0,
    }
}

fn main() -> detbench::error::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("detbench-report"));
    let params = EvalParams::default();

    let mut records = Vec::new();
    for t in 0..20 {
        let difficulty = t as f64 / 20.0;
        for &n in &params.top_n {
            let budget = (n as f64).log10() - 2.0;
            records.push(record("HESAFF-A", t, n, 0.65 - 0.3 * difficulty - 0.02 * budget));
            records.push(record("DOG-S", t, n, 0.55 - 0.25 * difficulty + 0.01 * budget));
            records.push(record("RAND-T", t, n, 0.05 + 0.2 * budget));
        }
    }
    let summaries = aggregate(&records, AggregateOptions::default())?;
    let split = SplitSummary {
        name: "example".into(),
        tasks: 20,
        ranked: true,
        summaries,
    };
    let metadata = RunMetadata {
        tool_version: detbench::runner::TOOL_VERSION.into(),
        dataset: "hand-made".into(),
        params,
        exclude_degenerate: false,
        seeds: BTreeMap::new(),
        inputs: BTreeMap::new(),
    };
    let mut bundle = ReportBundle::new(metadata, records.clone(), vec![split]);

    let names: Vec<String> = ["DOG-S", "HESAFF-A", "RAND-T"].map(String::from).to_vec();
    let scatter = emit_scatter_grid(&records, &names[..1], &names, 1000)?;
    let sweep = emit_sweep(&[SweepSeries {
        detector: "HESAFF-A".into(),
        points: vec![(0.5, 0.52), (1.0, 0.53), (2.0, 0.52), (4.0, 0.52)],
    }]);
    bundle.write(&out, vec![("scatter.svg".into(), scatter), ("sweep.svg".into(), sweep)])?;
    print!("{}", std::fs::read_to_string(out.join("table.csv")).unwrap_or_default());
    println!("wrote {} files to {}", bundle.artifacts.len(), out.display());
    for a in &bundle.artifacts {
        println!("  {a}");
    }
    Ok(())
}
