//! Manifests, homography files and detection files, including conversion
//! of a legacy affine-region file. Pass a manifest path to fetch its files:
//!
//!     cargo run --example dataset_files
//!     cargo run --example dataset_files -- manifest.json dest-dir

use std::path::PathBuf;

use detbench::dataset::{
    convert_legacy, fetch_dataset, load_detections, load_manifest, FetchOptions, FetchOutcome, SyntheticDataset,
};

fn main() -> detbench::error::Result<()> {
    let args: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    if let [manifest, dest] = args.as_slice() {
        let manifest = load_manifest(manifest)?;
        let report = fetch_dataset(&manifest, dest, &FetchOptions::default())?;
        for f in &report.files {
            if let FetchOutcome::Failed { message } = &f.outcome {
                println!("failed {}: {message}", f.path.display());
            }
        }
        println!(
            "{} downloaded, {} verified, {} failed",
            report.downloaded(),
            report.verified(),
            report.failed()
        );
        return Ok(());
    }

    let dir = std::env::temp_dir().join("detbench-files");
    let manifest = SyntheticDataset {
        sequences: 2,
        images: 3,
        ..Default::default()
    }
    .write(&dir)?;
    println!(
        "manifest `{}`: {} sequences, {} images, {} pairs",
        manifest.name,
        manifest.sequences.len(),
        manifest.image_count(),
        manifest.pair_count()
    );
    for task in manifest.pair_tasks(&dir)? {
        let m = task.homography.matrix();
        println!(
            "  {:<12} {:<12} h = [{:.3} {:.3} {:.1}; {:.3} {:.3} {:.1}; ...]",
            task.id,
            task.nuisance,
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)]
        );
    }

    let legacy = dir.join("legacy.txt");
    std::fs::write(
        &legacy,
        "1.0\n3\n100 50 0.01 0 0.01\n200 80 0.02 0.005 0.01\n30 30 0.04 0 0.04\n",
    )
    .map_err(|e| detbench::error::Error::Io {
        context: "writing legacy file".into(),
        source: e,
    })?;
    let converted = dir.join("converted.det");
    let n = convert_legacy(&legacy, &converted)?;
    println!("\nconverted {n} legacy regions:");
    print!("{}", std::fs::read_to_string(&converted).unwrap_or_default());
    for r in load_detections(&converted)? {
        println!("  area {:8.2}  score {}", r.area(), r.score());
    }
    Ok(())
}
