mod common;

use std::path::Path;
use std::process::{Command, Output};

use detbench::dataset::{format_detections, load_detections, SyntheticDataset, SyntheticDetector};
use detbench::geometry::Region;
use detbench::report::ReportBundle;

fn detbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detbench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

fn toy_detections(n: usize) -> String {
    let regions: Vec<Region> = (0..n)
        .map(|i| {
            let x = 10.0 + (i % 20) as f64 * 15.0;
            let y = 10.0 + (i / 20) as f64 * 15.0;
            Region::from_shape(
                nalgebra::Point2::new(x, y),
                0.02,
                0.004 * (i % 3) as f64,
                0.03,
                i as f64,
            )
            .unwrap()
        })
        .collect();
    format_detections(&regions)
}

#[test]
fn self_evaluation_under_identity_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 2, 320, 240);
    let det = toy_detections(250);
    write(&dir.path().join("det/ONE/toy/1.det"), &det);
    write(&dir.path().join("det/ONE/toy/2.det"), &det);

    let out = detbench(
        &[
            "evaluate",
            "--manifest",
            "manifest.json",
            "--detections",
            "det",
            "--out",
            "res",
            "--workers",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let bundle = ReportBundle::load(dir.path().join("res/results.json")).unwrap();
    assert_eq!(bundle.records.len(), 4);
    for r in &bundle.records {
        assert_eq!(r.rep, 1.0, "{r:?}");
    }
    let all = bundle.split("all").unwrap();
    assert_eq!(all.summaries[0].rep, 1.0);
    assert_eq!(all.summaries[0].stability, Some(0.0));
    for artifact in &bundle.artifacts {
        assert!(dir.path().join("res").join(artifact).is_file(), "{artifact}");
    }
    assert!(dir.path().join("res/run_info.json").is_file());
}

#[test]
fn missing_detections_are_listed_before_work() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 3, 100, 100);
    write(&dir.path().join("det/A/toy/1.det"), &toy_detections(3));
    write(&dir.path().join("det/B/toy/3.det"), &toy_detections(3));
    let out = detbench(
        &[
            "evaluate",
            "--manifest",
            "manifest.json",
            "--detections",
            "det",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for missing in ["A/toy/2.det", "A/toy/3.det", "B/toy/1.det", "B/toy/2.det"] {
        assert!(err.contains(missing), "{err}");
    }
    assert!(!dir.path().join("res/results.json").exists());
}

#[test]
fn strict_mode_reports_degenerate_tasks() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 2, 320, 240);
    write(&dir.path().join("det/E/toy/1.det"), &toy_detections(10));
    write(&dir.path().join("det/E/toy/2.det"), "detbench-det/1\n0\n");
    let args = [
        "evaluate",
        "--manifest",
        "manifest.json",
        "--detections",
        "det",
        "--out",
        "res",
        "--top-n",
        "5,10",
    ];
    let lenient = detbench(&args, dir.path());
    assert_eq!(lenient.status.code(), Some(0), "{}", stderr(&lenient));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(detbench(&strict, dir.path()).status.code(), Some(3));
    let bundle = ReportBundle::load(dir.path().join("res/results.json")).unwrap();
    assert!(bundle.records.iter().all(|r| r.degenerate && r.rep == 0.0));
    assert_eq!(bundle.splits[0].summaries[0].stability, None);
}

#[test]
fn invalid_inputs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 2, 100, 100);
    write(&dir.path().join("det/A/toy/1.det"), "detbench-det/1\n1\n1 1 -1 0 1 1\n");
    write(&dir.path().join("det/A/toy/2.det"), &toy_detections(2));
    let base = [
        "evaluate",
        "--manifest",
        "manifest.json",
        "--detections",
        "det",
        "--out",
        "res",
    ];
    let out = detbench(&base, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));

    let mut bad_eps = base.to_vec();
    bad_eps.extend(["--overlap-eps", "1.5"]);
    assert_eq!(detbench(&bad_eps, dir.path()).status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_startup_error() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 2, 100, 100);
    write(&dir.path().join("det/A/toy/1.det"), &toy_detections(2));
    write(&dir.path().join("det/A/toy/2.det"), &toy_detections(2));
    write(&dir.path().join("blocker"), "a file, not a directory");
    let out = detbench(
        &[
            "evaluate",
            "--manifest",
            "manifest.json",
            "--detections",
            "det",
            "--out",
            "blocker/res",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

fn synthetic(dir: &Path) {
    let data = dir.join("data");
    let manifest = SyntheticDataset {
        sequences: 3,
        images: 3,
        ..Default::default()
    }
    .write(&data)
    .unwrap();
    SyntheticDetector {
        regions: 300,
        seed: 9,
        ..Default::default()
    }
    .write(&manifest, &data, &dir.join("det"), "SYN-A")
    .unwrap();
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    synthetic(dir.path());
    let out = detbench(
        &[
            "baseline",
            "--manifest",
            "data/manifest.json",
            "--seed",
            "11",
            "--out",
            "det",
            "--count",
            "200",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let run = |workers: &str, out: &str| {
        let o = detbench(
            &[
                "evaluate",
                "--manifest",
                "data/manifest.json",
                "--detections",
                "det",
                "--out",
                out,
                "--workers",
                workers,
                "--top-n",
                "50,100,200",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run("1", "one");
    run("4", "four");
    run("4", "again");
    for file in [
        "results.json",
        "table.csv",
        "table_all.csv",
        "box_all.svg",
        "scatter_n200.svg",
    ] {
        let a = std::fs::read(dir.path().join("one").join(file)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("four").join(file)).unwrap(), "{file}");
        assert_eq!(a, std::fs::read(dir.path().join("again").join(file)).unwrap(), "{file}");
    }
    let bundle = ReportBundle::load(dir.path().join("one/results.json")).unwrap();
    assert_eq!(bundle.records.len(), 4 * 6 * 3);
    assert_eq!(bundle.metadata.seeds.get("RAND-T"), Some(&11));
    assert!(bundle.metadata.inputs.contains_key("detections/SYN-A/v_001/2.det"));
    assert!(bundle.metadata.inputs.contains_key("data/v_001/H_1_2"));
}

#[test]
fn baselines_are_seeded_per_image() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 3, 200, 150);
    let gen = |seed: &str, out: &str| {
        let o = detbench(
            &[
                "baseline",
                "--manifest",
                "manifest.json",
                "--seed",
                seed,
                "--out",
                out,
                "--count",
                "40",
                "--types",
                "rand-t,rand-a",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    };
    gen("1", "a");
    gen("1", "b");
    gen("2", "c");
    for kind in ["RAND-T", "RAND-A"] {
        for k in 1..=3 {
            let rel = format!("{kind}/toy/{k}.det");
            let a = std::fs::read(dir.path().join("a").join(&rel)).unwrap();
            assert_eq!(a, std::fs::read(dir.path().join("b").join(&rel)).unwrap());
            let c = load_detections(dir.path().join("c").join(&rel)).unwrap();
            let a = load_detections(dir.path().join("a").join(&rel)).unwrap();
            assert_eq!(a.len(), c.len());
            assert_ne!(a[0].center(), c[0].center());
        }
    }
    assert!(!dir.path().join("a/RAND-S").exists());
    let one = load_detections(dir.path().join("a/RAND-T/toy/1.det")).unwrap();
    let two = load_detections(dir.path().join("a/RAND-T/toy/2.det")).unwrap();
    assert_ne!(one[0].center(), two[0].center());
}

#[test]
fn sweep_at_unit_gamma_matches_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    synthetic(dir.path());
    let common_args = ["--manifest", "data/manifest.json", "--detections", "det"];
    let mut eval = vec!["evaluate"];
    eval.extend(common_args);
    eval.extend(["--out", "eval", "--top-n", "200"]);
    assert!(detbench(&eval, dir.path()).status.success());
    let mut sweep = vec!["sweep"];
    sweep.extend(common_args);
    sweep.extend(["--out", "sweep", "--top-n", "200", "--gammas", "1"]);
    let o = detbench(&sweep, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));

    let bundle = ReportBundle::load(dir.path().join("eval/results.json")).unwrap();
    let rep = bundle.split("all").unwrap().summaries[0].rep_by_n[&200];
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep/sweep.json")).unwrap()).unwrap();
    let swept = report["series"][0]["points"][0][1].as_f64().unwrap();
    assert!((swept - rep).abs() < 1e-12, "{swept} vs {rep}");
    let svg = std::fs::read_to_string(dir.path().join("sweep/sweep.svg")).unwrap();
    assert!(!svg.contains("<polyline"));
}

#[test]
fn fetch_without_sources_succeeds_offline() {
    let dir = tempfile::tempdir().unwrap();
    common::identity_dataset(dir.path(), "toy", 2, 10, 10);
    let o = detbench(&["fetch", "--manifest", "manifest.json", "--dest", "dest"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("3 without a source"), "{}", stderr(&o));
}
