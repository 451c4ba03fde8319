use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use kq_core::domain::{read_nodes_csv, read_weights_csv};
use kq_core::wce::squared_wce_optimal;
use kq_core::GaussianKernel;
use serde_json::Value;

fn kq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kq"))
        .args(args)
        .env_remove("KQ_THREADS")
        .output()
        .expect("kq runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn generate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    kq(&args)
}

const FIG4: [&str; 12] = [
    "--dim", "2", "--n", "50", "--method", "pwgd-fs", "--P", "0.6", "--M", "0.35", "--seed", "1",
];

#[test]
fn generate_writes_four_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), &FIG4);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["points.csv", "weights.csv", "report.json", "points.svg"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["method"], "pwgd-fs(0.6,0.35)");
    assert!(r["sq_wce_optimal"].as_f64().unwrap() < r["sq_wce_equal"].as_f64().unwrap());
    assert!(!dir.path().join("points.csv.tmp").exists());
}

#[test]
fn written_files_reproduce_reported_values() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), &["--dim", "2", "--n", "12", "--method", "sbq"])
        .status
        .success());
    let open = |f: &str| BufReader::new(fs::File::open(dir.path().join(f)).unwrap());
    let nodes = read_nodes_csv(open("points.csv")).unwrap();
    let weights = read_weights_csv(open("weights.csv")).unwrap();
    assert_eq!((nodes.len(), weights.len()), (12, 12));
    let sq = squared_wce_optimal(&nodes, &GaussianKernel::default()).unwrap();
    assert_eq!(sq, report(dir.path())["sq_wce_optimal"].as_f64().unwrap());
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let flags = [
        "--dim",
        "2",
        "--n",
        "20",
        "--method",
        "pwgd-gauss",
        "--seed",
        "4",
        "--kmax",
        "50",
    ];
    assert!(generate(a.path(), &flags).status.success());
    assert!(generate(b.path(), &flags).status.success());
    for f in ["points.csv", "weights.csv", "points.svg"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let (mut ra, mut rb) = (report(a.path()), report(b.path()));
    ra.as_object_mut().unwrap().remove("wall_time");
    rb.as_object_mut().unwrap().remove("wall_time");
    assert_eq!(ra, rb);
}

#[test]
fn three_dimensional_run_completes() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(
        dir.path(),
        &[
            "--dim", "3", "--n", "100", "--method", "pwgd-fs", "--P", "1.25", "--M", "0.12",
        ],
    );
    assert!(out.status.success());
    let svg = fs::read_to_string(dir.path().join("points.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 300);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["--dim", "4", "--n", "5", "--method", "sbq"],
        &["--dim", "2", "--n", "5", "--method", "sbq", "--P", "1"],
        &["--dim", "2", "--n", "5", "--method", "sbq", "--gamma", "1"],
        &["--dim", "2", "--n", "5", "--method", "herding"],
        &["--dim", "2", "--n", "1", "--method", "pwgd-fs"],
    ];
    for case in cases {
        assert_eq!(generate(dir.path(), case).status.code(), Some(1), "{case:?}");
    }
    assert_eq!(kq(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(kq(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_rows_and_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let args = [
        "sweep",
        "--n-list",
        "8",
        "--methods",
        "pwgd-fs(0.5,0.5)",
        "--seeds",
        "3",
        "--kmax",
        "20",
        "--out",
        out_dir,
    ];
    for _ in 0..2 {
        let out = kq(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }
    assert!(dir.path().join("sweep.svg").is_file());

    let multi = kq(&[
        "sweep",
        "--n-list",
        "6,9",
        "--methods",
        "pwgd-fs(0.6,0.35),pwgd-gauss,sbq",
        "--seeds",
        "1,2",
        "--kmax",
        "10",
        "--out",
        out_dir,
    ]);
    assert!(multi.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2);
    assert_eq!(
        kq(&[
            "sweep",
            "--n-list",
            "6",
            "--methods",
            ",",
            "--seeds",
            "1",
            "--out",
            out_dir
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn verify_exit_codes() {
    let lemmas = kq(&["verify", "--suite", "lemmas"]);
    assert_eq!(lemmas.status.code(), Some(0));
    let text = String::from_utf8(lemmas.stdout).unwrap();
    assert!(text.contains("lemma4 bound d=3") && !text.contains("FAIL"));

    // the n_terms = 60 identity row does not hold, so the suite reports a failure
    let fekete = kq(&["verify", "--suite", "fekete"]);
    assert_eq!(fekete.status.code(), Some(3));
    let text = String::from_utf8(fekete.stdout).unwrap();
    assert!(text.contains("fekete N=2 minimizer eps=2"));
}
