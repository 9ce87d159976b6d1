//! End-to-end checks of the installed binary: exit codes, report files,
//! and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_deltaspec");

const PRE: &str = "\
class Counter {
  field n: int;
  ctor(start: int) {
    if (start < 0) { n := 0; } else { n := start; }
  }
  method bump(): int {
    n := n + 1;
    return n;
  }
}
";

fn write(path: &Path, content: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
}

fn commit(root: &Path) {
    write(&root.join("pre/Counter.dl"), PRE);
    write(&root.join("post/Counter.dl"), &PRE.replace("n + 1", "n + 2"));
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn missing_post_dir_exits_2_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("c1");
    write(&root.join("pre/Counter.dl"), PRE);
    let out = run(&["run", root.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("post/"));
}

#[test]
fn type_error_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("Bad.dl");
    write(&bad, "class Bad { field n: int; method f(): int { return true; } }");
    let out = run(&["parse", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!stderr(&out).is_empty());
}

#[test]
fn two_runs_write_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("c1");
    commit(&root);
    let root = root.to_str().unwrap();
    let o1 = tmp.path().join("o1");
    let o2 = tmp.path().join("o2");
    for o in [&o1, &o2] {
        let out = run(&[
            "run", root, "--seed", "7", "--candidates", "300", "--out",
            o.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }

    let names: Vec<String> = std::fs::read_dir(&o1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.contains(&"delta.json".to_string()));
    assert!(names.contains(&"kills.csv".to_string()));
    for name in &names {
        let a = std::fs::read(o1.join(name)).unwrap();
        let b = std::fs::read(o2.join(name)).unwrap();
        if name == "manifest.json" {
            let strip = |bytes: &[u8]| -> serde_json::Value {
                let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                v.as_object_mut().unwrap().remove("timings_ms");
                v
            };
            assert_eq!(strip(&a), strip(&b));
        } else {
            assert_eq!(a, b, "{name} differs between runs");
        }
    }
}

#[test]
fn match_truth_reuses_a_previous_run() {
    let tmp = tempfile::tempdir().unwrap();
    let root: PathBuf = tmp.path().join("c1");
    commit(&root);
    write(&root.join("truth.delta"), "+ post:bump :: n == old(n) + 2\n");
    let root = root.to_str().unwrap();

    // without a prior run the subcommand computes the delta itself
    let out = run(&["match-truth", root, "--seed", "3", "--candidates", "300"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("recall 1"), "stdout: {stdout}");

    // a full run leaves delta.json behind for the next match-truth
    let out = run(&["run", root, "--seed", "3", "--candidates", "300"]);
    assert_eq!(code(&out), 0);
    let out = run(&["match-truth", root]);
    assert_eq!(code(&out), 0);
    let report = std::fs::read_to_string(tmp.path().join("c1/out/truth_match.json")).unwrap();
    assert!(report.contains("\"recall\": 1.0"), "{report}");
}

#[test]
fn missing_truth_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("c1");
    commit(&root);
    let out = run(&["match-truth", root.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("truth.delta"));
}

#[test]
fn simulations_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("c1");
    commit(&root);
    // config.ini supplies the seed; the flag overrides the reps
    write(&root.join("config.ini"), "seed = 5\ncandidates = 300\nreps = 40\n");
    let root = root.to_str().unwrap();

    let out = run(&["rq3", root, "--reps", "10", "--svg"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let outdir = tmp.path().join("c1/out");
    let rq3 = std::fs::read_to_string(outdir.join("rq3.csv")).unwrap();
    assert!(rq3.starts_with("pool,size,rep,rms\n"));
    // 2 pools x 10 sizes x 10 reps
    assert_eq!(rq3.lines().count(), 1 + 200);
    assert!(outdir.join("rq3_stats.csv").is_file());
    assert!(outdir.join("rq3.svg").is_file());

    let out = run(&["rq4", root, "--reps", "10"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rq4 = std::fs::read_to_string(outdir.join("rq4.csv")).unwrap();
    assert!(rq4.starts_with("pool,target,rep,cost\n"));
    let summary = std::fs::read_to_string(outdir.join("summary.md")).unwrap();
    assert!(summary.contains("fixed-size selection"), "{summary}");
    assert!(summary.contains("cost to reach target"), "{summary}");
}
