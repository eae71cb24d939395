use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempnet::data::{synth_one_factor, FactorSpec};

fn tempnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempnet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn synth(dir: &Path, name: &str, stocks: usize, days: usize, seed: u64) -> PathBuf {
    let out = tempnet(
        &[
            "synth",
            "--stocks",
            &stocks.to_string(),
            "--days",
            &days.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            name,
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(name)
}

#[test]
fn synth_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.csv", 50, 2000, 7);
    let b = synth(dir.path(), "b.csv", 50, 2000, 7);
    let text = std::fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2001);
    assert!(lines.iter().all(|l| l.split(',').count() == 51));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let bad = tempnet(&["synth", "--stocks", "1"], dir.path());
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("n_stocks"));
}

#[test]
fn topology_rows_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    // 4026 price dates give 4025 returns
    let p = synth(dir.path(), "p.csv", 6, 4026, 1);
    let out = tempnet(
        &[
            "topology",
            "--input",
            p.to_str().unwrap(),
            "--delta",
            "500",
            "--step",
            "25",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("window_end,C,L,gamma,jaccard"));
    assert_eq!(lines.count(), 142);

    let long = tempnet(
        &[
            "topology",
            "--input",
            p.to_str().unwrap(),
            "--delta",
            "5000",
        ],
        dir.path(),
    );
    assert_eq!(code(&long), 2);
}

#[test]
fn centrality_methods_and_hub() {
    let dir = tempfile::tempdir().unwrap();
    // one high-loading hub among weakly loaded stocks; few windows so the
    // union of layers stays far from complete
    let mut spec = FactorSpec::linear_betas(30, 601, 0.3, 0.3, 0.01, 0.01, 3);
    spec.betas[5] = 3.0;
    let panel = synth_one_factor(&spec).unwrap();
    let path = dir.path().join("hub.csv");
    panel
        .write_wide_csv(std::fs::File::create(&path).unwrap())
        .unwrap();

    for method in ["temporal", "aggregated"] {
        let run = || {
            tempnet(
                &[
                    "centrality",
                    "--input",
                    "hub.csv",
                    "--delta",
                    "200",
                    "--step",
                    "200",
                    "--method",
                    method,
                ],
                dir.path(),
            )
        };
        let out = run();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout.clone()).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 30);
        assert!(rows[0].starts_with("S005,"), "{method}: {}", rows[0]);
        assert!(rows.iter().all(|r| r.ends_with(method)));
        assert_eq!(run().stdout, out.stdout);
    }
}

#[test]
fn backtest_smoke_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let p = synth(dir.path(), "p.csv", 50, 2000, 11);
    let p = p.to_str().unwrap();
    let out = tempnet(
        &[
            "backtest",
            "--input",
            p,
            "--delta",
            "250",
            "--run-id",
            "smoke",
            "--out-dir",
            "runs",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = PathBuf::from(String::from_utf8(out.stdout).unwrap().trim());
    let run_dir = dir.path().join(run_dir);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["frontiers"].as_array().unwrap().len(), 4);
    assert_eq!(report["es_curves"].as_array().unwrap().len(), 4);
    assert_eq!(report["centrality"].as_array().unwrap().len(), 2);
    assert!(run_dir.join(report["topology"].as_str().unwrap()).exists());

    let zero = tempnet(&["backtest", "--input", p, "--m", "0"], dir.path());
    assert_eq!(code(&zero), 2);
}

#[test]
fn out_of_sample_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let p = synth(dir.path(), "p.csv", 5, 3724, 2);
    let out = tempnet(
        &[
            "es",
            "--input",
            p.to_str().unwrap(),
            "--out-of-sample",
            "--est",
            "3500",
            "--eval",
            "225",
            "--m",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn config_file_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = synth(dir.path(), "p.csv", 6, 300, 4);
    std::fs::write(dir.path().join("run.cfg"), "delta = 100\nstep = 50\n").unwrap();
    let out = tempnet(
        &[
            "topology",
            "--config",
            "run.cfg",
            "--input",
            p.to_str().unwrap(),
            "--step",
            "100",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // 299 returns, delta 100, step 100 -> 2 windows
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);

    let missing = tempnet(&["topology", "--input", "nope.csv"], dir.path());
    assert_eq!(code(&missing), 4);
    let unknown = tempnet(&["frobnicate"], dir.path());
    assert_eq!(code(&unknown), 2);
}
