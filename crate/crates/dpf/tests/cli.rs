use std::path::Path;
use std::process::{Command, Output};

fn dpf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpf")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path) {
    ok(dpf(
        &[
            "simulate",
            "--users",
            "25",
            "--items",
            "30",
            "--steps",
            "4",
            "--k",
            "2",
            "--variance",
            "0.2",
            "--user-global-mean",
            "-1",
            "--item-global-mean",
            "-1",
            "--granularity",
            "3600",
            "--out",
            "data.tsv",
            "--truth",
            "truth.txt",
            "--seed",
            "3",
        ],
        dir,
    ));
}

fn fit(dir: &Path, out: &str, threads: &str) {
    ok(dpf(
        &[
            "fit",
            "--data",
            "data.tsv",
            "--granularity",
            "3600",
            "--k",
            "2",
            "--max-sweeps",
            "15",
            "--seed",
            "1",
            "--threads",
            threads,
            "--checkpoint",
            out,
        ],
        dir,
    ));
}

#[test]
fn simulate_fit_predict_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    let data = std::fs::read_to_string(d.join("data.tsv")).unwrap();
    assert!(data.starts_with("user_id\titem_id\ttimestamp\tcount\n"));
    assert!(std::fs::read_to_string(d.join("truth.txt")).unwrap().starts_with("dpf-latent 1"));

    fit(d, "cp.txt", "1");
    let pred = ok(dpf(&["predict", "--checkpoint", "cp.txt", "--user", "u0", "--user", "u3", "--top-k", "4"], d));
    let lines: Vec<&str> = pred.lines().collect();
    assert_eq!(lines[0], "user_id\trank\titem_id\tscore");
    assert_eq!(lines.len(), 9);
    assert!(lines[1].starts_with("u0\t1\t"));
    let scores: Vec<f64> = lines[1..5].iter().map(|l| l.split('\t').nth(3).unwrap().parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let excl = ok(dpf(
        &["predict", "--checkpoint", "cp.txt", "--user", "u0", "--top-k", "100", "--exclude-data", "data.tsv"],
        d,
    ));
    let clicked: Vec<&str> =
        data.lines().filter(|l| l.starts_with("u0\t")).map(|l| l.split('\t').nth(1).unwrap()).collect();
    for l in excl.lines().skip(1) {
        assert!(!clicked.contains(&l.split('\t').nth(2).unwrap()));
    }

    let traj = ok(dpf(&["export-trajectories", "--checkpoint", "cp.txt", "--kind", "item", "--entity", "i2"], d));
    assert_eq!(traj.lines().count(), 1 + 2 * 4);
    let glob = ok(dpf(&["export-global", "--checkpoint", "cp.txt", "--entity", "u1"], d));
    assert_eq!(glob.lines().count(), 1 + 2);
    let agg = ok(dpf(&["export-aggregate", "--checkpoint", "cp.txt", "--normalize"], d));
    for t in 0..4 {
        let total: f64 = agg
            .lines()
            .skip(1)
            .filter(|l| l.starts_with(&format!("{t}\t")))
            .map(|l| l.split('\t').nth(2).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn evaluate_writes_fold_and_mean_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    for model in ["dpf", "pf-all", "pf-last"] {
        let out = ok(dpf(
            &[
                "evaluate",
                "--data",
                "data.tsv",
                "--granularity",
                "3600",
                "--model",
                model,
                "--k",
                "2",
                "--max-sweeps",
                "5",
                "--eval-steps",
                "2..=3",
            ],
            d,
        ));
        let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(rows[0].starts_with("model\tstep\trecall@50\tndcg\tmrr\tmar"));
        assert_eq!(rows.len(), 4, "{out}");
        assert_eq!(rows[3].split('\t').nth(1), Some("mean"));
    }
}

#[test]
fn same_seed_gives_identical_checkpoints_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    fit(d, "a.txt", "1");
    fit(d, "b.txt", "1");
    fit(d, "c.txt", "3");
    let a = std::fs::read(d.join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.txt")).unwrap());
    assert_eq!(a, std::fs::read(d.join("c.txt")).unwrap());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    std::fs::write(d.join("run.cfg"), "# fit settings\nk = 3\nmax-sweeps = 2\n").unwrap();
    ok(dpf(
        &[
            "fit",
            "--data",
            "data.tsv",
            "--k",
            "2",
            "--max-sweeps",
            "9",
            "--checkpoint",
            "cp.txt",
            "--config",
            "run.cfg",
        ],
        d,
    ));
    let cp = dpf::Checkpoint::load(&d.join("cp.txt")).unwrap();
    assert_eq!(cp.state.k, 3);
    assert_eq!(cp.elbo_trace.len(), 2);
}

#[test]
fn errors_are_one_line_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    fit(d, "cp.txt", "1");
    let cases: Vec<Vec<&str>> = vec![
        vec!["predict", "--checkpoint", "cp.txt", "--user", "nobody"],
        vec!["fit", "--data", "missing.tsv", "--checkpoint", "x.txt"],
        vec!["evaluate", "--data", "data.tsv", "--eval-steps", "0"],
        vec!["fit", "--data", "data.tsv", "--checkpoint", "x.txt", "--variance", "-1"],
        vec!["predict", "--checkpoint", "data.tsv"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = dpf(&args, d);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error: "), "{args:?}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
    std::fs::write(d.join("bad.tsv"), "u1\ti1\t-5\n").unwrap();
    let out = dpf(&["fit", "--data", "bad.tsv", "--origin", "0", "--checkpoint", "x.txt"], d);
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 1"));
}
