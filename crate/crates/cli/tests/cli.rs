use std::path::Path;
use std::process::Command;

fn polydist() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polydist"))
}

const SMALL_BERNOULLI: &str = r#"
scenario = "bernoulli-tail"
seed = 3

[bernoulli]
instances = 5
thetas = 4
mc_draws = 10000
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_BERNOULLI);
    let out = polydist().arg("run").arg(&cfg).arg("--quiet").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "PASS");
}

#[test]
fn failing_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"estimator-calibration\"\nsamples = 5000\nbootstrap = 10\n[estimator_calibration]\ncases = 2\ntolerance = 1e-12\n",
    );
    let out = polydist().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_exits_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"invariance\"\n[invariance]\nn_values = [8, 16]\n",
    );
    let out_dir = dir.path().join("out");
    let out = polydist()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rungs"));
    assert!(!out_dir.exists());

    let cfg = write_config(dir.path(), "scenario = \"cf-decay\"\nbogus = 1\n");
    let out = polydist().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = polydist()
        .arg("validate")
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_outputs_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_BERNOULLI);
    let mut outputs = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "2")] {
        let out_dir = dir.path().join(run);
        let out = polydist()
            .args(["--threads", threads, "run"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(&out_dir)
            .args(["--format", "csv", "--quiet"])
            .output()
            .unwrap();
        assert!(out.status.success());
        let mut files: Vec<_> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        assert!(files.iter().all(|f| f.extension().unwrap() == "csv"));
        outputs.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_BERNOULLI);
    let read = |seed: &str, name: &str| {
        let out_dir = dir.path().join(name);
        polydist()
            .arg("run")
            .arg(&cfg)
            .args(["--seed", seed, "--quiet", "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        std::fs::read_to_string(out_dir.join("bernoulli.csv")).unwrap()
    };
    assert_ne!(read("3", "x"), read("4", "y"));
}

#[test]
fn constants_table() {
    let out = polydist().args(["constants", "--max-order", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "k,c_k,C_k");
    assert!(lines[1].starts_with("0,1.000000000000,"));
    let c1: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((c1 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-11);
}

#[test]
fn enumerate_tail_fixture() {
    let out = polydist()
        .args([
            "enumerate-tail",
            "--n",
            "4",
            "--degree",
            "2",
            "--p",
            "0.5",
            "--theta",
            "0.3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exact 0.3125"), "{text}");
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = polydist().arg("validate").arg(&path).output().unwrap();
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        count += 1;
    }
    assert_eq!(count, 9);
}
