use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ntklab"))
}

const SMALL: &str = r#"
kind = "dispersion"
sigma_w_sq = [1.0, 2.0]
depths = [2, 4]
width = 10
alpha0 = 1.0
samples = 20
seed = 0
bootstrap = 50
"#;

#[test]
fn writes_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out.csv");
    let status = bin()
        .args(["dispersion", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# experiment: dispersion"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 5);
}

#[test]
fn overrides_and_stdout_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, SMALL).unwrap();
    let go = |workers: &str| {
        let o = bin()
            .args(["dispersion", "--seed", "7", "--samples", "12", "--workers", workers, "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let a = go("1");
    assert_eq!(a, go("3"));
    assert!(a.contains("master_seed: 7"));
    assert!(a.contains("samples = 12"));
}

#[test]
fn rejects_mismatched_kind_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, SMALL).unwrap();
    let o = bin().args(["nondiag", "--config"]).arg(&cfg).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("dispersion"));

    fs::write(&cfg, format!("{SMALL}colour = 3\n")).unwrap();
    let o = bin().args(["dispersion", "--config"]).arg(&cfg).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn theory_runs_with_defaults() {
    let o = bin().arg("theory").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("schedule,")));
    assert!(text.contains("ramp_up"));
}
