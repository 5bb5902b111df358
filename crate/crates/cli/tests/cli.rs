use std::path::Path;
use std::process::{Command, Output};

fn ptc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptc"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("PTC_OUTPUT_DIR")
        .output()
        .expect("ptc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn index_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = ptc(dir.path(), &["index", "--symbol", "L1(0,1)", "-n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS index/"));
    let csv = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("symbol,"));
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn failed_criterion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ptc(dir.path(), &["verify", "ibp", "--symbol", "frac_laplacian(0.5)", "-N", "16"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL ibp/rel_error"));
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["index", "--symbol", "L1(0,1)", "-N", "100"][..],
        &["index", "--symbol", "L1(0,1)", "-a", "0.7"][..],
        &["index", "--symbol", "no_such_symbol(1)"][..],
    ] {
        let o = ptc(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "symbol = \"L1(0,1)\"\nsuite = [\"index\"]\nunknown_key = 1\n").unwrap();
    let o = ptc(dir.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_without_timing_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "ibp", "--symbol", "frac_laplacian(0.5)", "-N", "64", "--no-timing"];
    assert!(ptc(a.path(), &args).status.code().is_some());
    assert!(ptc(b.path(), &args).status.code().is_some());
    for name in ["ibp.csv", "summary.csv"] {
        let read = |d: &Path| std::fs::read(d.join(name)).unwrap();
        assert_eq!(read(a.path()), read(b.path()), "{name}");
    }
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from_env");
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "symbol = \"L1(0,1)\"\nn = 2\nN = 64\nsuite = [\"index\"]\noutput_dir = \"unused\"\n")
        .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ptc"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("PTC_OUTPUT_DIR", &env_out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(env_out.join("index.csv").exists());
    assert!(!dir.path().join("unused").exists());
}
