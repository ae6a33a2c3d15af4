//! End-to-end runs of the command-line driver on tiny configurations.

use std::path::Path;
use std::process::Command;

use edgerom::output::parse_csv;

const BIN: &str = env!("CARGO_BIN_EXE_edgerom");

const TINY: &str = r#"
geometry = "preset:geometry1"
new_geometry = "preset:geometry2"
mesh = [8, 8]
subdomains = [2, 2]
[sweep]
f_min = 1e8
f_max = 1e9
count = 4
[training]
n_random = 2
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).env("EDGEROM_WORKERS", "1").env("RUST_LOG", "error").output().unwrap()
}

#[test]
fn nwidth_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let o = run(&["run", "nwidth", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push(std::fs::read(out.join("nwidth.csv")).unwrap());
        assert!(out.join("manifest.json").exists());
    }
    assert_eq!(texts[0], texts[1]);
    let (cols, rows) = parse_csv(std::str::from_utf8(&texts[0]).unwrap()).unwrap();
    assert_eq!(cols[0], "size");
    assert!(!rows.is_empty());
}

#[test]
fn training_writes_one_bundle_per_space() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("train");
    let o = run(&["run", "training", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // 2x2 subdomains: 4 volume and 4 interface spaces
    assert_eq!(std::fs::read_dir(out.join("bases")).unwrap().count(), 8);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["experiment"], "training");
}

#[test]
fn plan_change_and_rerun_reuse_stored_bases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let cfg_s = cfg.to_str().unwrap();
    let train = dir.path().join("train");
    assert!(run(&["run", "training", "--config", cfg_s, "--out", train.to_str().unwrap()]).status.success());

    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let cs = dir.path().join("cs.json");
    let o = run(&[
        "plan-change",
        "--old",
        configs.join("geometry1.toml").to_str().unwrap(),
        "--new",
        configs.join("geometry2.toml").to_str().unwrap(),
        "--config",
        cfg_s,
        "--out",
        cs.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let out = dir.path().join("rerun");
    let o = run(&["rerun", "--changeset", cs.to_str().unwrap(), "--bases", train.join("bases").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("(0 hash mismatches)"), "{stdout}");
    assert!(out.join("ledger.json").exists());
    assert!(out.join("rerun.csv").exists());
}

#[test]
fn exit_codes_distinguish_usage_and_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let cfg_s = cfg.to_str().unwrap();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["run", "nwidth"]).status.code(), Some(1));
    assert_eq!(run(&["run", "no-such-experiment", "--config", cfg_s]).status.code(), Some(1));
    assert_eq!(run(&["run", "nwidth", "--config", "/nonexistent/run.toml"]).status.code(), Some(1));

    // a near-zero frequency leaves the gradient null space of the curl-curl operator unregularized
    let singular = TINY.replace("f_min = 1e8", "f_min = 1e-30").replace("f_max = 1e9", "f_max = 1e-30").replace("count = 4", "count = 1");
    let cfg2 = dir.path().join("singular.toml");
    std::fs::write(&cfg2, singular).unwrap();
    let out = dir.path().join("s");
    let o = run(&["run", "nwidth", "--config", cfg2.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let o = Command::new(BIN).args(["run", "nwidth", "--config", cfg_s]).env("EDGEROM_WORKERS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
