use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{"name":"small","environment":"UMi","fc_ghz":2.4,"tx":[0,25,10],"rx":[65,52,1],
    "ris":{"x":[62],"y":[55],"z":[7]},"n_elements":[0,16],"trials":20,"master_seed":3}"#;

fn rissim(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rissim"));
    cmd.args(args).env_remove("RIS_SIM_SEED");
    if let Some(s) = seed_env {
        cmd.env("RIS_SIM_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn run_config(dir: &Path, out: &str, extra: &[&str], seed_env: Option<&str>) -> String {
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.join(out);
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = rissim(&args, seed_env);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out).unwrap()
}

#[test]
fn list_presets_names_all_figures() {
    let o = rissim(&["list-presets"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["fig3a", "fig3b", "fig4", "fig5a", "fig5b"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_config(dir.path(), "a.csv", &["--seed", "7"], None);
    let b = run_config(dir.path(), "b.csv", &["--seed", "7", "--serial"], None);
    assert_eq!(a, b);
    assert!(a.starts_with("preset,"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn seed_sources_take_precedence_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let from_env = run_config(dir.path(), "env.csv", &[], Some("11"));
    let from_flag = run_config(dir.path(), "flag.csv", &["--seed", "11"], Some("99"));
    let from_cfg = run_config(dir.path(), "cfg.csv", &[], None);
    assert_eq!(from_env, from_flag);
    assert_ne!(from_env, from_cfg);
    assert!(from_cfg.lines().nth(1).unwrap().contains(",3,"));
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_config(dir.path(), "out.json", &["--format", "json", "--trials", "5"], None);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = v.as_array().or_else(|| v["rows"].as_array()).expect("row array");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["N"], 16);
    assert_eq!(rows[1]["trials"], 5);
}

#[test]
fn bad_inputs_exit_with_config_error() {
    let o = rissim(&["run", "--config", "/nonexistent/cfg.json"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = rissim(&["preset", "fig9"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig3a"));
    let o = rissim(&["preset", "fig4", "--trials", "0"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = rissim(&["preset", "fig4"], Some("abc"));
    assert_eq!(o.status.code(), Some(1));
    let o = rissim(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_passes() {
    let o = rissim(&["validate"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
