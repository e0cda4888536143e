use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crossover::experiments::{ScenarioConfig, SCENARIOS};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().expect("spawn lab")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn list_names_every_scenario() {
    let out = lab(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _) in SCENARIOS {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn shipped_configs_match_the_presets() {
    for (name, _) in SCENARIOS {
        let path = configs_dir().join(format!("{name}.toml"));
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg: ScenarioConfig = toml::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg, ScenarioConfig::preset(name).unwrap(), "{name}");
    }
}

#[test]
fn run_writes_a_report_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("levy");
    let config = configs_dir().join("levy-checks.toml");
    let out = lab(&["run", "levy-checks", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["report.json", "plots.csv", "lk.csv", "diffusive_limit.csv", "stable_limit.csv"] {
        assert!(out_dir.join(file).exists(), "{file}");
    }
    let header = std::fs::read_to_string(out_dir.join("plots.csv")).unwrap();
    assert!(header.starts_with("observable,series,x,value,stderr"));
    assert_eq!(lab(&["verify", out_dir.to_str().unwrap()]).status.code(), Some(0));

    // an error pushed past its tolerance no longer verifies
    let table = out_dir.join("stable_limit.csv");
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let column = lines[0].split(',').position(|c| c == "rel_error").unwrap();
    let mut cells: Vec<String> = lines[1].split(',').map(String::from).collect();
    cells[column] = "1".into();
    lines[1] = cells.join(",");
    std::fs::write(&table, lines.join("\n") + "\n").unwrap();
    assert_eq!(lab(&["verify", out_dir.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn bad_configs_are_rejected_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("replacement.toml")).unwrap();

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, format!("colour = 3\n{text}")).unwrap();
    assert_eq!(lab(&["run", "replacement", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));

    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, text.replace("n_sweep = [64, 128, 256]", "n_sweep = []")).unwrap();
    let out = lab(&["run", "replacement", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_sweep"));

    let path = dir.path().join("r.toml");
    std::fs::write(&path, &text).unwrap();
    assert_eq!(lab(&["run", "conservation", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lab(&["run", "no-such-scenario"]).status.code(), Some(2));
}

#[test]
fn failing_tolerance_gives_exit_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("levy-checks.toml")).unwrap();
    let strict = dir.path().join("strict.toml");
    std::fs::write(&strict, text.replace("stable_rel = 0.001", "stable_rel = 1e-12")).unwrap();
    let out_dir = dir.path().join("out");
    let out = lab(&["run", "levy-checks", "--config", strict.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL stable_limit"));
}
