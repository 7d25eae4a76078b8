use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sinrsim::{parse_config, Overrides, RunManifest};
use tempfile::TempDir;

const SMALL: &str = r#"{
  "n": 40,
  "horizon": 4000,
  "checkpoint": 500,
  "runs": 2,
  "rho_grid": [0.0, 0.2, 0.5],
  "algorithm": ["reflect-estimated", "lqf"],
  "seed": 7
}"#;

fn sinrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinrsim"))
        .args(args)
        .env_remove("SINRSIM_SEED")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every output file except the manifest, which carries a timestamp.
fn outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "manifest.json" {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn minimal_config_writes_defaults_into_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"n": 200}"#);
    let out = tmp.path().join("out");
    let o = sinrsim(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let c = &manifest.config;
    assert_eq!(c.horizon, Some(100_000));
    assert_eq!(c.checkpoint, Some(10_000));
    assert_eq!(c.runs, Some(10));
    assert_eq!(c.grid().len(), 60);
    assert_eq!((c.grid()[0], c.grid()[59]), (0.01, 0.6));
    assert_eq!(manifest.master_seed, 0);
    assert!(out.join("topology.json").exists());
    assert!(out.join("pool.json").exists());
}

#[test]
fn algorithm_typo_is_a_config_error_listing_valid_names() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"algorithm": "relect"}"#);
    let o = sinrsim(&["sweep", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("algorithm"), "{err}");
    for name in ["reflect", "reflect-estimated", "reflect-partitioned", "lqf"] {
        assert!(err.contains(name), "{err}");
    }
    assert!(!tmp.path().join("o").exists(), "nothing is written on config errors");
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.json");
    assert_eq!(sinrsim(&["run", "--config", s(&missing), "--out", "x"]).status.code(), Some(1));
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    // `run` needs a single point; the grid has three.
    assert_eq!(sinrsim(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]).status.code(), Some(1));
    assert_eq!(sinrsim(&["sweep", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn single_zero_rate_point_is_one_stable_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = sinrsim(&["run", "--config", s(&cfg), "--out", s(&out), "--rho", "0", "--algo", "reflect"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("reflect/summary.csv")).unwrap();
    assert_eq!(summary, "rho,mean_final_max_queue,unstable_fraction\n0,0,0\n");
    let runs = fs::read_to_string(out.join("reflect/runs.csv")).unwrap();
    assert!(runs.starts_with("rho,run,final_max_queue,stable,slope\n"));
    assert_eq!(runs.lines().count(), 3);
    assert!(runs.lines().skip(1).all(|l| l.contains(",true,")), "{runs}");
    let series = fs::read_to_string(out.join("reflect/series/rho_0_run_0.csv")).unwrap();
    assert!(series.starts_with("slot,max_queue,mean_queue,departures,running_max_queue\n"));
    assert_eq!(series.lines().count(), 1 + 8);
    assert!(!out.join("lqf").exists());
}

#[test]
fn resolved_config_round_trips_through_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let full = r#"{
  "n": 30, "side": 80.0, "lmin": 2.0, "lmax": 10.0, "alpha": 3.0, "beta": 1.5, "noise": 0.0,
  "power": "mean", "power_level": 2.0, "algorithm": ["lqf"], "rho_grid": [0.1, 0.3],
  "horizon": 2000, "checkpoint": 250, "runs": 1, "pool_size": 16, "seed": 3,
  "slope_threshold": 0.002, "queue_threshold": 40.0
}"#;
    let cfg_path = write_config(tmp.path(), "c.json", full);
    let resolved = parse_config(&cfg_path).unwrap().resolve(&Overrides::default()).unwrap();
    let out = tmp.path().join("out");
    assert!(sinrsim(&["sweep", "--config", s(&cfg_path), "--out", s(&out)]).status.success());
    let manifest_path = out.join("manifest.json");
    let from_manifest = parse_config(&manifest_path).unwrap();
    assert_eq!(from_manifest.to_canonical_json(), resolved.to_canonical_json());
    let again = from_manifest.resolve(&Overrides::default()).unwrap();
    assert_eq!(again.to_canonical_json(), resolved.to_canonical_json());
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    assert!(sinrsim(&["sweep", "--config", s(&cfg), "--out", s(&first)]).status.success());
    let manifest = first.join("manifest.json");
    assert!(sinrsim(&["sweep", "--config", s(&manifest), "--out", s(&second), "--jobs", "3"]).status.success());
    let (a, b) = (outputs(&first), outputs(&second));
    // topology, pool, plot, and per algorithm two summaries plus six series.
    assert_eq!(a.len(), 3 + 2 * (2 + 6));
    assert_eq!(a, b);
}

#[test]
fn seed_precedence_is_file_then_env_then_flag() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"n": 10, "seed": 1}"#);
    let seed_of = |out: &Path| -> u64 {
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m.master_seed
    };
    let run = |out: &Path, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sinrsim"));
        cmd.args(["generate", "--config", s(&cfg), "--out", s(out)]).env_remove("SINRSIM_SEED");
        if let Some(e) = env {
            cmd.env("SINRSIM_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        seed_of(out)
    };
    assert_eq!(run(&tmp.path().join("a"), None, None), 1);
    assert_eq!(run(&tmp.path().join("b"), Some("2"), None), 2);
    assert_eq!(run(&tmp.path().join("c"), Some("2"), Some("3")), 3);
    let topo = |d: &str| fs::read(tmp.path().join(d).join("topology.json")).unwrap();
    assert_ne!(topo("a"), topo("b"), "the topology follows the master seed");
}

#[test]
fn verify_passes_on_equal_length_uniform_topology() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"n": 50, "lmin": 5.0, "lmax": 5.0}"#);
    let out = tmp.path().join("out");
    let o = sinrsim(&["verify", "--config", s(&cfg), "--out", s(&out)]);
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{report}");
    assert!(!report.contains("FAIL"), "{report}");
    assert!(report.contains("separation in 3^alpha-signal sets"), "{report}");
    assert!(report.contains("set affectance <= ceiling"), "{report}");
    assert_eq!(fs::read_to_string(out.join("verify.txt")).unwrap(), report);
}

#[test]
fn verify_reports_unit_ratio_for_linear_power() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"n": 30, "power": "linear"}"#);
    let o = sinrsim(&["verify", "--config", s(&cfg)]);
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{report}");
    assert!(report.contains("max ratio = 1 exactly"), "{report}");
    assert!(report.contains("Delta-free ceiling"), "{report}");
}

#[test]
fn verify_rejects_injected_infeasible_set() {
    let tmp = TempDir::new().unwrap();
    let all: Vec<String> = (0..40).map(|i| i.to_string()).collect();
    let text = format!(r#"{{"n": 40, "verify_sets": [[{}]]}}"#, all.join(","));
    let cfg = write_config(tmp.path(), "c.json", &text);
    let o = sinrsim(&["verify", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("FAIL  set affectance on injected sets"), "{report}");
    assert!(report.contains("infeasible"), "{report}");
}

#[test]
fn plot_has_one_line_per_algorithm() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    assert!(sinrsim(&["sweep", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let svg = fs::read_to_string(out.join("plot.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains(">lqf<") && svg.contains(">reflect-estimated<"));
}
