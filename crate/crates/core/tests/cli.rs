use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn optoread(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optoread"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("spawn optoread")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_microwave_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let v = json(&optoread(&["simulate", "--scenario", "fig2", "--seed", "7", "--out", out]));
    let shot = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["kind"] == "single_shot")
        .unwrap();
    let f = shot["summary"]["fidelity_report"]["fidelity"].as_f64().unwrap();
    assert!((f - 0.87).abs() < 0.02, "{f}");
    let dir = tmp.path().join("fig2");
    for name in ["report.json", "resolved_config.json", "readout_map_map.csv", "single_shot_shots.csv"] {
        assert!(dir.join(name).is_file(), "{name}");
    }
    let resolved: Value = serde_json::from_slice(&fs::read(dir.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["seed"]["master_seed"], 7);
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let out = optoread(&["simulate", "--scenario", "no_such_scenario"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}

#[test]
fn unknown_override_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = optoread(&[
        "simulate",
        "--scenario",
        "fig3a",
        "--set",
        "chain.pump.power=1e-6",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = optoread(&["simulate", "--scenario", "fig3a", "--set", "no_equals_sign"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn override_changes_result() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let v = json(&optoread(&[
        "simulate",
        "--scenario",
        "fig3a",
        "--set",
        "chain.excess_noise_photons=0",
        "--out",
        out,
    ]));
    let total = v["results"][0]["summary"]["noise_budget"]["total_photons"].as_f64().unwrap();
    assert!((total - 1368.0).abs() < 1.0, "{total}");
}

#[test]
fn stark_calibration_of_shipped_dataset() {
    let v = json(&optoread(&[
        "calibrate",
        "stark",
        "--input",
        "data/stark.csv",
        "--device",
        "data/device_paper.json",
    ]));
    let a = v["attenuation_db"].as_f64().unwrap();
    assert!((a - 74.5).abs() < 0.5, "{a}");
}

#[test]
fn missing_input_file_is_a_usage_error() {
    let out = optoread(&["calibrate", "stark", "--input", "data/does_not_exist.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thermal_calibration_command() {
    let v = json(&optoread(&[
        "calibrate",
        "thermal",
        "--tone-dbm",
        "-22.7",
        "--attenuation-db",
        "74.5",
        "--snr-db",
        "56.7",
    ]));
    assert!((v["nep_dbm"].as_f64().unwrap() + 153.9).abs() < 1e-9);
}

#[test]
fn budgets_of_both_paths() {
    let opt = json(&optoread(&["budget", "--path", "optical"]));
    let n = opt["budget"]["total_photons"].as_f64().unwrap();
    assert!((n / 1e4 - 1.0).abs() < 0.3, "{n}");
    let mw = json(&optoread(&["budget", "--path", "microwave"]));
    assert_eq!(mw["budget"]["total_photons"].as_f64().unwrap(), 17.0);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, threads) in [(&a, None), (&b, None), (&c, Some("1"))] {
        let mut args = Vec::new();
        if let Some(t) = threads {
            args.extend(["--threads", t]);
        }
        args.extend(["simulate", "--scenario", "fig3c", "--out", dir.to_str().unwrap()]);
        json(&optoread(&args));
    }
    let fa = files(&a.join("fig3c"));
    assert!(!fa.is_empty());
    assert_eq!(fa, files(&b.join("fig3c")));
    assert_eq!(fa, files(&c.join("fig3c")));
}

#[test]
fn list_scenarios_names_the_builtins() {
    let out = optoread(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["fig1c", "fig2", "fig3a", "fig4", "siIV"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn help_for_every_subcommand() {
    for args in [
        vec!["--help"],
        vec!["simulate", "--help"],
        vec!["calibrate", "--help"],
        vec!["calibrate", "stark", "--help"],
        vec!["calibrate", "thermal", "--help"],
        vec!["calibrate", "vna", "--help"],
        vec!["fit", "--help"],
        vec!["budget", "--help"],
        vec!["list-scenarios", "--help"],
    ] {
        let out = optoread(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{args:?}");
    }
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(optoread(&["budget", "--path", "carrier-pigeon"]).status.code(), Some(1));
    assert_eq!(optoread(&["frobnicate"]).status.code(), Some(1));
}
