use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use submig::export::{heatmap_csv, parse_heatmap_csv};
use submig::migration::{HeatMap, MapLabel};
use submig::scene::make_grid;

fn submig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_submig"))
        .args(args)
        .env_remove("SUBMIG_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn coarse_config(out: &Path) -> String {
    format!(
        r#"{{
  "scatterers": [
    {{ "location": [0.4, 0.0] }},
    {{ "location": [-0.6, 0.3] }},
    {{ "location": [0.1, -0.5] }}
  ],
  "wavelengths": {{ "first": 0.5, "last": 0.3, "count": 3 }},
  "noise": {{ "snr_db": 10.0, "seed": 5 }},
  "grid": {{ "x": [-1.0, 1.0], "y": [-1.0, 1.0], "step": 0.1 }},
  "output": {{ "directory": {:?}, "msr": true }}
}}"#,
        out.to_string_lossy()
    )
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"scatterers": [{"location": [0, 0]}], "colour": 1}"#);
    let out = submig(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn negative_wavelength_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"scatterers": [{"location": [0, 0]}], "wavelengths": {"first": -0.5, "last": 0.3, "count": 3}}"#,
    );
    let out = submig(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wavelengths"));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = submig(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_then_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let cfg = write(tmp.path(), "c.json", &coarse_config(&first));
    let out = submig(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.join("manifest.json");
    let out = submig(&[
        "rerun",
        &manifest.to_string_lossy(),
        "--output-dir",
        &second.to_string_lossy(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names = csv_files(&first);
    assert!(names.iter().any(|n| n.starts_with("msr_")));
    assert!(names.iter().any(|n| n.starts_with("multi")));
    assert_eq!(names, csv_files(&second));
    for n in names {
        assert_eq!(fs::read(first.join(&n)).unwrap(), fs::read(second.join(&n)).unwrap(), "{n}");
    }
}

#[test]
fn overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("ignored");
    let cfg = write(tmp.path(), "c.json", &coarse_config(&out_dir));
    let target = tmp.path().join("chosen");
    let out = submig(&[
        "run",
        &cfg,
        "--no-noise",
        "--model",
        "born",
        "--output-dir",
        &target.to_string_lossy(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(target.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["model"], "born");
    assert!(manifest["config"]["noise"]["snr_db"].is_null());
}

#[test]
fn theory_and_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("t");
    let cfg = write(tmp.path(), "c.json", &coarse_config(&out_dir));
    let out = submig(&["theory", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let single = out_dir.join("theory_single_01.csv");
    assert!(single.exists());
    let out = submig(&[
        "compare",
        &single.to_string_lossy(),
        &single.to_string_lossy(),
        "--target",
        "0.4,0",
        "--target",
        "-0.6,0.3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["scale", "nrmse", "correlation", "peaks"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["peaks"].as_array().unwrap().len(), 2);
    assert!((report["correlation"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn heatmap_csv_layout() {
    let g = make_grid([0.0, 1.0], [0.0, 1.0], 1.0).unwrap();
    let map = HeatMap::new(g, vec![0.1, 0.2, 0.3, 0.4], MapLabel::Imported).unwrap();
    let text = heatmap_csv(&map);
    assert_eq!(text.lines().count(), 5);
    assert_eq!(text.lines().next(), Some("x,y,value"));
    let back = parse_heatmap_csv(&text).unwrap();
    assert_eq!(back.values, map.values);
    assert!(back.grid.same_geometry(&g));
}
