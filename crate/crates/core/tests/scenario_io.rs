use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use redispatch_core::error::Error;
use redispatch_core::scenario::{load_scenario, save_scenario, Violation};
use serde_json::{json, Value};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

/// Copies a shipped scenario into a temp dir so tests can tamper with it.
fn copy_of(name: &str) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(shipped(name)).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, tmp.path().join(p.file_name().unwrap())).unwrap();
    }
    tmp
}

fn edit_json(dir: &Path, f: impl FnOnce(&mut Value)) {
    let path = dir.join("scenario.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut doc);
    fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

fn violations(dir: &Path) -> Vec<Violation> {
    match load_scenario(dir) {
        Err(Error::Scenario(v)) => v,
        Ok(_) => panic!("scenario unexpectedly valid"),
        Err(e) => panic!("unexpected error kind: {e}"),
    }
}

#[test]
fn shipped_scenarios_load() {
    for name in ["tutorial-3bus", "tutorial-5bus", "uncongested-5bus"] {
        let s = load_scenario(&shipped(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.name, name);
        assert!(s.horizon() > 0);
    }
    let s = load_scenario(&shipped("tutorial-3bus")).unwrap();
    assert_eq!(s.electric_demand["n3"], vec![90.0, 80.0, 100.0, 60.0]);
    assert!(s.market_schedule.is_some());
}

#[test]
fn save_then_load_is_identity() {
    for name in ["tutorial-3bus", "tutorial-5bus"] {
        let a = load_scenario(&shipped(name)).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        save_scenario(&a, tmp.path()).unwrap();
        let b = load_scenario(tmp.path()).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn branch_to_missing_node_gives_one_precise_error() {
    let tmp = copy_of("tutorial-3bus");
    edit_json(tmp.path(), |d| d["grid"]["branches"][1]["to"] = json!("n9"));
    let v = violations(tmp.path());
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].file, "scenario.json");
    assert_eq!(v[0].record, "grid/branches/l13");
    assert_eq!(v[0].field, "to");
    assert!(v[0].message.contains("n9"));
}

#[test]
fn short_series_is_named() {
    let tmp = copy_of("tutorial-5bus");
    let path = tmp.path().join("electric_demand.csv");
    let text = fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().take(168).collect(); // header + 167 hours
    fs::write(&path, kept.join("\n") + "\n").unwrap();
    let v = violations(tmp.path());
    assert!(!v.is_empty());
    for x in &v {
        assert_eq!(x.file, "electric_demand.csv");
        assert!(x.message.contains("series too short"), "{x}");
    }
    let named: Vec<&str> = v.iter().map(|x| x.field.as_str()).collect();
    assert_eq!(named, ["n3", "n4", "n5"]);
}

#[test]
fn network_without_heat_source_is_rejected() {
    let tmp = copy_of("tutorial-5bus");
    edit_json(tmp.path(), |d| {
        let n = &mut d["district_heating"][0];
        for key in ["chp", "pth", "storage", "boilers", "thermal_res"] {
            n[key] = json!([]);
        }
    });
    let v = violations(tmp.path());
    assert!(
        v.iter().any(|x| x.record == "district_heating/dhn_south"
            && x.message == "network has no heat source"),
        "{v:?}"
    );
}

#[test]
fn phase_shifter_range_must_contain_zero() {
    let tmp = copy_of("tutorial-5bus");
    edit_json(tmp.path(), |d| {
        d["grid"]["phase_shifters"][0]["angle_min"] = json!(2.0)
    });
    let v = violations(tmp.path());
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].record, "grid/phase_shifters/pst15");
    assert_eq!(v[0].field, "angle_min");
}

#[test]
fn every_problem_is_reported_at_once() {
    let tmp = copy_of("tutorial-3bus");
    edit_json(tmp.path(), |d| {
        d["grid"]["branches"][0]["reactance"] = json!(-1.0);
        d["units"][0]["node"] = json!("nowhere");
    });
    let v = violations(tmp.path());
    assert!(v.iter().any(|x| x.field == "reactance"));
    assert!(v
        .iter()
        .any(|x| x.record == "units/g_north" && x.field == "node"));
}

#[test]
fn unknown_major_version_is_rejected() {
    let tmp = copy_of("tutorial-3bus");
    edit_json(tmp.path(), |d| d["format_version"] = json!("2.0"));
    let v = violations(tmp.path());
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].field, "format_version");

    let tmp = copy_of("tutorial-3bus");
    edit_json(tmp.path(), |d| d["format_version"] = json!("1.7"));
    load_scenario(tmp.path()).unwrap();
}

#[test]
fn malformed_json_reports_position() {
    let tmp = copy_of("tutorial-3bus");
    fs::write(tmp.path().join("scenario.json"), "{\n  \"grid\": [,\n}").unwrap();
    let v = violations(tmp.path());
    assert_eq!(v.len(), 1);
    assert!(v[0].record.starts_with("line 2"), "{}", v[0]);
}

#[test]
fn missing_directory_is_a_scenario_error() {
    let v = violations(Path::new("/definitely/not/here"));
    assert!(v[0].message.contains("cannot read"));
}

#[test]
fn bad_series_cell_names_row_and_column() {
    let tmp = copy_of("tutorial-3bus");
    fs::write(
        tmp.path().join("electric_demand.csv"),
        "hour,n3\n0,90\n1,abc\n2,100\n3,60\n",
    )
    .unwrap();
    let v = violations(tmp.path());
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!((v[0].record.as_str(), v[0].field.as_str()), ("row 3", "n3"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Overwriting a byte range of the scenario file never panics the loader.
    #[test]
    fn corrupted_files_never_panic(pos in 0usize..2000, len in 1usize..40, fill in any::<u8>(), csv in any::<bool>()) {
        let tmp = copy_of("tutorial-3bus");
        let file = if csv { "electric_demand.csv" } else { "scenario.json" };
        let path = tmp.path().join(file);
        let mut bytes = fs::read(&path).unwrap();
        let start = pos % bytes.len();
        let end = (start + len).min(bytes.len());
        for b in &mut bytes[start..end] {
            *b = fill;
        }
        fs::write(&path, bytes).unwrap();
        let _ = load_scenario(tmp.path());
    }
}
