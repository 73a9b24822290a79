mod common;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use common::specs_dir;
use filippov::cli::run;
use serde_json::Value;

fn spec(name: &str) -> String {
    specs_dir().join(format!("{name}.txt")).to_string_lossy().into_owned()
}

fn out(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn call(args: &[&str]) -> i32 {
    run(std::iter::once("filippov").chain(args.iter().copied()))
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn analyze_focus_tangency() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "r.json");
    assert_eq!(call(&["analyze", &spec("tangency_focus"), "--out", o.to_str().unwrap()]), 1);
    let r = &json(&o)["report"];
    assert!((r["s1"]["mu"].as_f64().unwrap() - PI).abs() < 1e-8);
    assert!((r["s1"]["derivative"].as_f64().unwrap() - (-PI).exp()).abs() < 1e-12);
    assert_eq!(r["overall"], "Violated");
}

#[test]
fn analyze_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "r.json");
    assert_eq!(call(&["analyze", &spec("constant"), "--out", o.to_str().unwrap()]), 2);
    let r = &json(&o)["report"];
    let arcs = r["d_census"]["arcs"].as_array().unwrap();
    assert_eq!(arcs.len(), 1);
    assert_eq!(arcs[0]["class"], "Sewing");
    assert!(r["d_census"]["singularities"].as_array().unwrap().is_empty());
    assert!(r["interior_x"].as_array().unwrap().is_empty());
    assert!(r["closed"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_spec_names_entry() {
    let dir = tempfile::tempdir().unwrap();
    let bad = out(dir.path(), "bad.txt");
    std::fs::write(&bad, "degree 2\n[Q2]\n0 0 1\n2 1 3\n").unwrap();
    assert_eq!(call(&["analyze", bad.to_str().unwrap()]), 3);
    assert_eq!(call(&["analyze", out(dir.path(), "missing.txt").to_str().unwrap()]), 3);
    assert_eq!(call(&["frobnicate"]), 3);
    assert_eq!(call(&["--help"]), 0);
}

fn events(path: &Path) -> (String, Vec<String>) {
    let e = json(&path.with_extension("events.json"));
    let kinds = e["events"].as_array().unwrap().iter().map(|v| v["kind"].as_str().unwrap().to_string()).collect();
    (e["closed"].as_str().unwrap().to_string(), kinds)
}

#[test]
fn flow_rotation_closes() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "rot.csv");
    assert_eq!(call(&["flow", &spec("rotation"), "--seed", "1,0.5", "--out", o.to_str().unwrap()]), 0);
    let (closed, kinds) = events(&o);
    assert_eq!(closed, "Type1");
    assert_eq!(kinds.iter().filter(|k| *k == "CrossingAtSewing").count(), 2);
    let csv = std::fs::read_to_string(&o).unwrap();
    assert!(csv.starts_with("t,x,y,field_tag\n"));
    let first = csv.lines().nth(1).unwrap();
    assert_eq!(first.split(',').nth(3), Some("X"));
    assert!(csv.lines().any(|l| l.ends_with(",Y")));

    let again = out(dir.path(), "rot2.csv");
    call(&["flow", &spec("rotation"), "--seed", "1,0.5", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&o).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn flow_sliding_then_window_exit() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "s.csv");
    assert_eq!(call(&["flow", &spec("sliding"), "--seed", "0,1", "--out", o.to_str().unwrap()]), 0);
    let (_, kinds) = events(&o);
    assert_eq!(kinds, ["EnterSliding", "WindowExit"]);
    assert!(std::fs::read_to_string(&o).unwrap().lines().last().unwrap().ends_with(",Fz"));
    assert_eq!(call(&["flow", &spec("sliding"), "--seed", "5,5", "--out", o.to_str().unwrap()]), 3);
}

#[test]
fn portrait_classes() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "p.svg");
    assert_eq!(call(&["portrait", &spec("sliding_sewing"), "--out", o.to_str().unwrap()]), 0);
    let svg = std::fs::read_to_string(&o).unwrap();
    assert_eq!(svg.matches(r#"class="arc-sliding""#).count(), 1);
    assert_eq!(svg.matches(r#"class="arc-sewing""#).count(), 1);

    assert_eq!(call(&["portrait", &spec("fz_saddle"), "--compactified", "--out", o.to_str().unwrap()]), 0);
    let svg = std::fs::read_to_string(&o).unwrap();
    let glyph = svg.lines().find(|l| l.contains(r#"class="glyph-fz-saddle""#)).expect("saddle glyph");
    assert!(glyph.contains(r#"data-x="-1.000000""#));
    assert!(svg.contains("infinity-circle"));

    assert_eq!(call(&["portrait", &spec("sliding"), "--window", "0,0,0,0", "--out", o.to_str().unwrap()]), 0);
    let svg = std::fs::read_to_string(&o).unwrap();
    assert_eq!(svg.matches("<line").count(), 2);
    assert!(!svg.contains("<polyline") && !svg.contains("<circle"));
}

#[test]
fn sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "w.csv");
    assert_eq!(call(&["sweep", &spec("fz_saddle"), "--eps", "0.2,0.1,0.05", "--out", o.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(&o).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let x: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!((x + 1.0).abs() < 0.1);
        assert_eq!(r.split(',').nth(4), Some("Saddle"));
    }
    assert_eq!(call(&["sweep", &spec("sliding"), "--out", o.to_str().unwrap()]), 0);
    assert_eq!(std::fs::read_to_string(&o).unwrap().lines().count(), 1);
    assert_eq!(call(&["sweep", &spec("fz_saddle"), "--eps", "", "--out", o.to_str().unwrap()]), 3);
    assert_eq!(call(&["sweep", &spec("fz_saddle"), "--eps", "0.1,0.2", "--out", o.to_str().unwrap()]), 3);
}

#[test]
fn sweep_cycle_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = out(dir.path(), "c.csv");
    assert_eq!(call(&["sweep", &spec("two_sided_cycle"), "--out", o.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(&o).unwrap();
    let cycle = text.lines().find(|l| l.starts_with("cycle,")).expect("cycle row");
    let derivative: f64 = cycle.rsplit(',').next().unwrap().parse().unwrap();
    assert!(derivative < 1.0);
}

#[test]
fn json_spec_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let s = out(dir.path(), "c.json");
    std::fs::write(&s, r#"{"degree":0,"p1":[[0,0,1.0]],"q1":[[0,0,1.0]],"p2":[[0,0,1.0]],"q2":[[0,0,1.0]]}"#).unwrap();
    let o = out(dir.path(), "r.json");
    assert_eq!(call(&["analyze", s.to_str().unwrap(), "--out", o.to_str().unwrap()]), 2);
}
