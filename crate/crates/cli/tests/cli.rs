use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use vdlo::scenarios::{prandtl, PrandtlParams};
use vdlo::MeshFile;

fn vdlo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdlo")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstdout: {}\nstderr: {}", out.status.code(), String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

/// Unit square, two triangles, elastic properties irrelevant to rendering.
fn square_mesh() -> Value {
    json!({
        "nodes": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        "elements": [[0, 1, 2, 1], [0, 2, 3, 1]],
        "mode": "plane_stress",
        "materials": [{"id": 1, "E": 1.0e6, "nu": 0.25, "c": 1.0}]
    })
}

fn count_slip_lines(svg: &str) -> usize {
    svg.matches(r#"class="slip""#).count()
}

#[test]
fn bundled_prandtl_config_is_near_two_plus_pi() {
    let tmp = TempDir::new().unwrap();
    let out = vdlo(&["run", "--config", p(&bundled("prandtl.json")), "--out", p(tmp.path())]);
    ok(&out);
    let result = read(&tmp.path().join("result.json"));
    assert_eq!(result["status"], "failure");
    let lambda = result["lambda"].as_f64().unwrap();
    let exact = 2.0 + std::f64::consts::PI;
    assert!((0.8 * exact..=1.2 * exact).contains(&lambda), "λ = {lambda}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("lambda = "));
    let svg = std::fs::read_to_string(tmp.path().join("pattern.svg")).unwrap();
    assert_eq!(count_slip_lines(&svg), result["pattern"].as_array().unwrap().len());
    assert!(svg.contains(&format!("λ = {lambda:.4}")));
}

#[test]
fn staged_pipeline_matches_run() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let params = PrandtlParams { h: 0.25, ..PrandtlParams::default() };
    let s = prandtl(&params).unwrap();
    let mesh = write(dir, "mesh.json", &serde_json::to_value(MeshFile::from_mesh(&s.mesh)).unwrap());
    let load = write(dir, "load.json", &serde_json::to_value(&s.load).unwrap());

    ok(&vdlo(&["fem", "--mesh", p(&mesh), "--load", p(&load), "--out", p(&dir.join("fem"))]));
    let element_stress = dir.join("fem/element_stress.json");
    assert_eq!(read(&element_stress).as_array().unwrap().len(), s.mesh.element_count());
    assert_eq!(read(&dir.join("fem/displacement.json")).as_array().unwrap().len(), s.mesh.node_count());
    ok(&vdlo(&["smooth", "--mesh", p(&mesh), "--element-stress", p(&element_stress), "--out", p(&dir.join("smooth"))]));
    let stress = dir.join("smooth/stress.json");
    ok(&vdlo(&["vdlo", "--mesh", p(&mesh), "--stress", p(&stress), "--out", p(&dir.join("vdlo"))]));
    let staged = read(&dir.join("vdlo/result.json"));

    let config = write(dir, "config.json", &json!({"scenario": {"name": "prandtl", "h": 0.25}}));
    ok(&vdlo(&["run", "--config", p(&config), "--out", p(&dir.join("run"))]));
    let direct = read(&dir.join("run/result.json"));

    let (a, b) = (staged["lambda"].as_f64().unwrap(), direct["lambda"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-9 * b, "staged {a} vs run {b}");
    assert_eq!(staged["pattern"].as_array().unwrap().len(), direct["pattern"].as_array().unwrap().len());
}

#[test]
fn scenario_files_feed_run() {
    let tmp = TempDir::new().unwrap();
    ok(&vdlo(&["scenario", "matrix-inclusion", "--out", p(tmp.path())]));
    let config = read(&tmp.path().join("config.json"));
    assert_eq!(config["mesh"], "mesh.json");
    assert_eq!(config["load"], "load.json");
    let out = vdlo(&["run", "--config", p(&tmp.path().join("config.json")), "--out", p(&tmp.path().join("out"))]);
    ok(&out);
    let result = read(&tmp.path().join("out/result.json"));
    assert_eq!(result["status"], "failure");
    assert!(String::from_utf8_lossy(&out.stdout).contains("limit = "));
}

#[test]
fn load_and_stress_together_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write(tmp.path(), "c.json", &json!({"mesh": "m.json", "load": "l.json", "stress": "s.json"}));
    let out = vdlo(&["run", "--config", p(&config)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("load and stress"));
}

#[test]
fn missing_mesh_is_file_not_found() {
    let tmp = TempDir::new().unwrap();
    let load = write(tmp.path(), "l.json", &json!({}));
    let config = write(tmp.path(), "c.json", &json!({"mesh": "absent.json", "load": p(&load)}));
    let out = vdlo(&["run", "--config", p(&config), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_and_bad_json_have_their_own_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(vdlo(&["run", "--config", p(&tmp.path().join("nope.json"))]).status.code(), Some(4));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(vdlo(&["run", "--config", p(&bad)]).status.code(), Some(6));
    assert_eq!(vdlo(&["run"]).status.code(), Some(2));
    assert_eq!(vdlo(&["--threads", "0", "run", "--config", p(&bad)]).status.code(), Some(3));
}

#[test]
fn ppm_channels_follow_the_linear_map() {
    let tmp = TempDir::new().unwrap();
    let mesh = write(tmp.path(), "mesh.json", &square_mesh());
    let stress = write(tmp.path(), "stress.json", &json!(vec![[-15.0, 5.0, -5.0]; 4]));
    let out = tmp.path().join("img");
    ok(&vdlo(&[
        "render", "--mesh", p(&mesh), "--stress", p(&stress), "--red=-15:5", "--green=-15:5", "--blue=-15:5", "--width", "8",
        "--out", p(&out),
    ]));
    let bytes = std::fs::read(out.join("stress.ppm")).unwrap();
    let header = b"P6\n8 8\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    let pixels = &bytes[header.len()..];
    assert_eq!(pixels.len(), 8 * 8 * 3);
    for px in pixels.chunks(3) {
        assert_eq!(px, [0, 255, 128]);
    }
}

#[test]
fn ppm_outside_domain_is_white() {
    let tmp = TempDir::new().unwrap();
    // Only the lower-right triangle of the unit square.
    let mesh = write(
        tmp.path(),
        "mesh.json",
        &json!({
            "nodes": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
            "elements": [[0, 1, 2, 1]],
            "mode": "plane_stress",
            "materials": [{"id": 1, "E": 1.0e6, "nu": 0.25, "c": 1.0}]
        }),
    );
    let stress = write(tmp.path(), "stress.json", &json!(vec![[0.0, 0.0, 0.0]; 3]));
    ok(&vdlo(&["render", "--mesh", p(&mesh), "--stress", p(&stress), "--width", "4", "--out", p(tmp.path())]));
    let bytes = std::fs::read(tmp.path().join("stress.ppm")).unwrap();
    let pixels = &bytes[b"P6\n4 4\n255\n".len()..];
    // Row 0 is the top; pixel (0, 0) is above the diagonal, (3, 0) below it.
    assert_eq!(&pixels[0..3], [255, 255, 255]);
    assert_eq!(&pixels[9..12], [128, 128, 128]);
}

#[test]
fn degenerate_range_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let mesh = write(tmp.path(), "mesh.json", &square_mesh());
    let stress = write(tmp.path(), "stress.json", &json!(vec![[0.0, 0.0, 0.0]; 4]));
    let out = vdlo(&["render", "--mesh", p(&mesh), "--stress", p(&stress), "--red=1:1", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(11));
}

#[test]
fn svg_segments_match_the_pattern() {
    let tmp = TempDir::new().unwrap();
    let mesh = write(tmp.path(), "mesh.json", &square_mesh());
    let one = write(
        tmp.path(),
        "one.json",
        &json!({"status": "failure", "lambda": 1.5, "dW": 1.0, "dE": 1.5,
                "pattern": [{"a": 0, "b": 2, "slip": 0.7, "opening": 0.0}],
                "timing": {"candidates": 1, "lp_rows": 1, "lp_vars": 2, "iterations": 1, "seconds": 0.0}}),
    );
    ok(&vdlo(&["render", "--mesh", p(&mesh), "--result", p(&one), "--out", p(&tmp.path().join("one"))]));
    let svg = std::fs::read_to_string(tmp.path().join("one/pattern.svg")).unwrap();
    assert_eq!(count_slip_lines(&svg), 1);
    assert!(svg.contains("λ = 1.5000"));
    assert_eq!(svg.matches(r#"class="outline""#).count(), 4);

    let stable = write(
        tmp.path(),
        "stable.json",
        &json!({"status": "stable", "lambda": null, "dW": 0.0, "dE": 0.0, "pattern": [],
                "timing": {"candidates": 1, "lp_rows": 1, "lp_vars": 2, "iterations": 0, "seconds": 0.0}}),
    );
    ok(&vdlo(&["render", "--mesh", p(&mesh), "--result", p(&stable), "--out", p(&tmp.path().join("stable"))]));
    let svg = std::fs::read_to_string(tmp.path().join("stable/pattern.svg")).unwrap();
    assert_eq!(count_slip_lines(&svg), 0);
    assert!(svg.contains(">stable</text>"));
}

#[test]
fn rerender_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let config = write(tmp.path(), "c.json", &json!({"scenario": {"name": "prandtl", "h": 0.25}}));
    ok(&vdlo(&["run", "--config", p(&config), "--out", p(&tmp.path().join("run"))]));
    let params = PrandtlParams { h: 0.25, ..PrandtlParams::default() };
    let mesh = write(tmp.path(), "mesh.json", &serde_json::to_value(MeshFile::from_mesh(&prandtl(&params).unwrap().mesh)).unwrap());
    let render = |dir: &str| {
        let out = tmp.path().join(dir);
        ok(&vdlo(&[
            "render", "--mesh", p(&mesh), "--stress", p(&tmp.path().join("run/stress.json")),
            "--result", p(&tmp.path().join("run/result.json")), "--width", "120", "--out", p(&out),
        ]));
        (std::fs::read(out.join("stress.ppm")).unwrap(), std::fs::read(out.join("pattern.svg")).unwrap())
    };
    let first = render("a");
    let second = render("b");
    assert_eq!(first, second);
    assert_eq!(first.1, std::fs::read(tmp.path().join("run/pattern.svg")).unwrap());
}
