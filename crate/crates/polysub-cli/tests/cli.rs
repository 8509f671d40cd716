//! End-to-end checks of the command-line surface: subcommands, exit codes,
//! pipes, and byte determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_polysub")
}

fn assets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(assets_dir())
        .output()
        .expect("binary runs")
}

fn run_with_stdin(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .current_dir(assets_dir())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    use std::io::Write;
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin)
        .expect("stdin accepts input");
    child.wait_with_output().expect("binary exits")
}

#[test]
fn validate_shipped_assets_exit_zero() {
    for file in ["chair.tiles", "ax.tiles", "ax5.tiles", "ax-seed.tiles"] {
        let out = run(&["validate", file, "--coherence"]);
        assert!(
            out.status.success(),
            "{file}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn validate_broken_tileset_exits_one_and_prints_holes() {
    let dir = tempdir();
    let broken = br#"{"name":"broken","scale":2,"metadata":{},
      "tiles":[{"id":"L","cells":[[0,0],[1,0],[0,1]],"marks":[]}],
      "rules":[{"parent":"L","children":[
        {"tile":"L","t":"R0","o":[0,0]},
        {"tile":"L","t":"R90","o":[3,0]},
        {"tile":"L","t":"R270","o":[0,3]}]}]}"#;
    let path = dir.join("broken.tiles");
    std::fs::write(&path, broken).unwrap();
    let out = Command::new(bin())
        .args(["validate"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("(1,1)") && stderr.contains("(2,1)") && stderr.contains("(1,2)"));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["expand", "chair.tiles", "--tile", "L"]); // missing --depth
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["validate", "does-not-exist.tiles"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn expand_pipes_into_analyze_cover() {
    let expanded = run(&["expand", "chair.tiles", "--tile", "L", "--depth", "6"]);
    assert!(expanded.status.success());
    let analyzed = run_with_stdin(
        &["analyze", "-", "--tileset", "chair.tiles", "--cover"],
        &expanded.stdout,
    );
    assert!(
        analyzed.status.success(),
        "{}",
        String::from_utf8_lossy(&analyzed.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&analyzed.stdout).unwrap();
    assert_eq!(report["cover"]["clean"], serde_json::json!(true));
}

#[test]
fn analyze_detects_overlap_and_exits_one() {
    let patch = br#"{"tileset":"chair","level":0,"placements":[
      {"tile":"L","t":"R0","o":[0,0]},{"tile":"L","t":"R0","o":[0,0]}]}"#;
    let out = run_with_stdin(
        &["analyze", "-", "--tileset", "chair.tiles", "--cover"],
        patch,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn streamed_and_document_patches_analyze_identically() {
    let doc = run(&["expand", "ax.tiles", "--tile", "square6", "--depth", "3"]);
    let stream = run(&[
        "expand", "ax.tiles", "--tile", "square6", "--depth", "3", "--stream",
    ]);
    assert!(doc.status.success() && stream.status.success());
    assert_ne!(doc.stdout, stream.stdout);
    let args = [
        "analyze", "-", "--tileset", "ax.tiles", "--cover", "--stitches", "--curves",
    ];
    let a = run_with_stdin(&args, &doc.stdout);
    let b = run_with_stdin(&args, &stream.stdout);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn render_produces_svg_with_marks() {
    let patch = run(&["expand", "ax.tiles", "--tile", "square6", "--depth", "2"]);
    assert!(patch.status.success());
    let svg = run_with_stdin(
        &[
            "render", "-", "--tileset", "ax.tiles",
            "--layers", "shape,tile-marks,super-marks",
            "--unit", "12",
        ],
        &patch.stdout,
    );
    assert!(svg.status.success(), "{}", String::from_utf8_lossy(&svg.stderr));
    let text = String::from_utf8(svg.stdout).unwrap();
    assert!(text.contains("<svg"));
    assert!(text.contains("<path"));
    assert!(text.contains("<polyline"));
}

#[test]
fn transform_pipeline_over_files_matches_shipped_ax() {
    let dir = tempdir();
    let seed = assets_dir().join("ax-seed.tiles");
    let fused = dir.join("fused.tiles");
    let deduped = dir.join("deduped.tiles");
    let final_ts = dir.join("final.tiles");

    let out = Command::new(bin())
        .args(["transform"])
        .arg(&seed)
        .args([
            "fuse", "white", "blue", "--offset", "0,3", "--new-id", "column", "-o",
        ])
        .arg(&fused)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = Command::new(bin())
        .args(["transform"])
        .arg(&fused)
        .args(["dedup", "-o"])
        .arg(&deduped)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = Command::new(bin())
        .args(["transform"])
        .arg(&deduped)
        .args(["eliminate", "column", "-o"])
        .arg(&final_ts)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let produced = std::fs::read(&final_ts).unwrap();
    let produced: serde_json::Value = serde_json::from_slice(&produced).unwrap();
    assert_eq!(produced["tiles"].as_array().unwrap().len(), 3);
    let shipped: serde_json::Value =
        serde_json::from_slice(&std::fs::read(assets_dir().join("ax.tiles")).unwrap()).unwrap();
    assert_eq!(produced["tiles"], shipped["tiles"]);
    assert_eq!(produced["rules"], shipped["rules"]);
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "polysub-cli-test-{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
