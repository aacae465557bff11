mod common;

use std::process::{Command, Output};

use common::{fixture, update, Workspace};
use serde_json::{json, Value};

fn lumi(ws: &Workspace, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lumi"))
        .args(["--sessions-dir", ws.path("sessions").to_str().unwrap(), "--fixture", ws.path("fixture.json").to_str().unwrap()])
        .args(args)
        .env_remove("LUMI_MODE")
        .env_remove("LUMI_CONFIG")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn grade_feedback_export_render() {
    let ws = Workspace::new();
    ws.config(&fixture(json!([update("slight", json!({"saturation": 1.02}))])));
    let src = ws.frame("shot.png");

    let graded = stdout_json(&lumi(&ws, &["grade", "--source", src.to_str().unwrap(), "--curve", "slog3"]));
    assert_eq!(graded["iteration"], 0);
    let id = graded["id"].as_str().unwrap().to_string();

    let tree = stdout_json(&lumi(&ws, &["tree", "--session", &id]));
    assert_eq!(tree["best_id"], 4);

    // Each process replays the fixture from the start; the reflector key is per step.
    let fb = stdout_json(&lumi(&ws, &["feedback", "--session", &id, "more color please"]));
    assert_eq!(fb["iteration"], 1);

    let out_dir = ws.path("deliver");
    let ex = stdout_json(&lumi(&ws, &["export", "--session", &id, "--out", out_dir.to_str().unwrap()]));
    assert_eq!(ex["iteration"], 1);
    for ext in ["cube", "cdl", "report.json"] {
        assert!(out_dir.join(format!("{id}-it1.{ext}")).is_file(), "{ext}");
    }

    let clip = ws.clip("clip", 3);
    let rendered = ws.path("rendered");
    let r = stdout_json(&lumi(&ws, &["render", "--session", &id, "--clip", clip.to_str().unwrap(), "--out", rendered.to_str().unwrap()]));
    assert_eq!(r["written"].as_array().unwrap().len(), 3);

    std::fs::write(clip.join("shot_0003.png"), b"junk").unwrap();
    let bad = lumi(&ws, &["render", "--session", &id, "--clip", clip.to_str().unwrap(), "--out", rendered.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn stats_prints_the_exposure_profile() {
    let ws = Workspace::new();
    let src = ws.frame("shot.png");
    let out =
        Command::new(env!("CARGO_BIN_EXE_lumi")).args(["stats", "--source", src.to_str().unwrap(), "--curve", "slog3"]).output().unwrap();
    let v = stdout_json(&out);
    let (b, m, w) = (v["black_point_ire"].as_f64().unwrap(), v["mid_gray_ire"].as_f64().unwrap(), v["white_point_ire"].as_f64().unwrap());
    assert!(b <= m && m <= w, "{v}");
}

#[test]
fn failures_exit_nonzero_with_the_code() {
    let ws = Workspace::new();
    ws.config(&fixture(json!([])));
    let out = lumi(&ws, &["state", "--session", "s-000000000000"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("session_not_found"));
}

#[test]
fn bundled_demo_runs_end_to_end() {
    let ws = Workspace::new();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/demo/lumi.toml");
    let sessions = ws.path("sessions");
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_lumi"))
            .args(["--config", config, "--sessions-dir", sessions.to_str().unwrap()])
            .args(args)
            .env_remove("LUMI_MODE")
            .output()
            .unwrap()
    };
    let chart = ws.path("chart.png");
    let made = Command::new(env!("CARGO_BIN_EXE_lumi"))
        .args(["chart", "--width", "384", "--height", "216", "--out", chart.to_str().unwrap()])
        .output()
        .unwrap();
    stdout_json(&made);

    let graded = stdout_json(&run(&["grade", "--source", chart.to_str().unwrap(), "--curve", "slog3"]));
    let id = graded["id"].as_str().unwrap().to_string();
    assert_eq!(graded["history"][0]["params"]["gain"], json!([1.03, 1.0, 1.0]));
    assert_eq!(stdout_json(&run(&["feedback", "--session", &id, "a touch more colour"]))["iteration"], 1);
    let done = stdout_json(&run(&["feedback", "--session", &id, "that's the one"]));
    assert_eq!(done["status"], "approved");
    assert_eq!(stdout_json(&run(&["export", "--session", &id]))["iteration"], 1);
}
