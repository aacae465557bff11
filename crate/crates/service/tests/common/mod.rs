#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lumi_core::color::{Gamut, LogCurve};
use lumi_core::frame_io::write_frame;
use lumi_core::synthetic::log_chart;
use lumi_service::config::{BackendMode, EngineConfig};
use lumi_service::engine::{CreateSession, Engine};
use serde_json::{json, Value};

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    /// A 96x64 S-Log3 chart written as a 16-bit PNG.
    pub fn frame(&self, rel: &str) -> PathBuf {
        let p = self.path(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        write_frame(&p, &log_chart(LogCurve::SLog3, Gamut::SGamut3Cine, 96, 64)).unwrap();
        p
    }

    pub fn clip(&self, rel: &str, n: usize) -> PathBuf {
        for i in 1..=n {
            self.frame(&format!("{rel}/shot_{i:04}.png"));
        }
        self.path(rel)
    }

    pub fn config(&self, fixture: &Value) -> EngineConfig {
        let fx = self.path("fixture.json");
        std::fs::write(&fx, serde_json::to_string_pretty(fixture).unwrap()).unwrap();
        EngineConfig { mode: BackendMode::Scripted, fixture: Some(fx), sessions_dir: self.path("sessions"), ..EngineConfig::default() }
    }

    pub fn engine(&self, fixture: &Value) -> Engine {
        Engine::new(self.config(fixture)).unwrap()
    }
}

pub fn create(source: &Path) -> CreateSession {
    CreateSession { source: source.to_path_buf(), curve: "slog3".into(), gamut: None, directive: None }
}

pub fn analyst_reply() -> Value {
    json!({
        "lighting_mood": "golden_hour",
        "narrative": {"genre": "nature documentary", "emotion": "serene"},
        "subjects": ["test chart"],
        "protected_tones": {"skin": [15, 45]}
    })
}

pub fn candidates(deltas: &[(&str, f64)]) -> Value {
    let items: Vec<Value> =
        deltas.iter().map(|(field, d)| json!({"delta": {*field: d}, "rationale": format!("nudge {field} by {d}")})).collect();
    json!({ "candidates": items })
}

pub fn score(s: f64) -> Value {
    json!({"score": s, "critique": format!("scored {s}")})
}

pub fn update(magnitude: &str, targets: Value) -> Value {
    json!({"action": "update", "magnitude": magnitude, "targets": targets, "rationale": "as asked"})
}

/// Analyst, a full search whose winner is node 4, and the given reflector replies.
pub fn fixture(reflector: Value) -> Value {
    json!({
        "analyst": {"scene": analyst_reply()},
        "expander": {
            "node-0": candidates(&[("lift.b", 0.01), ("gain.r", 0.03), ("saturation", 0.1)]),
            "node-2": candidates(&[("gamma.g", -0.05), ("contrast", 0.1), ("lift.r", -0.02)]),
            "node-3": candidates(&[("gain.b", -0.04), ("pivot", 0.02), ("gamma.r", 0.05)]),
        },
        "critic": {
            "node-1": score(3.0), "node-2": score(4.0), "node-3": score(4.0),
            "node-4": score(4.5), "node-5": score(2.0), "node-6": score(4.5),
            "node-7": score(3.0), "node-8": score(4.5), "node-9": score(1.0),
        },
        "reflector": reflector,
    })
}
