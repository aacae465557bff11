#![allow(dead_code)]

use std::sync::Arc;

use lumi_agent::knowledge::{Heuristic, HeuristicStore, OfflineEmbedder};
use lumi_agent::perception::{analyze_scene, AnchorRef, Perceived, PerceptionOptions};
use lumi_agent::scripted::ScriptedFixture;
use lumi_agent::{Backends, Role};
use lumi_core::color::{Gamut, LogCurve};
use lumi_core::frame::Frame;
use lumi_core::synthetic::log_chart;
use serde_json::{json, Value};

pub fn chart() -> Frame<f32> {
    log_chart(LogCurve::SLog3, Gamut::SGamut3Cine, 96, 64)
}

pub fn analyst_reply() -> Value {
    json!({
        "lighting_mood": "golden_hour",
        "narrative": {"genre": "nature documentary", "emotion": "serene"},
        "subjects": ["test chart"],
        "protected_tones": {"skin": [15, 45]}
    })
}

/// Runs perception on the synthetic chart with a one-reply analyst.
pub fn perceive() -> Perceived {
    let fx = ScriptedFixture::from_json(&json!({"analyst": [analyst_reply()]})).unwrap();
    analyze_scene(&chart(), AnchorRef::from_bytes("chart", b"chart"), fx.model(Role::Analyst).as_ref(), PerceptionOptions::default())
        .unwrap()
}

/// A store with no action hints, so the search root stays at identity.
pub fn plain_store() -> HeuristicStore {
    let texts = [
        ("warm-base", "warm cinematic grade with gentle highlight roll-off"),
        ("highlight-keep", "preserve highlight detail in bright skies"),
        ("skin-guard", "keep skin tones natural while warming"),
        ("cool-night", "cool blue night exterior with deep blacks"),
    ];
    let entries = texts
        .iter()
        .map(|(id, t)| Heuristic { id: id.to_string(), text: t.to_string(), action_hint: None, tags: vec![], embedding: vec![] })
        .collect();
    HeuristicStore::from_heuristics(entries, &OfflineEmbedder::default()).unwrap()
}

pub fn backends(fx: &ScriptedFixture) -> Backends {
    fx.backends(Arc::new(OfflineEmbedder::default()))
}

pub fn candidates(deltas: &[(&str, f64)]) -> Value {
    let items: Vec<Value> =
        deltas.iter().map(|(field, d)| json!({"delta": {*field: d}, "rationale": format!("nudge {field} by {d}")})).collect();
    json!({ "candidates": items })
}

pub fn score(s: f64) -> Value {
    json!({"score": s, "critique": format!("scored {s}")})
}

/// The search fixture used across tests. Depth 1 scores 3, 4, 4 keep nodes
/// 2 and 3 (tie broken by id); depth 2 has a three-way tie at 4.5 between
/// nodes 4, 6 and 8.
pub fn search_script() -> Value {
    json!({
        "expander": {
            "node-0": candidates(&[("lift.b", 0.01), ("gain.r", 0.03), ("saturation", 0.1)]),
            "node-2": candidates(&[("gamma.g", -0.05), ("contrast", 0.1), ("lift.r", -0.02)]),
            "node-3": candidates(&[("gain.b", -0.04), ("pivot", 0.02), ("gamma.r", 0.05)]),
        },
        "critic": {
            "node-1": score(3.0), "node-2": score(4.0), "node-3": score(4.0),
            "node-4": score(4.5), "node-5": score(2.0), "node-6": score(4.5),
            "node-7": score(3.0), "node-8": score(4.5), "node-9": score(1.0),
        }
    })
}
