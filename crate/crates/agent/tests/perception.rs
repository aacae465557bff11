mod common;

use lumi_agent::perception::{analyze_scene, AnchorRef, PerceptionError, PerceptionOptions, SceneState};
use lumi_agent::scripted::ScriptedFixture;
use lumi_agent::{RetrievalRules, Role};
use lumi_core::frame::{Colorimetry, Frame};
use serde_json::json;

fn perceive_with(script: serde_json::Value) -> (Result<lumi_agent::perception::Perceived, PerceptionError>, ScriptedFixture) {
    let fx = ScriptedFixture::from_json(&script).unwrap();
    let out = analyze_scene(
        &common::chart(),
        AnchorRef::from_bytes("chart", b"x"),
        fx.model(Role::Analyst).as_ref(),
        PerceptionOptions::default(),
    );
    (out, fx)
}

#[test]
fn analyst_sees_only_the_normalized_preview() {
    let big = lumi_core::synthetic::log_chart(lumi_core::color::LogCurve::SLog3, lumi_core::color::Gamut::SGamut3Cine, 1600, 900);
    let fx = ScriptedFixture::from_json(&json!({"analyst": [common::analyst_reply()]})).unwrap();
    let p =
        analyze_scene(&big, AnchorRef::from_bytes("big", b"big"), fx.model(Role::Analyst).as_ref(), PerceptionOptions::default()).unwrap();
    let reqs = fx.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].image_colorimetry(), Some(Colorimetry::Rec709Display));
    let img = reqs[0].image.as_ref().unwrap();
    assert_eq!((img.width, img.height), (768, 432));
    assert_eq!(p.normalized.colorimetry(), Colorimetry::Rec709Display);
    assert_eq!((p.normalized.width(), p.normalized.height()), (1600, 900));
    assert!(!p.scene.semantic_degraded);
    assert_eq!(p.scene.semantic.lighting_mood, "golden_hour");
    assert_eq!(p.scene.semantic.protected_tones[0].name, "skin");
}

#[test]
fn retries_are_counted() {
    let (p, fx) = perceive_with(json!({"analyst": ["I think it is a sunset", {"lighting_mood": ""}, common::analyst_reply()]}));
    let p = p.unwrap();
    assert_eq!(p.scene.analyst_retries, 2);
    assert!(!p.scene.semantic_degraded);
    assert_eq!(fx.requests().iter().map(|r| r.attempt).collect::<Vec<_>>(), [0, 1, 2]);
}

#[test]
fn three_bad_replies_degrade_to_physical_only() {
    let (p, _) = perceive_with(json!({"analyst": ["nope", "nope", "nope"]}));
    let p = p.unwrap();
    assert!(p.scene.semantic_degraded);
    assert!(p.degradation.is_some());
    assert_eq!(p.scene.semantic.lighting_mood, "unknown");
    assert_eq!(RetrievalRules::builtin().query(&p.scene, None), "balanced cinematic grade");
    assert_eq!(RetrievalRules::builtin().query(&p.scene, Some("teal and orange")), "teal and orange");
}

#[test]
fn transport_failure_is_an_error() {
    let (p, _) = perceive_with(json!({"analyst": [{"$error": "connection refused"}]}));
    assert!(matches!(p, Err(PerceptionError::Backend(_))));
}

#[test]
fn display_frames_are_rejected() {
    let display = Frame::filled(4, 4, [0.5f32; 3], Colorimetry::Rec709Display).unwrap();
    let fx = ScriptedFixture::from_json(&json!({})).unwrap();
    let r = analyze_scene(&display, AnchorRef::from_bytes("d", b"d"), fx.model(Role::Analyst).as_ref(), PerceptionOptions::default());
    assert!(matches!(r, Err(PerceptionError::NotCameraLog(_))));
    assert!(fx.requests().is_empty());
}

#[test]
fn scene_state_round_trips() {
    let p = common::perceive();
    let doc = p.scene.to_document();
    let back = SceneState::from_document(&doc).unwrap();
    assert_eq!(back, p.scene);
    assert_eq!(back.to_document(), doc);
}

#[test]
fn rules_pick_the_genre_specific_query() {
    let p = common::perceive();
    assert_eq!(RetrievalRules::builtin().query(&p.scene, None), "warm cinematic grade with highlight preservation");
}
