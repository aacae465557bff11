mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use common::{fixture, update, Workspace};
use http_body_util::BodyExt;
use lumi_core::frame_io::decode_png;
use lumi_core::lut::cube::parse_cube_str;
use lumi_core::lut::Lut3D;
use lumi_service::http::router;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    app: Router,
}

struct Reply {
    status: StatusCode,
    content_type: String,
    disposition: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    fn error_code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap().to_string()
    }
}

impl Api {
    fn new(ws: &Workspace, fx: &Value) -> Self {
        Self { app: router(Arc::new(ws.engine(fx))) }
    }

    async fn call(&self, method: Method, uri: &str, body: Option<String>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header(header::CONTENT_TYPE, "application/json");
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let content_type = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
        let disposition = resp.headers().get(header::CONTENT_DISPOSITION).map(|v| v.to_str().unwrap().to_string());
        let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, content_type, disposition, body }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.call(Method::GET, uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> Reply {
        self.call(Method::POST, uri, Some(body.to_string())).await
    }

    async fn create(&self, source: &std::path::Path) -> String {
        let r = self.post("/sessions", json!({"source": source, "curve": "slog3"})).await;
        assert_eq!(r.status, StatusCode::CREATED);
        r.json()["id"].as_str().unwrap().to_string()
    }
}

#[tokio::test]
async fn full_session_over_http() {
    let ws = Workspace::new();
    let api = Api::new(&ws, &fixture(json!([update("slight", json!({"saturation": 1.02})), {"action": "approve"}])));
    let id = api.create(&ws.frame("shot.png")).await;

    let state = api.get(&format!("/sessions/{id}/state")).await;
    assert_eq!(state.status, StatusCode::OK);
    assert_eq!(state.json()["iteration"], -1);

    let graded = api.post(&format!("/sessions/{id}/grade"), json!({})).await;
    assert_eq!(graded.status, StatusCode::OK);
    assert_eq!(graded.json()["iteration"], 0);

    let tree = api.get(&format!("/sessions/{id}/tree")).await.json();
    assert_eq!(tree["best_id"], 4);
    assert_eq!(tree["nodes"].as_array().unwrap().len(), 10);

    let fb = api.post(&format!("/sessions/{id}/feedback"), json!({"text": "a bit more color"})).await;
    assert_eq!(fb.status, StatusCode::OK);
    let v = fb.json();
    assert_eq!(v["iteration"], 1);
    assert_eq!(v["history"][1]["changed"], json!(["saturation"]));
    assert_eq!(v["history"][1]["magnitude"], "slight");

    let preview = api.get(&format!("/sessions/{id}/preview?iteration=1")).await;
    assert_eq!((preview.status, preview.content_type.as_str()), (StatusCode::OK, "image/png"));
    assert_eq!(decode_png(&preview.body).unwrap().width(), 96);

    let cube = api.get(&format!("/sessions/{id}/export/cube")).await;
    assert_eq!(cube.status, StatusCode::OK);
    assert_eq!(cube.disposition.as_deref(), Some(format!("attachment; filename=\"{id}-it1.cube\"").as_str()));
    let lut: Lut3D<f64> = parse_cube_str(std::str::from_utf8(&cube.body).unwrap()).unwrap();
    assert_eq!(lut.size(), 33);

    let cube0 = api.get(&format!("/sessions/{id}/export/cube?iteration=0")).await;
    assert!(cube0.disposition.unwrap().contains("-it0.cube"));
    assert_ne!(cube0.body, cube.body);

    let cdl = api.get(&format!("/sessions/{id}/export/cdl")).await;
    assert_eq!(cdl.content_type, "application/xml");
    assert!(String::from_utf8(cdl.body).unwrap().contains("<SatNode>"));

    let report = api.get(&format!("/sessions/{id}/export/report")).await;
    assert_eq!(report.content_type, "application/json");
    assert_eq!(report.json()["iteration"], 1);

    let done = api.post(&format!("/sessions/{id}/feedback"), json!({"text": "perfect"})).await;
    assert_eq!(done.json()["status"], "approved");
    let late = api.post(&format!("/sessions/{id}/feedback"), json!({"text": "one more"})).await;
    assert_eq!((late.status, late.error_code().as_str()), (StatusCode::CONFLICT, "session_inactive"));
}

#[tokio::test]
async fn errors_are_json_with_stable_codes() {
    let ws = Workspace::new();
    let bad = update("slight", json!({"saturation": 3.0}));
    let api = Api::new(&ws, &fixture(json!([bad, bad, bad])));
    let src = ws.frame("shot.png");

    let cases: Vec<(Reply, StatusCode, &str)> = vec![
        (api.get("/sessions/s-000000000000/state").await, StatusCode::NOT_FOUND, "session_not_found"),
        (api.get("/nowhere").await, StatusCode::NOT_FOUND, "route_not_found"),
        (api.post("/sessions", json!({"source": src, "curve": "cineon"})).await, StatusCode::BAD_REQUEST, "unknown_curve"),
        (api.post("/sessions", json!({"source": src, "curve": "slog3", "gamut": "xyz"})).await, StatusCode::BAD_REQUEST, "unknown_gamut"),
        (
            api.post("/sessions", json!({"source": ws.path("nope.png"), "curve": "slog3"})).await,
            StatusCode::BAD_REQUEST,
            "unreadable_source",
        ),
        (api.post("/sessions", json!({"curve": "slog3"})).await, StatusCode::BAD_REQUEST, "invalid_body"),
        (api.call(Method::POST, "/sessions", Some("{not json".into())).await, StatusCode::BAD_REQUEST, "invalid_body"),
    ];
    for (reply, status, code) in cases {
        assert_eq!((reply.status, reply.error_code().as_str()), (status, code));
        assert!(reply.json()["error"]["message"].is_string());
    }

    let id = api.create(&src).await;
    let fb_uri = format!("/sessions/{id}/feedback");
    let fb = |text: &'static str| api.post(&fb_uri, json!({"text": text}));
    let r = fb("warmer").await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::CONFLICT, "not_graded"));
    let r = api.get(&format!("/sessions/{id}/export/cube")).await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::CONFLICT, "not_graded"));

    assert_eq!(api.post(&format!("/sessions/{id}/grade"), json!({})).await.status, StatusCode::OK);
    let r = api.post(&format!("/sessions/{id}/grade"), json!({})).await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::CONFLICT, "already_graded"));
    let r = api.get(&format!("/sessions/{id}/preview?iteration=7")).await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::NOT_FOUND, "iteration_not_found"));
    let r = api.get(&format!("/sessions/{id}/preview?iteration=first")).await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::BAD_REQUEST, "invalid_query"));
    let r = fb(" ").await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::BAD_REQUEST, "empty_feedback"));
    let r = fb("saturate it hard").await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "reflection_failed"));
    let r = api.post(&format!("/sessions/{id}/feedback"), json!({"note": "x"})).await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::BAD_REQUEST, "invalid_body"));
}

#[tokio::test]
async fn backend_outage_is_a_bad_gateway() {
    let ws = Workspace::new();
    let mut fx = fixture(json!([]));
    fx["expander"] = json!({"node-0": {"$error": "down"}});
    let api = Api::new(&ws, &fx);
    let id = api.create(&ws.frame("shot.png")).await;
    let r = api.post(&format!("/sessions/{id}/grade"), json!({})).await;
    assert_eq!((r.status, r.error_code().as_str()), (StatusCode::BAD_GATEWAY, "search_failed"));
    assert_eq!(api.get(&format!("/sessions/{id}/state")).await.json()["status"], "failed");
}

#[tokio::test]
async fn concurrent_sessions_do_not_interfere() {
    let ws = Workspace::new();
    let api = Arc::new(Api::new(&ws, &fixture(json!([]))));
    let src = ws.frame("shot.png");
    let mut ids = Vec::new();
    for _ in 0..3 {
        ids.push(api.create(&src).await);
    }
    let mut tasks = Vec::new();
    for id in ids.clone() {
        let api = api.clone();
        tasks.push(tokio::spawn(async move { api.post(&format!("/sessions/{id}/grade"), json!({})).await.status }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let trees: Vec<Value> = trees_of(&api, &ids).await;
    assert!(trees.windows(2).all(|w| w[0] == w[1]), "keyed fixture replies make every search identical");
}

async fn trees_of(api: &Api, ids: &[String]) -> Vec<Value> {
    let mut out = Vec::new();
    for id in ids {
        out.push(api.get(&format!("/sessions/{id}/tree")).await.json());
    }
    out
}
