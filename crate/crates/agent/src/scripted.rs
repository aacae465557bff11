//! Replays canned model replies from a JSON fixture, for hermetic runs.
//!
//! A fixture has one entry per role (`analyst`, `expander`, `critic`,
//! `reflector`). An entry is either
//!
//! * an array: replies handed out first-in first-out, whatever the key, or
//! * an object keyed by request key (`"node-4"`, `"step-2"`, ...). A key
//!   holding an array pops from it; a key holding anything else returns that
//!   reply every time. The key `"*"` catches requests with no entry of their
//!   own.
//!
//! A reply is a string (returned verbatim), an object `{"$error": "..."}`
//! (the call fails with [`BackendError::Scripted`]), or any other JSON value
//! (returned as compact JSON text). Every request is appended to a log that
//! tests inspect; nothing ever touches the network.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex};

use lumi_core::frame::Colorimetry;
use serde_json::Value;

use crate::backend::{BackendError, Backends, EmbedBackend, ImagePayload, ModelRequest, Role, TextModel};

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("fixture is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("fixture: {0}")]
    Shape(String),
}

#[derive(Debug, Clone)]
enum Reply {
    Text(String),
    Error(String),
}

impl Reply {
    fn from_value(v: &Value) -> Self {
        match v {
            Value::String(s) => Reply::Text(s.clone()),
            Value::Object(m) if m.contains_key("$error") => {
                Reply::Error(m["$error"].as_str().map(str::to_string).unwrap_or_else(|| m["$error"].to_string()))
            }
            other => Reply::Text(other.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
enum Slot {
    Queue(VecDeque<Reply>),
    Fixed(Reply),
}

impl Slot {
    fn from_value(v: &Value) -> Self {
        match v {
            Value::Array(items) => Slot::Queue(items.iter().map(Reply::from_value).collect()),
            other => Slot::Fixed(Reply::from_value(other)),
        }
    }

    fn take(&mut self) -> Option<Reply> {
        match self {
            Slot::Queue(q) => q.pop_front(),
            Slot::Fixed(r) => Some(r.clone()),
        }
    }
}

#[derive(Debug, Clone)]
enum Script {
    Fifo(VecDeque<Reply>),
    Keyed(HashMap<String, Slot>),
}

/// One request as the scripted backend saw it.
#[derive(Debug, Clone)]
pub struct LoggedRequest {
    pub role: Role,
    pub key: String,
    pub attempt: u32,
    pub system: String,
    pub prompt: String,
    pub image: Option<ImagePayload>,
}

impl LoggedRequest {
    pub fn image_colorimetry(&self) -> Option<Colorimetry> {
        self.image.as_ref().map(|i| i.colorimetry)
    }
}

#[derive(Debug, Default)]
struct State {
    scripts: HashMap<Role, Script>,
    log: Vec<LoggedRequest>,
}

/// Shared replay state for all four roles.
#[derive(Debug, Clone, Default)]
pub struct ScriptedFixture {
    state: Arc<Mutex<State>>,
}

impl ScriptedFixture {
    pub fn from_json(value: &Value) -> Result<Self, FixtureError> {
        let obj = value.as_object().ok_or_else(|| FixtureError::Shape("top level must be an object".into()))?;
        let mut scripts = HashMap::new();
        for (name, entry) in obj {
            let role =
                Role::ALL.into_iter().find(|r| r.as_str() == name).ok_or_else(|| FixtureError::Shape(format!("unknown role {name:?}")))?;
            let script = match entry {
                Value::Array(items) => Script::Fifo(items.iter().map(Reply::from_value).collect()),
                Value::Object(map) => Script::Keyed(map.iter().map(|(k, v)| (k.clone(), Slot::from_value(v))).collect()),
                _ => return Err(FixtureError::Shape(format!("{name}: expected an array or an object"))),
            };
            scripts.insert(role, script);
        }
        Ok(Self { state: Arc::new(Mutex::new(State { scripts, log: Vec::new() })) })
    }

    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn model(&self, role: Role) -> Arc<dyn TextModel> {
        Arc::new(ScriptedModel { role, fixture: self.clone() })
    }

    /// All four roles from this fixture plus the given embedder.
    pub fn backends(&self, embedder: Arc<dyn EmbedBackend>) -> Backends {
        Backends {
            analyst: self.model(Role::Analyst),
            expander: self.model(Role::Expander),
            critic: self.model(Role::Critic),
            reflector: self.model(Role::Reflector),
            embedder,
        }
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.state.lock().unwrap().log.clone()
    }

    pub fn requests_for(&self, role: Role) -> Vec<LoggedRequest> {
        self.requests().into_iter().filter(|r| r.role == role).collect()
    }

    fn reply(&self, request: &ModelRequest) -> Result<String, BackendError> {
        let mut state = self.state.lock().unwrap();
        state.log.push(LoggedRequest {
            role: request.role,
            key: request.key.clone(),
            attempt: request.attempt,
            system: request.system.clone(),
            prompt: request.prompt.clone(),
            image: request.image.clone(),
        });
        let exhausted = || BackendError::FixtureExhausted { role: request.role, key: request.key.clone() };
        let reply = match state.scripts.get_mut(&request.role) {
            None => None,
            Some(Script::Fifo(q)) => q.pop_front(),
            Some(Script::Keyed(map)) => match map.get_mut(&request.key) {
                Some(slot) => slot.take(),
                None => map.get_mut("*").and_then(Slot::take),
            },
        };
        match reply.ok_or_else(exhausted)? {
            Reply::Text(t) => Ok(t),
            Reply::Error(e) => Err(BackendError::Scripted(e)),
        }
    }
}

struct ScriptedModel {
    role: Role,
    fixture: ScriptedFixture,
}

impl TextModel for ScriptedModel {
    fn name(&self) -> String {
        format!("scripted/{}", self.role)
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError> {
        debug_assert_eq!(request.role, self.role);
        self.fixture.reply(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn req(role: Role, key: &str) -> ModelRequest {
        ModelRequest { role, key: key.into(), attempt: 0, system: String::new(), prompt: "p".into(), image: None }
    }

    #[test]
    fn fifo_keyed_fixed_and_errors() {
        let fx = ScriptedFixture::from_json(&json!({
            "analyst": ["one", {"score": 2}],
            "critic": {"node-1": [{"$error": "boom"}, "late"], "node-2": "always", "*": ["spare"]},
        }))
        .unwrap();
        let analyst = fx.model(Role::Analyst);
        assert_eq!(analyst.complete(&req(Role::Analyst, "x")).unwrap(), "one");
        assert_eq!(analyst.complete(&req(Role::Analyst, "x")).unwrap(), "{\"score\":2}");
        assert!(matches!(analyst.complete(&req(Role::Analyst, "x")), Err(BackendError::FixtureExhausted { .. })));

        let critic = fx.model(Role::Critic);
        assert_eq!(critic.complete(&req(Role::Critic, "node-1")), Err(BackendError::Scripted("boom".into())));
        assert_eq!(critic.complete(&req(Role::Critic, "node-1")).unwrap(), "late");
        assert_eq!(critic.complete(&req(Role::Critic, "node-2")).unwrap(), "always");
        assert_eq!(critic.complete(&req(Role::Critic, "node-2")).unwrap(), "always");
        assert_eq!(critic.complete(&req(Role::Critic, "node-9")).unwrap(), "spare");
        assert!(critic.complete(&req(Role::Critic, "node-9")).is_err());

        let reflector = fx.model(Role::Reflector);
        assert!(reflector.complete(&req(Role::Reflector, "step-1")).is_err());
        assert_eq!(fx.requests().len(), 10);
        assert_eq!(fx.requests_for(Role::Critic).len(), 6);
    }

    #[test]
    fn rejects_unknown_roles() {
        assert!(ScriptedFixture::from_json(&json!({"painter": []})).is_err());
        assert!(ScriptedFixture::from_json(&json!({"critic": 3})).is_err());
    }
}
