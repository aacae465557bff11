//! HTTP clients for hosted models: OpenAI-style chat completions (with the
//! image attached inline as a base64 data URL) and embeddings.
//!
//! Endpoints, model tags and keys come from the environment only.

use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use crate::backend::{BackendError, EmbedBackend, EmbedError, ModelRequest, TextModel};

pub const ENV_LLM_ENDPOINT: &str = "LUMI_LLM_ENDPOINT";
pub const ENV_LLM_KEY: &str = "LUMI_LLM_KEY";
pub const ENV_LLM_MODEL: &str = "LUMI_LLM_MODEL";
pub const ENV_VLM_ENDPOINT: &str = "LUMI_VLM_ENDPOINT";
pub const ENV_VLM_KEY: &str = "LUMI_VLM_KEY";
pub const ENV_VLM_MODEL: &str = "LUMI_VLM_MODEL";
pub const ENV_EMBED_ENDPOINT: &str = "LUMI_EMBED_ENDPOINT";
pub const ENV_EMBED_MODEL: &str = "LUMI_EMBED_MODEL";

/// Where and how to reach one hosted model.
#[derive(Clone)]
pub struct Endpoint {
    /// Full URL of the chat-completions or embeddings route.
    pub url: String,
    pub key: Option<String>,
    pub model: String,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("url", &self.url)
            .field("key", &self.key.as_ref().map(|_| "<redacted>"))
            .field("model", &self.model)
            .finish()
    }
}

fn env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

impl Endpoint {
    fn from_env(url_var: &str, key_var: &str, model_var: &str, default_model: &str) -> Result<Self, BackendError> {
        let url = env(url_var).ok_or_else(|| BackendError::NotConfigured(format!("{url_var} is not set")))?;
        let key = env(key_var);
        if key.is_none() {
            return Err(BackendError::NotConfigured(format!("{key_var} is not set")));
        }
        Ok(Self { url, key, model: env(model_var).unwrap_or_else(|| default_model.to_string()) })
    }

    /// The text model used by the expander and the reflector.
    pub fn llm_from_env() -> Result<Self, BackendError> {
        Self::from_env(ENV_LLM_ENDPOINT, ENV_LLM_KEY, ENV_LLM_MODEL, "gpt-4o")
    }

    /// The vision model used by the scene analyst and the critic.
    pub fn vlm_from_env() -> Result<Self, BackendError> {
        Self::from_env(ENV_VLM_ENDPOINT, ENV_VLM_KEY, ENV_VLM_MODEL, "gpt-4o")
    }

    /// Embeddings share the text model's key.
    pub fn embed_from_env() -> Result<Self, BackendError> {
        Self::from_env(ENV_EMBED_ENDPOINT, ENV_LLM_KEY, ENV_EMBED_MODEL, "text-embedding-3-small")
    }
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into()
}

fn post_json(agent: &ureq::Agent, endpoint: &Endpoint, body: &Value) -> Result<Value, BackendError> {
    let mut req = agent.post(&endpoint.url).header("Content-Type", "application/json");
    if let Some(key) = &endpoint.key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req.send_json(body).map_err(|e| BackendError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Transport(e.to_string()))?;
    if !(200..300).contains(&status) {
        let body = text.chars().take(500).collect();
        return Err(BackendError::Http { status, body });
    }
    serde_json::from_str(&text).map_err(|e| BackendError::Response(format!("body is not JSON: {e}")))
}

/// Chat-completions client.
pub struct ChatModel {
    endpoint: Endpoint,
    agent: ureq::Agent,
    temperature: f64,
}

impl ChatModel {
    pub fn new(endpoint: Endpoint) -> Self {
        Self { endpoint, agent: agent(Duration::from_secs(120)), temperature: 0.4 }
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn request_body(&self, request: &ModelRequest) -> Value {
        let user = match &request.image {
            None => json!(request.prompt),
            Some(img) => {
                let data = base64::engine::general_purpose::STANDARD.encode(&img.png);
                json!([
                    {"type": "text", "text": request.prompt},
                    {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{data}")}},
                ])
            }
        };
        json!({
            "model": self.endpoint.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": user},
            ],
        })
    }
}

impl TextModel for ChatModel {
    fn name(&self) -> String {
        format!("http/{}", self.endpoint.model)
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError> {
        let reply = post_json(&self.agent, &self.endpoint, &self.request_body(request))?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Response("missing choices[0].message.content".into()))
    }
}

/// Embeddings client. The vector dimension is learned from the first reply
/// unless given.
pub struct HttpEmbedder {
    endpoint: Endpoint,
    agent: ureq::Agent,
    dim: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: Endpoint, dim: usize) -> Self {
        Self { endpoint, agent: agent(Duration::from_secs(60)), dim }
    }
}

impl EmbedBackend for HttpEmbedder {
    fn id(&self) -> String {
        format!("http/{}/{}", self.endpoint.model, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let body = json!({"model": self.endpoint.model, "input": text});
        let reply = post_json(&self.agent, &self.endpoint, &body)?;
        let v: Vec<f64> = reply
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Response("missing data[0].embedding".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| BackendError::Response("non-numeric embedding".into())))
            .collect::<Result<_, _>>()?;
        if v.len() != self.dim {
            return Err(EmbedError::Dimension { expected: self.dim, found: v.len() });
        }
        Ok(v)
    }
}

/// `(vision, text)` chat models.
pub type ChatModels = (Arc<dyn TextModel>, Arc<dyn TextModel>);

/// Text model for every role, built from the environment: the vision model
/// serves the analyst and critic, the text model the expander and reflector.
pub fn chat_models_from_env() -> Result<ChatModels, BackendError> {
    let vlm: Arc<dyn TextModel> = Arc::new(ChatModel::new(Endpoint::vlm_from_env()?));
    let llm: Arc<dyn TextModel> = Arc::new(ChatModel::new(Endpoint::llm_from_env()?));
    Ok((vlm, llm))
}
