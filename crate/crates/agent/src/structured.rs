//! Getting a validated JSON reply out of a model, with re-prompts.

use serde_json::Value;

use crate::backend::{BackendError, ModelRequest, TextModel};

/// Re-prompts after the first invalid reply.
pub const DEFAULT_MAX_RETRIES: u32 = 2;

/// Pulls the JSON value out of a reply that may wrap it in prose or a
/// Markdown code fence.
pub fn extract_json(reply: &str) -> Result<Value, String> {
    let trimmed = reply.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Ok(v);
    }
    let body = match trimmed.find("```") {
        Some(start) => {
            let rest = &trimmed[start + 3..];
            let rest = rest.strip_prefix("json").unwrap_or(rest);
            match rest.find("```") {
                Some(end) => &rest[..end],
                None => rest,
            }
        }
        None => trimmed,
    };
    let open = body.find(['{', '[']).ok_or("reply contains no JSON object")?;
    let close_char = if body.as_bytes()[open] == b'{' { '}' } else { ']' };
    let close = body.rfind(close_char).filter(|&c| c > open).ok_or("reply contains an unterminated JSON value")?;
    serde_json::from_str(&body[open..=close]).map_err(|e| format!("reply is not valid JSON: {e}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Structured<T> {
    pub value: T,
    /// Number of re-prompts that were needed.
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StructuredError {
    #[error("{attempts} replies failed validation; last complaint: {complaint}")]
    Invalid { attempts: u32, complaint: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Sends `request`, validating each reply with `validate`. An invalid reply
/// is answered with a re-prompt carrying the validator's complaint, up to
/// `max_retries` times. Backend errors end the exchange immediately.
pub fn ask<T>(
    model: &dyn TextModel,
    request: ModelRequest,
    max_retries: u32,
    mut validate: impl FnMut(&Value) -> Result<T, String>,
) -> Result<Structured<T>, StructuredError> {
    let base_prompt = request.prompt.clone();
    let mut request = request;
    let mut complaint = String::new();
    for attempt in 0..=max_retries {
        request.attempt = attempt;
        if attempt > 0 {
            request.prompt =
                format!("{base_prompt}\n\nYour previous reply was rejected: {complaint}\nReply again with only the corrected JSON.");
        }
        let reply = model.complete(&request)?;
        match extract_json(&reply).and_then(|v| validate(&v)) {
            Ok(value) => return Ok(Structured { value, retries: attempt }),
            Err(c) => {
                tracing::debug!(role = %request.role, key = %request.key, attempt, complaint = %c, "invalid model reply");
                complaint = c;
            }
        }
    }
    Err(StructuredError::Invalid { attempts: max_retries + 1, complaint })
}

/// Reads a number field, accepting numeric strings.
pub fn number(v: &Value, what: &str) -> Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| format!("{what} is not a finite number")),
        Value::String(s) => s.trim().parse().map_err(|_| format!("{what} must be a number, got {s:?}")),
        _ => Err(format!("{what} must be a number")),
    }
    .and_then(|x: f64| if x.is_finite() { Ok(x) } else { Err(format!("{what} is not finite")) })
}

pub fn string(v: &Value, what: &str) -> Result<String, String> {
    v.as_str().map(|s| s.trim().to_string()).ok_or_else(|| format!("{what} must be a string"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{FnModel, Role};
    use std::sync::atomic::{AtomicU32, Ordering};

    #[test]
    fn extracts_from_fences_and_prose() {
        assert_eq!(extract_json("{\"a\":1}").unwrap()["a"], 1);
        assert_eq!(extract_json("Sure!\n```json\n{\"a\": 2}\n```\nDone.").unwrap()["a"], 2);
        assert_eq!(extract_json("Here you go: {\"a\": {\"b\": 3}} hope it helps").unwrap()["a"]["b"], 3);
        assert_eq!(extract_json("[1, 2]").unwrap()[1], 2);
        assert!(extract_json("no json here").is_err());
        assert!(extract_json("{ broken").is_err());
    }

    #[test]
    fn retries_with_complaint_then_gives_up() {
        let calls = AtomicU32::new(0);
        let model = FnModel::new("t", |r: &ModelRequest| {
            let n = calls.fetch_add(1, Ordering::SeqCst);
            if n > 0 {
                assert!(r.prompt.contains("previous reply was rejected: need x"));
            }
            Ok(if n == 1 { "{\"x\": 5}".into() } else { "{}".into() })
        });
        let req = ModelRequest { role: Role::Critic, key: "k".into(), attempt: 0, system: String::new(), prompt: "go".into(), image: None };
        let check = |v: &Value| v.get("x").map(|x| number(x, "x")).unwrap_or(Err("need x".into()));
        let ok = ask(&model, req.clone(), 2, check).unwrap();
        assert_eq!((ok.value, ok.retries), (5.0, 1));

        let never = FnModel::new("t", |_: &ModelRequest| Ok("{}".to_string()));
        let err = ask(&never, req, 2, check).unwrap_err();
        assert_eq!(err, StructuredError::Invalid { attempts: 3, complaint: "need x".into() });
    }
}
