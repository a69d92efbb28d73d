//! A chat-completions proxy that hides privacy entities in outgoing messages
//! and restores them in the reply.
//!
//! Every text slot of a request is hidden as one document, so an entity
//! mentioned in several messages gets one surrogate. The mapping lives only
//! for the duration of the request.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderName, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use hideseek::backend::{Backend, BackendError, LlmParams, LlmRequest, Message, Role};
use hideseek::hide::leaked_in;
use hideseek::recognizer::locate_manual;
use hideseek::seek::seek;
use hideseek::{AnonymizedDocument, EntityType, Error, HideEngine, Recognizer, Result, SurrogatePolicy};
use serde::Deserialize;
use serde_json::{json, Value};

mod config;

pub use config::{GatewayConfig, DEFAULT_ENTITY_HEADER};

/// Joins text slots into one document; never produced by hiding.
const SEPARATOR: char = '\u{1e}';

pub struct Gateway {
    cfg: GatewayConfig,
    engine: HideEngine,
    backend: Backend,
    entity_header: HeaderName,
}

/// One entry of the entity header.
#[derive(Debug, Deserialize)]
struct ManualEntity {
    surface: String,
    #[serde(rename = "type")]
    etype: EntityType,
}

#[derive(Debug)]
enum Failure {
    BadRequest(String),
    Upstream(String),
    Internal(String),
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let (status, kind, message) = match self {
            Failure::BadRequest(m) => (StatusCode::BAD_REQUEST, "invalid_request_error", m),
            Failure::Upstream(m) => (StatusCode::BAD_GATEWAY, "upstream_error", m),
            Failure::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "gateway_error", m),
        };
        (status, axum::Json(json!({"error": {"message": message, "type": kind}}))).into_response()
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Request(m) | BackendError::Prompt(m) => Failure::BadRequest(m),
            // Upstream bodies may quote the prompt; only the status goes back.
            BackendError::Status { status, .. } => Failure::Upstream(format!("upstream returned HTTP {status}")),
            BackendError::Transport(_) => Failure::Upstream("upstream unreachable".into()),
            BackendError::Malformed(m) => Failure::Upstream(format!("malformed upstream response: {m}")),
            BackendError::Config(m) => Failure::Internal(m),
        }
    }
}

impl Gateway {
    pub fn new(cfg: GatewayConfig) -> Result<Self> {
        cfg.validate()?;
        let recognizer = Arc::new(Recognizer::new(&cfg.recognizer)?);
        let mut policy = SurrogatePolicy::with_seed(cfg.seed);
        if let Some(j) = cfg.numeric_jitter {
            policy.numeric_jitter = j;
        }
        if let Some(d) = cfg.date_shift_days {
            policy.date_shift_days = d;
        }
        let engine = HideEngine::new(recognizer, cfg.strategy, policy)?;
        let backend = Backend::from_kind(&cfg.upstream).map_err(|e| Error::Config(e.to_string()))?;
        let entity_header = cfg
            .entity_header
            .parse()
            .map_err(|_| Error::Config(format!("bad header name {:?}", cfg.entity_header)))?;
        Ok(Gateway {
            cfg,
            engine,
            backend,
            entity_header,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    /// Hides, forwards and restores one request body.
    async fn chat(&self, headers: &HeaderMap, body: Bytes) -> std::result::Result<Response, Failure> {
        if !self.cfg.hiding {
            if let Backend::Remote(client) = &self.backend {
                let (status, bytes) = client.post_raw(body.to_vec()).await?;
                let status = StatusCode::from_u16(status).unwrap_or(StatusCode::BAD_GATEWAY);
                return Ok((status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response());
            }
        }
        let mut request: Value =
            serde_json::from_slice(&body).map_err(|e| Failure::BadRequest(format!("body is not JSON: {e}")))?;
        if !request.get("messages").is_some_and(Value::is_array) {
            return Err(Failure::BadRequest("body has no messages array".into()));
        }
        let manual = self.manual_entities(headers)?;

        let doc = if self.cfg.hiding {
            Some(self.hide_request(&mut request, &manual)?)
        } else {
            None
        };
        let outbound = serde_json::to_vec(&request).map_err(|e| Failure::Internal(e.to_string()))?;
        if let Some(doc) = &doc {
            let payload = String::from_utf8_lossy(&outbound);
            let leaked = leaked_in(&payload, doc.spans.iter().map(|s| s.surface.as_str()));
            if !leaked.is_empty() {
                log::error!(
                    "refusing to forward: {} entity surface(s) survived hiding",
                    leaked.len()
                );
                return Err(Failure::Internal("hiding failed; request not forwarded".into()));
            }
        }

        let mut reply = match &self.backend {
            Backend::Remote(client) => {
                let (status, bytes) = client.post_raw(outbound).await?;
                if !(200..300).contains(&status) {
                    return Err(Failure::Upstream(format!("upstream returned HTTP {status}")));
                }
                serde_json::from_slice::<Value>(&bytes)
                    .map_err(|e| Failure::Upstream(format!("malformed upstream response: {e}")))?
            }
            mock => {
                let content = mock.complete(&mock_request(&request)?).await?;
                completion(&request, content)
            }
        };
        if let Some(doc) = &doc {
            self.restore_reply(&mut reply, doc);
        }
        Ok(axum::Json(reply).into_response())
    }

    fn manual_entities(&self, headers: &HeaderMap) -> std::result::Result<Vec<(String, EntityType)>, Failure> {
        let Some(raw) = headers.get(&self.entity_header) else {
            return Ok(Vec::new());
        };
        let bad = |m: String| Failure::BadRequest(format!("{} header: {m}", self.entity_header));
        let raw = raw.to_str().map_err(|e| bad(e.to_string()))?;
        let list: Vec<ManualEntity> = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
        Ok(list.into_iter().map(|m| (m.surface, m.etype)).collect())
    }

    fn hide_request(
        &self,
        request: &mut Value,
        manual: &[(String, EntityType)],
    ) -> std::result::Result<AnonymizedDocument, Failure> {
        let mut slots = text_slots(request, self.cfg.hide_system);
        let mut joined = String::new();
        for (i, slot) in slots.iter().enumerate() {
            if slot.contains(SEPARATOR) {
                return Err(Failure::BadRequest("message text contains U+001E".into()));
            }
            if i > 0 {
                joined.push(SEPARATOR);
            }
            joined.push_str(slot);
        }
        let spans = locate_manual(&joined, manual);
        let doc = self
            .engine
            .anonymize_with(&joined, &spans, None)
            .map_err(|e| Failure::Internal(format!("hiding failed: {e}")))?;
        let hidden: Vec<&str> = doc.anonymized.split(SEPARATOR).collect();
        if hidden.len() != slots.len() {
            return Err(Failure::Internal("hiding changed the message layout".into()));
        }
        for (slot, text) in slots.iter_mut().zip(hidden) {
            **slot = text.to_string();
        }
        Ok(doc)
    }

    fn restore_reply(&self, reply: &mut Value, doc: &AnonymizedDocument) {
        let Some(choices) = reply.get_mut("choices").and_then(Value::as_array_mut) else {
            return;
        };
        for choice in choices {
            if let Some(Value::String(content)) = choice.pointer_mut("/message/content") {
                let restored = seek(doc, content, &self.cfg.seek);
                if !restored.unresolved.is_empty() {
                    log::debug!("{} mapping entries not found in reply", restored.unresolved.len());
                }
                *content = restored.text;
            }
        }
    }

    async fn health(&self) -> Value {
        let reachable = match &self.backend {
            Backend::Remote(client) => client.reachable().await,
            _ => true,
        };
        json!({
            "status": "ok",
            "version": env!("CARGO_PKG_VERSION"),
            "strategy": if self.cfg.hiding { self.engine.strategy.name() } else { "disabled" },
            "upstream": self.backend.name(),
            "upstream_reachable": reachable,
        })
    }
}

/// String contents of every hidden message, including text parts of
/// multi-part contents.
fn text_slots(request: &mut Value, hide_system: bool) -> Vec<&mut String> {
    let mut out = Vec::new();
    let Some(messages) = request.get_mut("messages").and_then(Value::as_array_mut) else {
        return out;
    };
    for m in messages {
        if !hide_system && m.get("role").and_then(Value::as_str) == Some("system") {
            continue;
        }
        match m.get_mut("content") {
            Some(Value::String(s)) => out.push(s),
            Some(Value::Array(parts)) => {
                for p in parts {
                    if p.get("type").and_then(Value::as_str) == Some("text") {
                        if let Some(Value::String(s)) = p.get_mut("text") {
                            out.push(s);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    out
}

fn mock_request(request: &Value) -> std::result::Result<LlmRequest, Failure> {
    let mut messages = Vec::new();
    for m in request["messages"].as_array().into_iter().flatten() {
        let role = match m.get("role").and_then(Value::as_str) {
            Some("system") => Role::System,
            Some("user") => Role::User,
            Some("assistant") => Role::Assistant,
            _ => continue,
        };
        let content = match m.get("content") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Array(parts)) => parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join("\n"),
            _ => String::new(),
        };
        messages.push(Message { role, content });
    }
    let mut params = LlmParams::default();
    if let Some(t) = request.get("temperature").and_then(Value::as_f64) {
        params.temperature = t;
    }
    Ok(LlmRequest {
        messages,
        params,
        model: request
            .get("model")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
    })
}

fn completion(request: &Value, content: String) -> Value {
    json!({
        "id": "chatcmpl-hideseek",
        "object": "chat.completion",
        "model": request.get("model").cloned().unwrap_or(Value::Null),
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": content},
            "finish_reason": "stop",
        }],
    })
}

async fn chat_handler(State(gw): State<Arc<Gateway>>, headers: HeaderMap, body: Bytes) -> Response {
    match gw.chat(&headers, body).await {
        Ok(r) => r,
        Err(f) => {
            log::warn!("request failed: {f:?}");
            f.into_response()
        }
    }
}

async fn health_handler(State(gw): State<Arc<Gateway>>) -> axum::Json<Value> {
    axum::Json(gw.health().await)
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/v1/chat/completions", post(chat_handler))
        .route("/healthz", get(health_handler))
        .with_state(gateway)
}

/// Binds `cfg.listen` and serves until the process ends.
pub async fn serve(cfg: GatewayConfig) -> Result<()> {
    let addr: SocketAddr = cfg
        .listen
        .parse()
        .map_err(|e| Error::Config(format!("listen address {:?}: {e}", cfg.listen)))?;
    let gateway = Arc::new(Gateway::new(cfg)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(gateway)).await?;
    Ok(())
}
