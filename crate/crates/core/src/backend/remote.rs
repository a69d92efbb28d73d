//! Chat-completions HTTP client.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use super::{BackendError, LlmRequest};

/// Opt-in retry with exponential backoff; off by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryConfig {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        RetryConfig {
            max_retries: 0,
            base_delay_ms: 200,
        }
    }
}

#[derive(Clone)]
pub struct RemoteClient {
    http: reqwest::Client,
    url: String,
    model: String,
    key: Arc<str>,
    retry: RetryConfig,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("url", &self.url)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl RemoteClient {
    pub fn new(
        endpoint: &str,
        model: &str,
        key_env: &str,
        retry: RetryConfig,
        parallelism: usize,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        if endpoint.trim().is_empty() {
            return Err(BackendError::Config("remote endpoint is empty".into()));
        }
        if key_env.trim().is_empty() {
            return Err(BackendError::Config("key_env is empty".into()));
        }
        let key = std::env::var(key_env)
            .map_err(|_| BackendError::Config(format!("environment variable {key_env} is not set")))?;
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteClient {
            http,
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            model: model.to_string(),
            key: key.into(),
            retry,
            permits: Arc::new(Semaphore::new(parallelism.max(1))),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub async fn complete(&self, req: &LlmRequest) -> Result<String, BackendError> {
        let model = if req.model.is_empty() { &self.model } else { &req.model };
        let mut body = json!({
            "model": model,
            "messages": req.messages,
            "temperature": req.params.temperature,
        });
        if let Some(n) = req.params.max_tokens {
            body["max_tokens"] = json!(n);
        }
        let bytes = serde_json::to_vec(&body).map_err(|e| BackendError::Request(e.to_string()))?;
        let (status, payload) = self.post_raw(bytes).await?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status {
                status,
                body: String::from_utf8_lossy(&payload).chars().take(512).collect(),
            });
        }
        let v: Value = serde_json::from_slice(&payload).map_err(|e| BackendError::Malformed(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(String::from)
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
    }

    /// Posts `body` unchanged and returns the upstream status and body.
    /// Transport failures are retried when configured; HTTP statuses are
    /// returned to the caller except 429 and 5xx, which count as retryable.
    pub async fn post_raw(&self, body: Vec<u8>) -> Result<(u16, Vec<u8>), BackendError> {
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let mut attempt = 0;
        loop {
            let result = self
                .http
                .post(&self.url)
                .bearer_auth(&*self.key)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone())
                .send()
                .await;
            let retryable = match &result {
                Ok(resp) => resp.status().as_u16() == 429 || resp.status().is_server_error(),
                Err(_) => true,
            };
            if retryable && attempt < self.retry.max_retries {
                let delay = self.retry.base_delay_ms.saturating_mul(1 << attempt.min(16));
                tokio::time::sleep(Duration::from_millis(delay)).await;
                attempt += 1;
                continue;
            }
            let resp = result.map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
            let status = resp.status().as_u16();
            let bytes = resp
                .bytes()
                .await
                .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
            return Ok((status, bytes.to_vec()));
        }
    }

    /// True when the upstream answers any HTTP request.
    pub async fn reachable(&self) -> bool {
        self.http
            .get(&self.url)
            .timeout(Duration::from_secs(2))
            .send()
            .await
            .is_ok()
    }
}
