//! LLM access: prompt templates, offline mocks and a chat-completions client.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

mod mock;
pub mod prompt;
mod remote;

pub use mock::{DictTranslator, KeywordClassifier, Substituter};
pub use prompt::{build_prompt_l, build_prompt_r, build_prompt_s, parse_prompt, Payload};
pub use remote::{RemoteClient, RetryConfig};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("upstream returned HTTP {status}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    Request(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub temperature: f64,
    pub max_tokens: Option<u32>,
}

impl Default for LlmParams {
    fn default() -> Self {
        LlmParams {
            temperature: 0.0,
            max_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub messages: Vec<Message>,
    #[serde(default)]
    pub params: LlmParams,
    #[serde(default)]
    pub model: String,
}

impl LlmRequest {
    /// A single user message with default parameters.
    pub fn prompt(content: impl Into<String>) -> Self {
        LlmRequest {
            messages: vec![Message::user(content)],
            params: LlmParams::default(),
            model: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(BackendError::Request("no user message".into()));
        }
        if self.params.temperature.is_nan() || self.params.temperature < 0.0 {
            return Err(BackendError::Request("temperature must be non-negative".into()));
        }
        Ok(())
    }

    fn last_user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

/// Backend configuration as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    RemoteChat {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the API key.
        key_env: String,
        #[serde(default)]
        retry: RetryConfig,
        #[serde(default = "default_parallelism")]
        parallelism: usize,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
    MockEcho,
    MockDictTranslate {
        /// Bundled lexicon when absent.
        #[serde(default)]
        lexicon: Option<PathBuf>,
        #[serde(default = "default_target")]
        target: String,
    },
    MockClassify {
        keywords: BTreeMap<String, Vec<String>>,
    },
    /// Always answers with `response`.
    MockFixed {
        response: String,
    },
    /// Answers substitution prompts with the local generative hider.
    MockSubstitute {
        #[serde(default)]
        seed: u64,
    },
}

fn default_parallelism() -> usize {
    4
}

fn default_timeout() -> u64 {
    60
}

fn default_target() -> String {
    "French".into()
}

/// A ready-to-use backend handle. Cheap to clone and safe to share.
#[derive(Debug, Clone)]
pub enum Backend {
    Echo,
    Dict(Arc<DictTranslator>),
    Classify(Arc<KeywordClassifier>),
    Fixed(String),
    Substitute(Arc<Substituter>),
    Remote(RemoteClient),
}

impl Backend {
    /// Builds a handle; a remote backend reads its key here, so a missing
    /// variable fails before any request.
    pub fn from_kind(kind: &BackendKind) -> Result<Self, BackendError> {
        Ok(match kind {
            BackendKind::MockEcho => Backend::Echo,
            BackendKind::MockDictTranslate { lexicon, target } => Backend::Dict(Arc::new(match lexicon {
                Some(path) => DictTranslator::load(path, target.clone())?,
                None => {
                    let mut t = DictTranslator::builtin();
                    t.target = target.clone();
                    t
                }
            })),
            BackendKind::MockClassify { keywords } => {
                Backend::Classify(Arc::new(KeywordClassifier::new(keywords.clone())?))
            }
            BackendKind::MockFixed { response } => Backend::Fixed(response.clone()),
            BackendKind::MockSubstitute { seed } => Backend::Substitute(Arc::new(Substituter::new(*seed))),
            BackendKind::RemoteChat {
                endpoint,
                model,
                key_env,
                retry,
                parallelism,
                timeout_secs,
            } => Backend::Remote(RemoteClient::new(
                endpoint,
                model,
                key_env,
                *retry,
                *parallelism,
                std::time::Duration::from_secs(*timeout_secs),
            )?),
        })
    }

    pub fn is_mock(&self) -> bool {
        !matches!(self, Backend::Remote(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Echo => "mock_echo",
            Backend::Dict(_) => "mock_dict_translate",
            Backend::Classify(_) => "mock_classify",
            Backend::Fixed(_) => "mock_fixed",
            Backend::Substitute(_) => "mock_substitute",
            Backend::Remote(_) => "remote_chat",
        }
    }

    /// Completes `req`, returning the response text.
    pub async fn complete(&self, req: &LlmRequest) -> Result<String, BackendError> {
        req.validate()?;
        let prompt = req.last_user();
        match self {
            Backend::Echo => Ok(mock::text_slot(prompt).to_string()),
            Backend::Dict(t) => Ok(t.translate(mock::text_slot(prompt))),
            Backend::Classify(c) => Ok(c.classify(mock::text_slot(prompt))),
            Backend::Fixed(s) => Ok(s.clone()),
            Backend::Substitute(s) => s.substitute(prompt),
            Backend::Remote(r) => r.complete(req).await,
        }
    }

    /// Shorthand for a single user prompt.
    pub async fn complete_prompt(&self, prompt: &str) -> Result<String, BackendError> {
        self.complete(&LlmRequest::prompt(prompt)).await
    }
}
