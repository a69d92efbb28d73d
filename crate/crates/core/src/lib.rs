//! Local prompt anonymization for cloud LLM calls.
//!
//! Privacy entities are detected in a prompt ([`recognizer`]), replaced by
//! placeholders or same-type surrogates before the prompt leaves the machine
//! ([`hide`]), and restored in the model's answer ([`seek`]). The
//! [`adversary`] and [`textsim`] modules measure how much an interceptor can
//! recover and how much task utility the round trip costs.
//!
//! ```
//! use hideseek::{HideEngine, HideStrategy, seek, SeekConfig};
//!
//! let engine = HideEngine::builtin(HideStrategy::generative(), 7)?;
//! let doc = engine.anonymize("The FBI raided an office in Washington DC on August 10, 2023.")?;
//! assert!(!doc.anonymized.contains("FBI"));
//!
//! // An LLM that answers with the prompt unchanged.
//! let restored = seek::seek(&doc, &doc.anonymized, &SeekConfig::default());
//! assert_eq!(restored.text, doc.original);
//! # Ok::<(), hideseek::Error>(())
//! ```

pub mod adversary;
pub mod backend;
pub mod dataset;
mod error;
pub mod eval;
pub mod hide;
pub mod recognizer;
pub mod seek;
pub mod synth;
pub(crate) mod text;
pub mod textsim;
pub mod types;

pub use error::{Error, Result};
pub use hide::{HideEngine, SurrogatePolicy};
pub use recognizer::{Recognizer, RecognizerConfig};
pub use seek::SeekConfig;
pub use types::{
    AnonymizedDocument, EntityMapping, EntitySpan, EntityType, HideStrategy, MappingEntry, PipelineRecord,
    PlaceholderMode, SeekResult, SpanSource, TaskType,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/entities.md")]
    mod entities {}
    #[doc = include_str!("../../../book/src/hiding.md")]
    mod hiding {}
    #[doc = include_str!("../../../book/src/seeking.md")]
    mod seeking {}
    #[doc = include_str!("../../../book/src/similarity.md")]
    mod similarity {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/adversary.md")]
    mod adversary {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
}
