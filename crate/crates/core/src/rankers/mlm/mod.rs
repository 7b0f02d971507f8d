//! Masked language model backends and the masked-LM ranker.
//!
//! A backend works on wordpiece tokens. Sequences sent to it carry no
//! special tokens; the backend adds its own sequence boundary markers and
//! returns results only for the tokens it was sent.

mod client;
mod mock;
mod rank;

pub use client::JsonlClient;
pub use mock::MockBackend;
pub use rank::{rank_by_mlm, rank_pairs_by_mlm, rank_side_by_mlm, MlmContext, MlmError, MlmOptions};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Facts a backend announces when a session starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    /// Number of hidden-state layers returned, embeddings included.
    pub layers: usize,
    pub dim: usize,
    pub mask: String,
    pub cont_marker: String,
}

/// What a masked-position distribution should contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaskQuery {
    /// The `k` most probable pieces.
    TopK(usize),
    /// Exactly these pieces, whatever their rank.
    Pieces(Vec<String>),
}

/// Piece probabilities at one masked position.
pub type PieceProbs = HashMap<String, f64>;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend handshake failed: {0}")]
    Handshake(String),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("backend reported: {0}")]
    Remote(String),
    #[error("bad backend address {0:?} (expected mock:PATH, cmd:COMMAND or unix:PATH)")]
    Address(String),
    #[error("mock backend fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait MlmBackend: Send + Sync {
    fn info(&self) -> &BackendInfo;

    /// Wordpieces for each word. Only the first piece of a word lacks the
    /// continuation marker.
    fn tokenize(&self, words: &[String]) -> Result<Vec<Vec<String>>, BackendError>;

    /// One distribution per mask token in `tokens`, in order.
    fn mask_probs(&self, tokens: &[String], query: &MaskQuery) -> Result<Vec<PieceProbs>, BackendError>;

    /// Hidden states as `[layer][token][component]`, one row per token sent.
    fn encode_layers(&self, tokens: &[String]) -> Result<Vec<Vec<Vec<f32>>>, BackendError>;
}

impl<B: MlmBackend + ?Sized> MlmBackend for Box<B> {
    fn info(&self) -> &BackendInfo {
        (**self).info()
    }

    fn tokenize(&self, words: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        (**self).tokenize(words)
    }

    fn mask_probs(&self, tokens: &[String], query: &MaskQuery) -> Result<Vec<PieceProbs>, BackendError> {
        (**self).mask_probs(tokens, query)
    }

    fn encode_layers(&self, tokens: &[String]) -> Result<Vec<Vec<Vec<f32>>>, BackendError> {
        (**self).encode_layers(tokens)
    }
}

/// Wordpieces of a whitespace-separated text.
pub fn tokenize_text<B: MlmBackend + ?Sized>(backend: &B, text: &str) -> Result<Vec<String>, BackendError> {
    let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if words.is_empty() {
        return Ok(Vec::new());
    }
    Ok(backend.tokenize(&words)?.into_iter().flatten().collect())
}

/// Opens a backend from `mock:PATH`, `cmd:COMMAND [ARGS...]` or `unix:PATH`.
pub fn connect(address: &str) -> Result<Box<dyn MlmBackend>, BackendError> {
    let (scheme, rest) = address
        .split_once(':')
        .ok_or_else(|| BackendError::Address(address.to_string()))?;
    match scheme {
        "mock" => Ok(Box::new(MockBackend::from_path(rest)?)),
        "cmd" => {
            let mut parts = rest.split_whitespace();
            let program = parts.next().ok_or_else(|| BackendError::Address(address.to_string()))?;
            let args: Vec<&str> = parts.collect();
            Ok(Box::new(JsonlClient::spawn(program, &args)?))
        }
        #[cfg(unix)]
        "unix" => Ok(Box::new(JsonlClient::connect_unix(rest)?)),
        _ => Err(BackendError::Address(address.to_string())),
    }
}
