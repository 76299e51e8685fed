//! Assistants that suggest premises or a contradiction formula for a
//! hypothesis. Suggestions are never trusted: the hybrid prover checks them.

mod file;
mod noisy;
mod oracle;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::inference::GoldError;
use crate::kb::KnowledgeBase;

pub use file::{dump_hints, FileAssistant, HintFileError, HintLine, HINT_SCHEMA};
pub use noisy::{ErrorTraits, NoiseProfile, NoisyAssistant};
pub use oracle::OracleAssistant;
pub use remote::{RemoteAssistant, RemoteConfig, ENDPOINT_ENV};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HintSource {
    Oracle,
    Noisy,
    File,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PremiseHint {
    /// Duplicate-free; may name formulas or terms outside the KB.
    pub premises: Vec<Formula>,
    pub source: HintSource,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContradictionHint {
    pub formula: Formula,
    pub source: HintSource,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum HintError {
    #[error("no hint: {0}")]
    NoHint(String),
    #[error("hypothesis needs no contradiction")]
    NotApplicable,
    #[error(transparent)]
    Gold(#[from] GoldError),
    #[error("assistant transport failed: {0}")]
    Transport(String),
    #[error("malformed assistant output: {0}")]
    Malformed(String),
}

pub trait Assistant: Send + Sync {
    fn suggest_premises(&self, kb: &KnowledgeBase, h: Formula) -> Result<PremiseHint, HintError>;

    fn suggest_contradiction(&self, kb: &KnowledgeBase, h: Formula) -> Result<ContradictionHint, HintError>;
}

/// Never suggests anything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoAssistant;

impl Assistant for NoAssistant {
    fn suggest_premises(&self, _: &KnowledgeBase, _: Formula) -> Result<PremiseHint, HintError> {
        Err(HintError::NoHint("no assistant".into()))
    }

    fn suggest_contradiction(&self, _: &KnowledgeBase, _: Formula) -> Result<ContradictionHint, HintError> {
        Err(HintError::NoHint("no assistant".into()))
    }
}

fn dedup(premises: Vec<Formula>) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::with_capacity(premises.len());
    for f in premises {
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}
