use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{dedup, Assistant, ContradictionHint, HintError, HintSource, PremiseHint};
use crate::dataset::Task;
use crate::formula::Formula;
use crate::kb::KnowledgeBase;
use crate::text::{render, SentenceReader};

/// Environment variable holding the assistant endpoint URL.
pub const ENDPOINT_ENV: &str = "SYLLOGIC_ASSISTANT_URL";
pub const REQUEST_SCHEMA: &str = "syllogic-assist/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteConfig {
    /// Plain `http://` URL.
    pub endpoint: String,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn from_env() -> Option<RemoteConfig> {
        std::env::var(ENDPOINT_ENV).ok().map(|endpoint| RemoteConfig {
            endpoint,
            timeout: Duration::from_secs(30),
        })
    }
}

#[derive(Serialize)]
struct Request<'a> {
    schema: &'a str,
    task: Task,
    kb_text: String,
    hypothesis_text: String,
}

#[derive(Deserialize)]
struct Response {
    sentences: Vec<String>,
}

/// Posts `{schema, task, kb_text, hypothesis_text}` as JSON and expects
/// `{sentences}` back. Sentences use the KB's own term names.
pub struct RemoteAssistant {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteAssistant {
    pub fn new(config: RemoteConfig) -> RemoteAssistant {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        RemoteAssistant { config, agent }
    }

    fn ask(&self, kb: &KnowledgeBase, task: Task, h: Formula) -> Result<Vec<Formula>, HintError> {
        let malformed = |e: &dyn std::fmt::Display| HintError::Malformed(e.to_string());
        let kb_text = kb
            .formulas()
            .iter()
            .map(|f| render(*f, kb.vocab()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| malformed(&e))?
            .join(". ");
        let body = serde_json::to_string(&Request {
            schema: REQUEST_SCHEMA,
            task,
            kb_text,
            hypothesis_text: render(h, kb.vocab()).map_err(|e| malformed(&e))?,
        })
        .map_err(|e| malformed(&e))?;
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| HintError::Transport(e.to_string()))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| HintError::Transport(e.to_string()))?;
        let parsed: Response = serde_json::from_str(&text).map_err(|e| malformed(&e))?;
        let mut reader = SentenceReader::new(kb.vocab());
        parsed
            .sentences
            .iter()
            .map(|s| reader.parse(s).map(|p| p.formula))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| malformed(&e))
    }
}

impl Assistant for RemoteAssistant {
    fn suggest_premises(&self, kb: &KnowledgeBase, h: Formula) -> Result<PremiseHint, HintError> {
        Ok(PremiseHint {
            premises: dedup(self.ask(kb, Task::PremiseSelection, h)?),
            source: HintSource::Remote,
        })
    }

    fn suggest_contradiction(&self, kb: &KnowledgeBase, h: Formula) -> Result<ContradictionHint, HintError> {
        match self.ask(kb, Task::ProofByContradiction, h)?.as_slice() {
            [f] => Ok(ContradictionHint {
                formula: *f,
                source: HintSource::Remote,
            }),
            [] => Err(HintError::NoHint("empty answer".into())),
            other => Err(HintError::Malformed(format!("expected one sentence, got {}", other.len()))),
        }
    }
}
