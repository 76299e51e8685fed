//! Knowledge bases and their on-disk form.
//!
//! A KB file is TOML:
//!
//! ```toml
//! schema = "syllogic-kb/1"
//! id = "sample"
//! terms = ["x1", "x2", "x3"]
//! formulas = ["A x1 x2", "A x2 x3"]
//!
//! [meta]
//! seed = "7"
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, FormulaError, Quantifier, TermId, Vocabulary};
use crate::generate::GenParams;

pub const KB_SCHEMA: &str = "syllogic-kb/1";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("formula {index}: {source}")]
    Formula {
        index: usize,
        #[source]
        source: FormulaError,
    },
    #[error("term {0:?} is not in the vocabulary")]
    UnknownTerm(TermId),
    #[error("duplicate term name `{0}`")]
    DuplicateTerm(String),
    #[error("duplicate formula `{0}`")]
    DuplicateFormula(String),
    #[error("unsupported schema `{0}` (expected `{KB_SCHEMA}`)")]
    Schema(String),
    #[error("invalid KB document: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot serialize KB: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbMeta {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_u64_str")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GenParams>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, u64>,
}

/// A set of formulas over a named vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub id: String,
    vocab: Vocabulary,
    formulas: Vec<Formula>,
    pub meta: KbMeta,
}

#[derive(Serialize, Deserialize)]
struct KbDoc {
    schema: String,
    id: String,
    terms: Vec<String>,
    formulas: Vec<String>,
    #[serde(default)]
    meta: KbMeta,
}

impl KnowledgeBase {
    /// Formulas must mention known terms and be pairwise distinct.
    pub fn new(
        id: impl Into<String>,
        vocab: Vocabulary,
        formulas: Vec<Formula>,
    ) -> Result<KnowledgeBase, KbError> {
        let mut seen = FxHashSet::default();
        for f in &formulas {
            for t in f.terms() {
                if !vocab.contains(t) {
                    return Err(KbError::UnknownTerm(t));
                }
            }
            if !seen.insert(*f) {
                return Err(KbError::DuplicateFormula(vocab.format(*f)));
            }
        }
        Ok(KnowledgeBase {
            id: id.into(),
            vocab,
            formulas,
            meta: KbMeta::default(),
        })
    }

    /// Builds a KB from symbolic lines such as `A x1 x2`, interning terms in
    /// order of first appearance.
    pub fn from_symbolic<'a>(
        id: impl Into<String>,
        lines: impl IntoIterator<Item = &'a str>,
    ) -> Result<KnowledgeBase, KbError> {
        let mut vocab = Vocabulary::new();
        let mut formulas = Vec::new();
        for (index, line) in lines.into_iter().enumerate() {
            let f = vocab
                .parse_interning(line)
                .map_err(|source| KbError::Formula { index, source })?;
            formulas.push(f);
        }
        KnowledgeBase::new(id, vocab, formulas)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn num_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> {
        self.vocab.ids()
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn contains(&self, f: Formula) -> bool {
        self.formulas.contains(&f)
    }

    pub fn count(&self, q: Quantifier) -> usize {
        self.formulas.iter().filter(|f| f.quantifier == q).count()
    }

    pub fn format(&self, f: Formula) -> String {
        self.vocab.format(f)
    }

    pub fn parse(&self, text: &str) -> Result<Formula, FormulaError> {
        self.vocab.parse(text)
    }

    /// Same vocabulary and metadata, different formulas.
    pub fn with_formulas(&self, formulas: Vec<Formula>) -> Result<KnowledgeBase, KbError> {
        let mut kb = KnowledgeBase::new(self.id.clone(), self.vocab.clone(), formulas)?;
        kb.meta = self.meta.clone();
        Ok(kb)
    }

    pub fn to_toml(&self) -> Result<String, KbError> {
        let doc = KbDoc {
            schema: KB_SCHEMA.to_string(),
            id: self.id.clone(),
            terms: self.vocab.names().to_vec(),
            formulas: self.formulas.iter().map(|f| self.vocab.format(*f)).collect(),
            meta: self.meta.clone(),
        };
        Ok(toml::to_string(&doc)?)
    }

    pub fn from_toml(text: &str) -> Result<KnowledgeBase, KbError> {
        let doc: KbDoc = toml::from_str(text)?;
        if doc.schema != KB_SCHEMA {
            return Err(KbError::Schema(doc.schema));
        }
        let mut vocab = Vocabulary::new();
        for name in &doc.terms {
            if vocab.get(name).is_some() {
                return Err(KbError::DuplicateTerm(name.clone()));
            }
            vocab.intern(name.as_str());
        }
        let formulas = doc
            .formulas
            .iter()
            .enumerate()
            .map(|(index, line)| {
                vocab
                    .parse(line)
                    .map_err(|source| KbError::Formula { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut kb = KnowledgeBase::new(doc.id, vocab, formulas)?;
        kb.meta = doc.meta;
        Ok(kb)
    }

    pub fn read(path: &Path) -> Result<KnowledgeBase, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        KnowledgeBase::from_toml(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), KbError> {
        std::fs::write(path, self.to_toml()?).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Graphviz rendering: A and O edges directed, E and I edges two-way.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {:?} {{", self.id);
        for name in self.vocab.names() {
            let _ = writeln!(out, "  {name:?};");
        }
        for f in &self.formulas {
            let dir = if f.quantifier.is_symmetric() { ", dir=both" } else { "" };
            let _ = writeln!(
                out,
                "  {:?} -> {:?} [label=\"{}\"{}];",
                self.vocab.name(f.subject),
                self.vocab.name(f.predicate),
                f.quantifier,
                dir
            );
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) mod u64_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod opt_u64_str {
    use serde::{Deserialize, Deserializer, Serializer};

    // TOML integers are signed 64-bit, so seeds travel as strings.
    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&v.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}
