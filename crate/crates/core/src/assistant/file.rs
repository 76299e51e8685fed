use std::io::{BufRead, Write};
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{dedup, Assistant, ContradictionHint, HintError, HintSource, OracleAssistant, PremiseHint};
use crate::dataset::Task;
use crate::formula::Formula;
use crate::kb::KnowledgeBase;
use crate::text::{render, SentenceReader};

pub const HINT_SCHEMA: &str = "syllogic-hints/1";

/// One stored answer. Sentences use the KB's own term names as words.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintLine {
    pub schema: String,
    pub kb: String,
    pub task: Task,
    pub hypothesis: String,
    pub sentences: Vec<String>,
}

#[derive(Debug, Error)]
pub enum HintFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
}

/// Precomputed answers looked up by KB id, task and hypothesis sentence.
#[derive(Debug, Default)]
pub struct FileAssistant {
    hints: FxHashMap<(String, Task, String), Vec<String>>,
}

impl FileAssistant {
    pub fn load(path: &Path) -> Result<FileAssistant, HintFileError> {
        let file = std::fs::File::open(path).map_err(|source| HintFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        FileAssistant::from_reader(std::io::BufReader::new(file))
    }

    pub fn from_reader(r: impl BufRead) -> Result<FileAssistant, HintFileError> {
        let mut hints = FxHashMap::default();
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| HintFileError::Line {
                line: line_no,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let h: HintLine = serde_json::from_str(&line).map_err(|e| HintFileError::Line {
                line: line_no,
                msg: e.to_string(),
            })?;
            if h.schema != HINT_SCHEMA {
                return Err(HintFileError::Line {
                    line: line_no,
                    msg: format!("schema `{}`, expected `{HINT_SCHEMA}`", h.schema),
                });
            }
            hints.insert((h.kb, h.task, h.hypothesis), h.sentences);
        }
        Ok(FileAssistant { hints })
    }

    pub fn len(&self) -> usize {
        self.hints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hints.is_empty()
    }

    fn lookup(&self, kb: &KnowledgeBase, task: Task, h: Formula) -> Result<Vec<Formula>, HintError> {
        let key = render(h, kb.vocab()).map_err(|e| HintError::NoHint(e.to_string()))?;
        let sentences = self
            .hints
            .get(&(kb.id.clone(), task, key))
            .ok_or_else(|| HintError::NoHint(format!("no stored hint for `{}`", kb.format(h))))?;
        let mut reader = SentenceReader::new(kb.vocab());
        sentences
            .iter()
            .map(|s| reader.parse(s).map(|p| p.formula))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| HintError::Malformed(e.to_string()))
    }
}

impl Assistant for FileAssistant {
    fn suggest_premises(&self, kb: &KnowledgeBase, h: Formula) -> Result<PremiseHint, HintError> {
        Ok(PremiseHint {
            premises: dedup(self.lookup(kb, Task::PremiseSelection, h)?),
            source: HintSource::File,
        })
    }

    fn suggest_contradiction(&self, kb: &KnowledgeBase, h: Formula) -> Result<ContradictionHint, HintError> {
        match self.lookup(kb, Task::ProofByContradiction, h)?.as_slice() {
            [f] => Ok(ContradictionHint {
                formula: *f,
                source: HintSource::File,
            }),
            other => Err(HintError::Malformed(format!("expected one sentence, got {}", other.len()))),
        }
    }
}

/// Writes oracle answers for every hypothesis of every KB. Returns the
/// number of lines.
pub fn dump_hints(kbs: &[KnowledgeBase], out: &mut impl Write) -> Result<usize, std::io::Error> {
    let oracle = OracleAssistant::new();
    let mut lines = 0;
    let mut emit = |kb: &KnowledgeBase, task: Task, h: Formula, fs: &[Formula]| -> std::io::Result<()> {
        let line = HintLine {
            schema: HINT_SCHEMA.to_string(),
            kb: kb.id.clone(),
            task,
            hypothesis: render(h, kb.vocab()).expect("KB term"),
            sentences: fs.iter().map(|f| render(*f, kb.vocab()).expect("KB term")).collect(),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
        lines += 1;
        Ok(())
    };
    for kb in kbs {
        let index = oracle.index(kb);
        for h in index.hypotheses() {
            let gold = index.gold(h).expect("enumerated hypotheses have gold answers");
            emit(kb, Task::PremiseSelection, h, &gold.premise_selection)?;
            if let Some(f) = gold.pbc_formula {
                emit(kb, Task::ProofByContradiction, h, &[f])?;
            }
        }
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_kb() -> KnowledgeBase {
        KnowledgeBase::from_toml(include_str!("../../tests/fixtures/sample.kb")).unwrap()
    }

    #[test]
    fn dump_and_reload_matches_oracle() {
        let kb = sample_kb();
        let mut buf = Vec::new();
        let n = dump_hints(std::slice::from_ref(&kb), &mut buf).unwrap();
        let file = FileAssistant::from_reader(buf.as_slice()).unwrap();
        assert_eq!(file.len(), n);
        let oracle = OracleAssistant::new();
        for h in oracle.index(&kb).hypotheses() {
            assert_eq!(
                file.suggest_premises(&kb, h).unwrap().premises,
                oracle.suggest_premises(&kb, h).unwrap().premises
            );
            assert_eq!(
                file.suggest_contradiction(&kb, h).ok().map(|c| c.formula),
                oracle.suggest_contradiction(&kb, h).ok().map(|c| c.formula)
            );
        }
    }

    #[test]
    fn missing_and_fabricated() {
        let kb = sample_kb();
        let text = format!(
            "{}\n",
            serde_json::json!({
                "schema": HINT_SCHEMA, "kb": "sample", "task": "premise-selection",
                "hypothesis": "All x6 are x11", "sentences": ["All x6 are gleeb", "All gleeb are x11"]
            })
        );
        let file = FileAssistant::from_reader(text.as_bytes()).unwrap();
        let hint = file.suggest_premises(&kb, kb.parse("A x6 x11").unwrap()).unwrap();
        assert!(hint.premises.iter().all(|f| f.terms().iter().any(|t| t.index() == kb.num_terms())));
        assert!(matches!(
            file.suggest_premises(&kb, kb.parse("A x6 x9").unwrap()),
            Err(HintError::NoHint(_))
        ));
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let text = "\n{\"schema\":\"other\",\"kb\":\"k\",\"task\":\"premise-selection\",\"hypothesis\":\"\",\"sentences\":[]}\n";
        match FileAssistant::from_reader(text.as_bytes()) {
            Err(HintFileError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match FileAssistant::from_reader("not json".as_bytes()) {
            Err(HintFileError::Line { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }
}
