use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use super::{Assistant, ContradictionHint, HintError, HintSource, PremiseHint};
use crate::formula::Formula;
use crate::inference::{GoldAnswer, GoldIndex};
use crate::kb::KnowledgeBase;

/// Answers from the enumerated minimal inferences. Indexes are built once
/// per KB id and shared between threads.
#[derive(Default)]
pub struct OracleAssistant {
    indexes: Mutex<FxHashMap<String, Arc<GoldIndex>>>,
}

impl OracleAssistant {
    pub fn new() -> OracleAssistant {
        OracleAssistant::default()
    }

    pub fn index(&self, kb: &KnowledgeBase) -> Arc<GoldIndex> {
        if let Some(ix) = self.indexes.lock().expect("index lock").get(&kb.id) {
            return ix.clone();
        }
        // Built outside the lock; a racing thread may build it too.
        let ix = Arc::new(GoldIndex::new(kb));
        self.indexes
            .lock()
            .expect("index lock")
            .entry(kb.id.clone())
            .or_insert(ix)
            .clone()
    }

    pub fn gold(&self, kb: &KnowledgeBase, h: Formula) -> Result<GoldAnswer, HintError> {
        Ok(self.index(kb).gold(h)?)
    }
}

impl Assistant for OracleAssistant {
    fn suggest_premises(&self, kb: &KnowledgeBase, h: Formula) -> Result<PremiseHint, HintError> {
        let ix = self.index(kb);
        Ok(PremiseHint {
            premises: ix.inference_for(h)?.premises.clone(),
            source: HintSource::Oracle,
        })
    }

    fn suggest_contradiction(&self, kb: &KnowledgeBase, h: Formula) -> Result<ContradictionHint, HintError> {
        let formula = self.gold(kb, h)?.pbc_formula.ok_or(HintError::NotApplicable)?;
        Ok(ContradictionHint {
            formula,
            source: HintSource::Oracle,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_premises() {
        let kb = KnowledgeBase::from_toml(include_str!("../../tests/fixtures/sample.kb")).unwrap();
        let o = OracleAssistant::new();
        let hint = o.suggest_premises(&kb, kb.parse("A x6 x11").unwrap()).unwrap();
        let mut want: Vec<Formula> = ["A x6 x7", "A x7 x9", "A x9 x11"].iter().map(|s| kb.parse(s).unwrap()).collect();
        want.sort_unstable();
        assert_eq!(hint.premises, want);
        assert_eq!(
            o.suggest_contradiction(&kb, kb.parse("A x6 x11").unwrap()),
            Err(HintError::NotApplicable)
        );
    }

    #[test]
    fn i_from_a_needs_converse() {
        let kb = KnowledgeBase::from_symbolic("ab", ["A a b"]).unwrap();
        let o = OracleAssistant::new();
        let hint = o.suggest_contradiction(&kb, kb.parse("I a b").unwrap()).unwrap();
        assert_eq!(hint.formula, kb.parse("I b a").unwrap());
    }
}
