//! Text datasets for the premise-selection and contradiction tasks.
//!
//! Records are JSON lines. Each KB is rendered under several pseudoword
//! substitutions and premise orders; permutation 0 keeps the KB order.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::stats_from;
use crate::inference::{GoldAnswer, GoldIndex};
use crate::kb::KnowledgeBase;
use crate::prover::splitmix64;
use crate::text::{render_wrapped, Substitution, TextError};

pub const DATASET_SCHEMA: &str = "syllogic-dataset/1";
pub const INPUT_TEMPLATE: &str = "<sentences>. Hypothesis: <sentence>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    PremiseSelection,
    ProofByContradiction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    Overall,
    Compositional,
    Recursive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    Train,
    Test,
}

/// Chain lengths held out of training, per syllogism type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub excluded: BTreeMap<u8, BTreeSet<usize>>,
}

impl SplitSpec {
    pub fn overall() -> SplitSpec {
        SplitSpec {
            kind: SplitKind::Overall,
            excluded: BTreeMap::new(),
        }
    }

    /// Compositional holds out the five shortest lengths of each type
    /// starting at the type's minimum; recursive the five ending at its
    /// maximum.
    pub fn from_lengths(kind: SplitKind, lengths: &BTreeMap<u8, BTreeSet<usize>>) -> SplitSpec {
        let mut excluded = BTreeMap::new();
        if kind != SplitKind::Overall {
            for (&ty, ls) in lengths {
                let (Some(&lo), Some(&hi)) = (ls.first(), ls.last()) else {
                    continue;
                };
                let range = match kind {
                    SplitKind::Compositional => lo..=lo + 4,
                    _ => hi.saturating_sub(4)..=hi,
                };
                excluded.insert(ty, range.collect());
            }
        }
        SplitSpec { kind, excluded }
    }

    /// Lengths observed across `kbs`.
    pub fn for_kbs(kind: SplitKind, kbs: &[KnowledgeBase]) -> SplitSpec {
        let mut lengths: BTreeMap<u8, BTreeSet<usize>> = BTreeMap::new();
        for kb in kbs {
            let stats = stats_from(kb, &GoldIndex::new(kb));
            for &(ty, len) in stats.chain_histogram.keys() {
                lengths.entry(ty).or_default().insert(len);
            }
        }
        SplitSpec::from_lengths(kind, &lengths)
    }

    pub fn is_excluded(&self, ty: u8, len: usize) -> bool {
        self.excluded.get(&ty).is_some_and(|s| s.contains(&len))
    }

    pub fn admits(&self, part: Part, ty: u8, len: usize) -> bool {
        match (self.kind, part) {
            (SplitKind::Overall, _) => true,
            (_, Part::Train) => !self.is_excluded(ty, len),
            (_, Part::Test) => self.is_excluded(ty, len),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub kb_id: String,
    pub syllogism_type: u8,
    pub chain_length: usize,
    pub substitution: usize,
    pub permutation: usize,
    /// The hypothesis over the KB's own term names.
    pub hypothesis: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub task: Task,
    pub input: String,
    pub output: String,
    pub meta: RecordMeta,
}

#[derive(Clone, Debug)]
pub struct ExportOptions {
    pub task: Task,
    pub split: SplitSpec,
    pub part: Part,
    pub subs_per_kb: usize,
    pub perms_per_kb: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub input_template: String,
    pub task: Option<Task>,
    pub split: Option<SplitSpec>,
    pub part: Option<Part>,
    pub kbs: Vec<String>,
    pub subs_per_kb: usize,
    pub perms_per_kb: usize,
    pub seed: String,
    pub records: usize,
    /// "type:length" → records.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("subs_per_kb and perms_per_kb must be at least 1")]
    Counts,
    #[error("the split leaves no records")]
    EmptySplit,
    #[error("knowledge base `{kb}`: {source}")]
    Gold {
        kb: String,
        #[source]
        source: crate::inference::GoldError,
    },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Seed of substitution `sub` for the KB at position `kb`.
pub fn substitution_seed(seed: u64, kb: usize, sub: usize) -> u64 {
    splitmix64(seed ^ splitmix64((kb as u64) << 32 | sub as u64))
}

/// Premise order `perm` of a KB with `len` formulas; 0 is the identity.
pub fn permutation(seed: u64, kb: usize, perm: usize, len: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    if perm > 0 {
        let s = splitmix64(!seed ^ splitmix64((kb as u64) << 32 | perm as u64));
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(s));
    }
    order
}

/// Input text for `h` given KB sentences in display order.
pub fn input_text(sentences: &[String], h: &str) -> String {
    format!("{}. Hypothesis: {h}", sentences.join(". "))
}

fn output_text(task: Task, gold: &GoldAnswer, order: &[usize], kb: &KnowledgeBase, s: &Substitution) -> Result<Option<String>, TextError> {
    match task {
        Task::PremiseSelection => {
            let ss = order
                .iter()
                .map(|&i| kb.formulas()[i])
                .filter(|f| gold.premise_selection.contains(f))
                .map(|f| render_wrapped(f, s))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(ss.join(". ")))
        }
        Task::ProofByContradiction => gold.pbc_formula.map(|f| render_wrapped(f, s)).transpose(),
    }
}

/// Gold answers of every hypothesis of `kb` admitted by the split.
pub fn gold_records(kb: &KnowledgeBase, task: Task, split: &SplitSpec, part: Part) -> Result<Vec<GoldAnswer>, DatasetError> {
    let index = GoldIndex::new(kb);
    let mut out = Vec::new();
    for h in index.hypotheses() {
        let inf = index.inference_for(h).map_err(|source| DatasetError::Gold {
            kb: kb.id.clone(),
            source,
        })?;
        let len = crate::inference::chain_length_of(inf);
        if !split.admits(part, inf.syllogism_type, len) {
            continue;
        }
        let gold = index.gold(h).map_err(|source| DatasetError::Gold {
            kb: kb.id.clone(),
            source,
        })?;
        if task == Task::ProofByContradiction && gold.pbc_formula.is_none() {
            continue;
        }
        out.push(gold);
    }
    Ok(out)
}

/// Writes records for every KB, substitution, permutation and admitted
/// hypothesis in that nesting order.
pub fn export_dataset(kbs: &[KnowledgeBase], opts: &ExportOptions, out: &mut impl Write) -> Result<Manifest, DatasetError> {
    if opts.subs_per_kb == 0 || opts.perms_per_kb == 0 {
        return Err(DatasetError::Counts);
    }
    let mut manifest = Manifest {
        schema: DATASET_SCHEMA.to_string(),
        input_template: INPUT_TEMPLATE.to_string(),
        task: Some(opts.task),
        split: Some(opts.split.clone()),
        part: Some(opts.part),
        kbs: kbs.iter().map(|k| k.id.clone()).collect(),
        subs_per_kb: opts.subs_per_kb,
        perms_per_kb: opts.perms_per_kb,
        seed: opts.seed.to_string(),
        ..Manifest::default()
    };
    for (ki, kb) in kbs.iter().enumerate() {
        let golds = gold_records(kb, opts.task, &opts.split, opts.part)?;
        for sub in 0..opts.subs_per_kb {
            let s = Substitution::generate(kb.num_terms(), substitution_seed(opts.seed, ki, sub));
            for perm in 0..opts.perms_per_kb {
                let order = permutation(opts.seed, ki, perm, kb.len());
                let sentences = order
                    .iter()
                    .map(|&i| render_wrapped(kb.formulas()[i], &s))
                    .collect::<Result<Vec<_>, _>>()?;
                for gold in &golds {
                    let Some(output) = output_text(opts.task, gold, &order, kb, &s)? else {
                        continue;
                    };
                    let record = DatasetRecord {
                        task: opts.task,
                        input: input_text(&sentences, &render_wrapped(gold.hypothesis, &s)?),
                        output,
                        meta: RecordMeta {
                            kb_id: kb.id.clone(),
                            syllogism_type: gold.syllogism_type,
                            chain_length: gold.chain_length,
                            substitution: sub,
                            permutation: perm,
                            hypothesis: kb.format(gold.hypothesis),
                        },
                    };
                    serde_json::to_writer(&mut *out, &record)?;
                    out.write_all(b"\n")?;
                    manifest.records += 1;
                    *manifest
                        .counts
                        .entry(format!("{}:{}", gold.syllogism_type, gold.chain_length))
                        .or_default() += 1;
                }
            }
        }
    }
    if manifest.records == 0 {
        return Err(DatasetError::EmptySplit);
    }
    Ok(manifest)
}

/// Sentences of a `. `-joined list.
pub fn split_sentences(text: &str) -> Vec<&str> {
    text.split(". ").map(|s| s.trim_end_matches('.')).filter(|s| !s.is_empty()).collect()
}

/// Formulas of `kb` that the input section of a record lists, in order.
pub fn input_premises(input: &str) -> Vec<&str> {
    let body = input.split(". Hypothesis: ").next().unwrap_or("");
    split_sentences(body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::from_toml(include_str!("../tests/fixtures/sample.kb")).unwrap()
    }

    fn opts(task: Task, split: SplitSpec, part: Part, subs: usize, perms: usize) -> ExportOptions {
        ExportOptions {
            task,
            split,
            part,
            subs_per_kb: subs,
            perms_per_kb: perms,
            seed: 11,
        }
    }

    #[test]
    fn record_count_is_product() {
        let kbs = [kb()];
        let hyps = GoldIndex::new(&kbs[0]).hypotheses().len();
        let mut buf = Vec::new();
        let m = export_dataset(&kbs, &opts(Task::PremiseSelection, SplitSpec::overall(), Part::Train, 3, 2), &mut buf).unwrap();
        assert_eq!(m.records, 3 * 2 * hyps);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), m.records);
    }

    #[test]
    fn outputs_are_quoted_from_input() {
        let mut buf = Vec::new();
        export_dataset(&[kb()], &opts(Task::PremiseSelection, SplitSpec::overall(), Part::Train, 2, 3), &mut buf).unwrap();
        for line in String::from_utf8(buf).unwrap().lines() {
            let r: DatasetRecord = serde_json::from_str(line).unwrap();
            let kb_part = input_premises(&r.input);
            for s in split_sentences(&r.output) {
                assert!(kb_part.contains(&s), "{s} not in {}", r.input);
            }
        }
    }

    #[test]
    fn identity_permutation_keeps_kb_order() {
        let k = kb();
        assert_eq!(permutation(5, 0, 0, k.len()), (0..k.len()).collect::<Vec<_>>());
        let mut buf = Vec::new();
        export_dataset(&[k.clone()], &opts(Task::PremiseSelection, SplitSpec::overall(), Part::Train, 1, 1), &mut buf).unwrap();
        let first: DatasetRecord = serde_json::from_str(String::from_utf8(buf).unwrap().lines().next().unwrap()).unwrap();
        let s = Substitution::generate(k.num_terms(), substitution_seed(11, 0, 0));
        let expect: Vec<String> = k.formulas().iter().map(|f| render_wrapped(*f, &s).unwrap()).collect();
        assert_eq!(input_premises(&first.input), expect.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn split_exclusion() {
        let kbs = [crate::generate::generate_kb(&crate::generate::GenParams::long_chains(2)).unwrap()];
        let comp = SplitSpec::for_kbs(SplitKind::Compositional, &kbs);
        assert_eq!(comp.excluded[&2], (1..=5).collect());
        for part in [Part::Train, Part::Test] {
            let mut buf = Vec::new();
            export_dataset(&kbs, &opts(Task::PremiseSelection, comp.clone(), part, 1, 1), &mut buf).unwrap();
            for line in String::from_utf8(buf).unwrap().lines() {
                let r: DatasetRecord = serde_json::from_str(line).unwrap();
                let ex = comp.is_excluded(r.meta.syllogism_type, r.meta.chain_length);
                assert_eq!(ex, part == Part::Test);
            }
        }
        let everything = SplitSpec {
            kind: SplitKind::Recursive,
            excluded: (1..=7).map(|t| (t, (0..=20).collect())).collect(),
        };
        let r = export_dataset(&kbs, &opts(Task::PremiseSelection, everything, Part::Train, 1, 1), &mut Vec::new());
        assert!(matches!(r, Err(DatasetError::EmptySplit)));
    }

    #[test]
    fn pbc_task_skips_direct_hypotheses() {
        let mut buf = Vec::new();
        export_dataset(&[kb()], &opts(Task::ProofByContradiction, SplitSpec::overall(), Part::Train, 1, 1), &mut buf).unwrap();
        for line in String::from_utf8(buf).unwrap().lines() {
            let r: DatasetRecord = serde_json::from_str(line).unwrap();
            assert!(![2, 6].contains(&r.meta.syllogism_type));
        }
    }
}
