//! Random consistent, non-redundant knowledge bases.
//!
//! A-formulas form a forest of out-trees: each tree has a spine of the
//! chosen maximum chain length, and further terms hang off spine or earlier
//! terms without extending the longest chain. E, I and O formulas are then
//! proposed between terms and kept only when the KB stays consistent and
//! every consequence still has a single minimal premise set.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{Closure, FormulaSpace, ProvabilityOracle};
use crate::formula::{Formula, Quantifier, TermId, Vocabulary};
use crate::inference::{chain_length_of, GoldIndex, PatternOracle};
use crate::kb::KnowledgeBase;
use crate::prover::splitmix64;
use crate::semantics::is_consistent;

/// KBs up to this many terms are audited with the closure oracle on every
/// consequence.
pub const EXHAUSTIVE_TERMS: usize = 12;

const MAX_ATTEMPTS: u64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub num_subgraphs: usize,
    /// Each tree's longest A-chain is drawn from this range.
    pub min_chain_len: usize,
    pub max_chain_len: usize,
    /// A-formulas per tree, at least its chain length.
    pub a_per_subgraph: usize,
    pub e_edges: usize,
    /// E-formulas join terms at least this deep.
    pub e_min_depth: usize,
    pub i_edges: usize,
    /// I-formulas join terms at most this deep (roots are depth 0).
    pub i_max_depth: usize,
    pub o_edges: usize,
    #[serde(with = "crate::kb::u64_str")]
    pub seed: u64,
}

impl GenParams {
    /// Four trees with chains of length 5.
    pub fn short_chains(seed: u64) -> GenParams {
        GenParams {
            num_subgraphs: 4,
            min_chain_len: 5,
            max_chain_len: 5,
            a_per_subgraph: 8,
            e_edges: 2,
            e_min_depth: 4,
            i_edges: 2,
            i_max_depth: 0,
            o_edges: 9,
            seed,
        }
    }

    /// Two trees with chains of length 7 to 10.
    pub fn long_chains(seed: u64) -> GenParams {
        GenParams {
            num_subgraphs: 2,
            min_chain_len: 7,
            max_chain_len: 10,
            a_per_subgraph: 16,
            e_edges: 1,
            e_min_depth: 5,
            i_edges: 1,
            i_max_depth: 2,
            o_edges: 9,
            seed,
        }
    }

    /// Short and long kinds, alternating by `index`.
    pub fn mixed(index: usize, seed: u64) -> GenParams {
        if index % 2 == 0 {
            GenParams::short_chains(seed)
        } else {
            GenParams::long_chains(seed)
        }
    }

    /// Smaller KBs (at most twelve terms) for exhaustive checks.
    pub fn small(seed: u64) -> GenParams {
        GenParams {
            num_subgraphs: 2,
            min_chain_len: 2,
            max_chain_len: 3,
            a_per_subgraph: 4,
            e_edges: 1,
            e_min_depth: 1,
            i_edges: 1,
            i_max_depth: 1,
            o_edges: 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Params(m.to_string()));
        if self.num_subgraphs == 0 {
            return bad("num_subgraphs must be at least 1");
        }
        if self.min_chain_len == 0 || self.min_chain_len > self.max_chain_len {
            return bad("chain length range must satisfy 1 <= min <= max");
        }
        if self.a_per_subgraph < self.max_chain_len {
            return bad("a_per_subgraph must be at least max_chain_len");
        }
        Ok(())
    }

    fn wants_all_types(&self) -> bool {
        self.e_edges > 0 && self.i_edges > 0 && self.o_edges > 0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("no KB after {attempts} attempts: {diagnostics}")]
    Exhausted { attempts: u64, diagnostics: String },
}

struct Tree {
    nodes: Vec<usize>,
    depth: Vec<usize>,
    leaf: Vec<bool>,
    chain: usize,
}

struct Builder {
    n: usize,
    trees: Vec<Tree>,
    formulas: Vec<Formula>,
}

impl Builder {
    fn forest(params: &GenParams, rng: &mut ChaCha8Rng) -> Builder {
        let mut b = Builder {
            n: 0,
            trees: Vec::new(),
            formulas: Vec::new(),
        };
        for _ in 0..params.num_subgraphs {
            let chain = rng.gen_range(params.min_chain_len..=params.max_chain_len);
            let mut tree = Tree {
                nodes: Vec::new(),
                depth: Vec::new(),
                leaf: Vec::new(),
                chain,
            };
            let mut parent_of = Vec::new();
            for d in 0..=chain {
                parent_of.push(d.checked_sub(1));
                tree.depth.push(d);
            }
            for _ in chain..params.a_per_subgraph {
                // Deeper parents are likelier, which keeps the trees narrow.
                let open: Vec<usize> = (0..tree.depth.len()).filter(|&k| tree.depth[k] < chain).collect();
                let p = *open
                    .choose_weighted(rng, |&k| (tree.depth[k] + 1).pow(2))
                    .expect("spine root is open");
                parent_of.push(Some(p));
                tree.depth.push(tree.depth[p] + 1);
            }
            let base = b.n;
            tree.nodes = (base..base + tree.depth.len()).collect();
            tree.leaf = vec![true; tree.depth.len()];
            for (k, p) in parent_of.iter().enumerate() {
                if let Some(p) = *p {
                    tree.leaf[p] = false;
                    b.formulas.push(Formula::a(TermId((base + p) as u32), TermId((base + k) as u32)));
                }
            }
            b.n += tree.depth.len();
            b.trees.push(tree);
        }
        b
    }

    fn pick(&self, rng: &mut ChaCha8Rng, tree: usize, keep: impl Fn(&Tree, usize) -> bool) -> Option<usize> {
        let t = &self.trees[tree];
        let ok: Vec<usize> = (0..t.nodes.len()).filter(|&k| keep(t, k)).collect();
        ok.choose(rng).map(|&k| t.nodes[k])
    }

    fn try_add(&mut self, f: Formula) -> bool {
        if self.formulas.iter().any(|g| g.terms() == f.terms() || g.terms() == f.converse().terms()) {
            return false;
        }
        self.formulas.push(f);
        if is_consistent(&self.formulas) && redundancy_witness(self.n, &self.formulas, Oracle::Pattern).is_none() {
            true
        } else {
            self.formulas.pop();
            false
        }
    }

    fn extra_edges(&mut self, params: &GenParams, rng: &mut ChaCha8Rng) {
        let trees = self.trees.len();
        let t = |x: usize| TermId(x as u32);
        // E between deep terms of different trees, one per tree pair.
        let mut linked = Vec::new();
        let mut added = 0;
        for _ in 0..params.e_edges * 20 {
            if added == params.e_edges || trees < 2 {
                break;
            }
            let (t1, t2) = (rng.gen_range(0..trees), rng.gen_range(0..trees));
            if t1 == t2 || linked.contains(&(t1.min(t2), t1.max(t2))) {
                continue;
            }
            let deep = |tr: &Tree, k: usize| tr.depth[k] >= params.e_min_depth.min(tr.chain);
            let (Some(u), Some(v)) = (self.pick(rng, t1, deep), self.pick(rng, t2, deep)) else {
                continue;
            };
            if self.try_add(Formula::e(t(u), t(v))) {
                linked.push((t1.min(t2), t1.max(t2)));
                added += 1;
            }
        }
        // I between terms near the roots of different trees.
        added = 0;
        for _ in 0..params.i_edges * 60 {
            if added == params.i_edges || trees < 2 {
                break;
            }
            let (t1, t2) = (rng.gen_range(0..trees), rng.gen_range(0..trees));
            if t1 == t2 {
                continue;
            }
            let shallow = |tr: &Tree, k: usize| tr.depth[k] <= params.i_max_depth;
            let (Some(u), Some(v)) = (self.pick(rng, t1, shallow), self.pick(rng, t2, shallow)) else {
                continue;
            };
            if self.try_add(Formula::i(t(u), t(v))) {
                added += 1;
            }
        }
        // O mostly from leaves to deeper terms, anywhere.
        added = 0;
        for _ in 0..params.o_edges * 20 {
            if added == params.o_edges {
                break;
            }
            let (t1, t2) = (rng.gen_range(0..trees), rng.gen_range(0..trees));
            let from_leaf = rng.gen_bool(0.3);
            let a = self.pick(rng, t1, |tr, k| !from_leaf || tr.leaf[k]);
            let d = self.pick(rng, t2, |tr, k| tr.depth[k] + 1 >= tr.chain);
            let (Some(a), Some(d)) = (a, d) else { continue };
            if a != d && self.try_add(Formula::o(t(a), t(d))) {
                added += 1;
            }
        }
    }
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Short and long kinds, alternating.
    Mixed,
    Short,
    Long,
    Small,
}

impl Preset {
    pub fn params(self, index: usize, seed: u64) -> GenParams {
        match self {
            Preset::Mixed => GenParams::mixed(index, seed),
            Preset::Short => GenParams::short_chains(seed),
            Preset::Long => GenParams::long_chains(seed),
            Preset::Small => GenParams::small(seed),
        }
    }
}

/// Seed of the `index`-th KB of a batch.
pub fn batch_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ index as u64)
}

/// A consistent, non-redundant KB drawn from `params`. When every extra-edge
/// count is positive, the KB also has at least one inference of each type.
pub fn generate_kb(params: &GenParams) -> Result<KnowledgeBase, GenError> {
    params.validate()?;
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(params.seed ^ splitmix64(attempt)));
        let mut b = Builder::forest(params, &mut rng);
        b.extra_edges(params, &mut rng);
        let vocab = Vocabulary::from_names((1..=b.n).map(|i| format!("x{i}")));
        let mut kb = KnowledgeBase::new(format!("kb-{:016x}", params.seed), vocab, b.formulas)
            .expect("generator emits known, distinct formulas");
        kb.meta.seed = Some(params.seed);
        kb.meta.params = Some(params.clone());
        let stats = kb_stats(&kb);
        let missing: Vec<u8> = (1..=7u8)
            .filter(|&ty| stats.hypotheses_of(ty) == 0)
            .collect();
        if !params.wants_all_types() || missing.is_empty() {
            kb.meta.stats = stats.summary();
            return Ok(kb);
        }
        last = format!("attempt {attempt} lacked types {missing:?}");
    }
    Err(GenError::Exhausted {
        attempts: MAX_ATTEMPTS,
        diagnostics: last,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    /// Every consequence checked with the closure oracle.
    Exhaustive,
    /// Every consequence checked with the pattern oracle, a sample of them
    /// also with the closure oracle.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub formula: Formula,
    pub first: Vec<Formula>,
    pub second: Vec<Formula>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub mode: VerifyMode,
    pub counterexample: Option<Counterexample>,
}

impl Verification {
    pub fn non_redundant(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Clone, Copy)]
enum Oracle {
    Closure,
    Pattern,
}

fn provable_set(n: usize, premises: &[Formula], oracle: Oracle) -> FixedBitSet {
    match oracle {
        Oracle::Pattern => PatternOracle::new(n, premises).entailed(),
        Oracle::Closure => {
            let o = ProvabilityOracle::new(n, premises);
            let space = FormulaSpace::new(n);
            let mut out = FixedBitSet::with_capacity(space.size());
            for f in space.all() {
                if o.provable(f) {
                    out.insert(space.index(f));
                }
            }
            out
        }
    }
}

fn provable(n: usize, premises: &[Formula], f: Formula, oracle: Oracle) -> bool {
    match oracle {
        Oracle::Pattern => PatternOracle::new(n, premises).provable(f),
        Oracle::Closure => ProvabilityOracle::new(n, premises).provable(f),
    }
}

/// A premise set proves `f` through a unique minimal subset iff the premises
/// that cannot be dropped without losing `f` prove it by themselves. Returns
/// the first consequence (in formula-space order) for which that fails.
fn redundancy_witness(n: usize, premises: &[Formula], oracle: Oracle) -> Option<Formula> {
    let space = FormulaSpace::new(n);
    let full = provable_set(n, premises, oracle);
    let without: Vec<FixedBitSet> = (0..premises.len())
        .map(|m| {
            let rest: Vec<Formula> = premises
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != m)
                .map(|(_, f)| *f)
                .collect();
            provable_set(n, &rest, oracle)
        })
        .collect();
    full.ones().find_map(|idx| {
        let f = space.formula(idx);
        let needed: Vec<Formula> = (0..premises.len())
            .filter(|&m| !without[m].contains(idx))
            .map(|m| premises[m])
            .collect();
        (!provable(n, &needed, f, oracle)).then_some(f)
    })
}

fn shrink(n: usize, mut set: Vec<Formula>, f: Formula, oracle: Oracle) -> Vec<Formula> {
    let mut i = 0;
    while i < set.len() {
        let mut rest = set.clone();
        rest.remove(i);
        if provable(n, &rest, f, oracle) {
            set = rest;
        } else {
            i += 1;
        }
    }
    set.sort_unstable();
    set
}

fn counterexample(n: usize, premises: &[Formula], f: Formula, oracle: Oracle) -> Counterexample {
    let first = shrink(n, premises.to_vec(), f, oracle);
    let dropped = first
        .iter()
        .copied()
        .find(|m| {
            let rest: Vec<Formula> = premises.iter().copied().filter(|g| g != m).collect();
            provable(n, &rest, f, oracle)
        })
        .expect("a redundant consequence survives dropping some premise of a minimal set");
    let rest: Vec<Formula> = premises.iter().copied().filter(|g| *g != dropped).collect();
    let second = shrink(n, rest, f, oracle);
    Counterexample {
        formula: f,
        first,
        second,
    }
}

/// Checks that every consequence of `kb` has exactly one minimal premise
/// set, returning a consequence with two of them otherwise.
pub fn verify_non_redundant(kb: &KnowledgeBase) -> Verification {
    let n = kb.num_terms();
    let premises = kb.formulas();
    if n <= EXHAUSTIVE_TERMS {
        return Verification {
            mode: VerifyMode::Exhaustive,
            counterexample: redundancy_witness(n, premises, Oracle::Closure)
                .map(|f| counterexample(n, premises, f, Oracle::Closure)),
        };
    }
    let mut witness = redundancy_witness(n, premises, Oracle::Pattern).map(|f| (f, Oracle::Pattern));
    if witness.is_none() {
        // Cross-check a deterministic sample with the closure oracle.
        let space = FormulaSpace::new(n);
        let full = Closure::new(n, premises.iter().copied());
        let sample: Vec<Formula> = full.iter().step_by(7).take(48).collect();
        for f in sample {
            let needed: Vec<Formula> = premises
                .iter()
                .copied()
                .filter(|m| {
                    let rest: Vec<Formula> = premises.iter().copied().filter(|g| g != m).collect();
                    !provable(n, &rest, f, Oracle::Closure)
                })
                .collect();
            if !provable(n, &needed, f, Oracle::Closure) {
                witness = Some((f, Oracle::Closure));
                break;
            }
            debug_assert!(space.contains(f));
        }
    }
    Verification {
        mode: VerifyMode::Sampled,
        counterexample: witness.map(|(f, o)| counterexample(n, premises, f, o)),
    }
}

/// Hypothesis counts of a KB. Symmetric conclusions count once per
/// orientation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbStats {
    pub premises: usize,
    /// Minimal inferences per type (index 0 is type 1).
    pub inferences: [usize; 7],
    /// Premise-selection hypotheses per type.
    pub hypotheses: [usize; 7],
    /// Hypotheses that need a contradiction, per type.
    pub pbc_hypotheses: [usize; 7],
    /// (type, chain length) → premise-selection hypotheses.
    pub chain_histogram: BTreeMap<(u8, usize), usize>,
}

impl KbStats {
    pub fn hypotheses_of(&self, ty: u8) -> usize {
        self.hypotheses[ty as usize - 1]
    }

    pub fn total_hypotheses(&self) -> usize {
        self.hypotheses.iter().sum()
    }

    pub fn total_pbc(&self) -> usize {
        self.pbc_hypotheses.iter().sum()
    }

    pub fn summary(&self) -> BTreeMap<String, u64> {
        let mut m = BTreeMap::new();
        m.insert("premises".to_string(), self.premises as u64);
        m.insert("hypotheses".to_string(), self.total_hypotheses() as u64);
        m.insert("pbc_hypotheses".to_string(), self.total_pbc() as u64);
        for ty in 1..=7u8 {
            m.insert(format!("type{ty}"), self.hypotheses_of(ty) as u64);
        }
        m
    }
}

pub fn kb_stats(kb: &KnowledgeBase) -> KbStats {
    stats_from(kb, &GoldIndex::new(kb))
}

pub fn stats_from(kb: &KnowledgeBase, index: &GoldIndex) -> KbStats {
    let direct = Closure::new(kb.num_terms(), kb.formulas().iter().copied());
    let mut s = KbStats {
        premises: kb.len(),
        ..KbStats::default()
    };
    for inf in index.inferences() {
        let k = inf.syllogism_type as usize - 1;
        s.inferences[k] += 1;
        for h in inf.hypotheses() {
            s.hypotheses[k] += 1;
            if !direct.contains(h) {
                s.pbc_hypotheses[k] += 1;
            }
            *s
                .chain_histogram
                .entry((inf.syllogism_type, chain_length_of(inf)))
                .or_default() += 1;
        }
    }
    s
}

/// Longest A-chain of a KB.
pub fn longest_chain(kb: &KnowledgeBase) -> usize {
    let n = kb.num_terms();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for f in kb.formulas() {
        if f.quantifier == Quantifier::A {
            succ[f.subject.index()].push(f.predicate.index());
            indeg[f.predicate.index()] += 1;
        }
    }
    let mut longest = vec![0usize; n];
    let mut queue: Vec<usize> = (0..n).filter(|&x| indeg[x] == 0).collect();
    while let Some(x) = queue.pop() {
        for &y in &succ[x] {
            longest[y] = longest[y].max(longest[x] + 1);
            indeg[y] -= 1;
            if indeg[y] == 0 {
                queue.push(y);
            }
        }
    }
    longest.into_iter().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_tree() {
        let p = GenParams {
            num_subgraphs: 1,
            min_chain_len: 1,
            max_chain_len: 1,
            a_per_subgraph: 1,
            e_edges: 0,
            e_min_depth: 0,
            i_edges: 0,
            i_max_depth: 0,
            o_edges: 0,
            seed: 9,
        };
        let kb = generate_kb(&p).unwrap();
        assert_eq!(kb.formulas(), &[kb.parse("A x1 x2").unwrap()]);
    }

    #[test]
    fn sample_is_non_redundant() {
        let kb = KnowledgeBase::from_toml(include_str!("../tests/fixtures/sample.kb")).unwrap();
        let v = verify_non_redundant(&kb);
        assert_eq!(v.mode, VerifyMode::Exhaustive);
        assert!(v.non_redundant(), "{v:?}");
    }

    #[test]
    fn two_paths_are_redundant() {
        let kb = KnowledgeBase::from_symbolic("k", ["A a b", "A a c", "A c b"]).unwrap();
        let v = verify_non_redundant(&kb);
        let c = v.counterexample.unwrap();
        assert_eq!(c.formula, kb.parse("A a b").unwrap());
        assert_ne!(c.first, c.second);
        let single = KnowledgeBase::from_symbolic("k", ["E a b"]).unwrap();
        assert!(verify_non_redundant(&single).non_redundant());
    }

    #[test]
    fn long_kind_respects_chain_range() {
        for seed in 0..3 {
            let kb = generate_kb(&GenParams::long_chains(seed)).unwrap();
            assert!((7..=10).contains(&longest_chain(&kb)));
            assert_eq!(kb.count(Quantifier::A), 32);
        }
    }

    #[test]
    fn seed_determinism() {
        let a = generate_kb(&GenParams::short_chains(4)).unwrap();
        let b = generate_kb(&GenParams::short_chains(4)).unwrap();
        assert_eq!(a, b);
        let c = generate_kb(&GenParams::short_chains(5)).unwrap();
        assert_ne!(a.formulas(), c.formulas());
    }

    #[test]
    fn without_extra_edges_only_a_types() {
        let p = GenParams {
            e_edges: 0,
            i_edges: 0,
            o_edges: 0,
            ..GenParams::short_chains(1)
        };
        let s = kb_stats(&generate_kb(&p).unwrap());
        for ty in [1, 3, 5, 6, 7] {
            assert_eq!(s.hypotheses_of(ty), 0);
        }
        assert!(s.hypotheses_of(2) > 0 && s.hypotheses_of(4) > 0);
    }
}
