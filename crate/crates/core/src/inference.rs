//! Minimal inferences of the seven syllogism types.
//!
//! | type | premises                                          | conclusion |
//! |------|---------------------------------------------------|------------|
//! | 1    | a..b, c..d, O a d                                 | O b c      |
//! | 2    | a..b                                              | A a b      |
//! | 3    | a..b, c..d, a..e, E d e                           | O b c      |
//! | 4    | a..b, a..c                                        | I b c      |
//! | 5    | a..b, c..d, e..f, I a e, E d f                    | O b c      |
//! | 6    | a..b, c..d, E b d                                 | E a c      |
//! | 7    | a..b, c..d, I a c                                 | I b d      |
//!
//! `x..y` is an A-chain, possibly empty (x = y) except in type 2. Chain
//! lengths are reported per slot in the order of the premise column.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::{FormulaSpace, ProvabilityOracle};
use crate::formula::{Formula, Quantifier, TermId};
use crate::kb::KnowledgeBase;

pub const SYLLOGISM_TYPES: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinimalInference {
    pub syllogism_type: u8,
    /// Sorted.
    pub premises: Vec<Formula>,
    /// Canonical orientation for I and E.
    pub conclusion: Formula,
    pub chain_lengths: Vec<usize>,
}

impl MinimalInference {
    /// Both orientations of a symmetric conclusion, one otherwise.
    pub fn hypotheses(&self) -> Vec<Formula> {
        if self.conclusion.quantifier.is_symmetric() {
            vec![self.conclusion, self.conclusion.converse()]
        } else {
            vec![self.conclusion]
        }
    }
}

/// The scalar chain length of an inference: the longest of its chains.
pub fn chain_length_of(inf: &MinimalInference) -> usize {
    inf.chain_lengths.iter().copied().max().unwrap_or(0)
}

/// Reflexive A-reachability over a premise set.
struct Reach {
    /// `up[x]`: terms y with x ≤ y.
    up: Vec<FixedBitSet>,
    /// `down[y]`: terms x with x ≤ y.
    down: Vec<FixedBitSet>,
}

impl Reach {
    fn new(n: usize, premises: &[Formula]) -> Reach {
        let mut succ = vec![Vec::new(); n];
        for f in premises {
            if f.quantifier == Quantifier::A {
                succ[f.subject.index()].push(f.predicate.index());
            }
        }
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        let mut stack = Vec::new();
        for (x, row) in up.iter_mut().enumerate() {
            stack.push(x);
            while let Some(y) = stack.pop() {
                if !row.put(y) {
                    stack.extend(succ[y].iter().copied());
                }
            }
        }
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for (x, row) in up.iter().enumerate() {
            for y in row.ones() {
                down[y].insert(x);
            }
        }
        Reach { up, down }
    }

    fn le(&self, x: usize, y: usize) -> bool {
        self.up[x].contains(y)
    }

    fn common_below(&self, x: usize, y: usize) -> bool {
        !self.down[x].is_disjoint(&self.down[y])
    }
}

fn oriented(premises: &[Formula], q: Quantifier) -> Vec<(usize, usize)> {
    premises
        .iter()
        .filter(|f| f.quantifier == q)
        .flat_map(|f| {
            let (s, p) = (f.subject.index(), f.predicate.index());
            if q.is_symmetric() {
                vec![(s, p), (p, s)]
            } else {
                vec![(s, p)]
            }
        })
        .collect()
}

/// Provability from a premise set by the closed forms of the seven types.
/// Independent of the prover; cross-checked against it and against model
/// search in the tests.
pub struct PatternOracle {
    n: usize,
    reach: Reach,
    e: Vec<(usize, usize)>,
    i: Vec<(usize, usize)>,
    o: Vec<(usize, usize)>,
}

impl PatternOracle {
    pub fn new(n: usize, premises: &[Formula]) -> PatternOracle {
        PatternOracle {
            n,
            reach: Reach::new(n, premises),
            e: oriented(premises, Quantifier::E),
            i: oriented(premises, Quantifier::I),
            o: oriented(premises, Quantifier::O),
        }
    }

    pub fn provable(&self, h: Formula) -> bool {
        let (b, c) = (h.subject.index(), h.predicate.index());
        if b >= self.n || c >= self.n {
            return false;
        }
        let r = &self.reach;
        match h.quantifier {
            Quantifier::A => r.le(b, c),
            Quantifier::E => self.e.iter().any(|&(u, v)| r.le(b, u) && r.le(c, v)),
            Quantifier::I => {
                r.common_below(b, c) || self.i.iter().any(|&(u, v)| r.le(u, b) && r.le(v, c))
            }
            Quantifier::O => {
                self.o.iter().any(|&(a, d)| r.le(a, b) && r.le(c, d))
                    || self
                        .e
                        .iter()
                        .any(|&(d, e)| r.le(c, d) && r.common_below(b, e))
                    || self.i.iter().any(|&(a, e)| {
                        r.le(a, b)
                            && self
                                .e
                                .iter()
                                .any(|&(d, f)| r.le(e, f) && r.le(c, d))
                    })
            }
        }
    }

    /// Every provable formula, as a bitset over the formula space.
    pub fn entailed(&self) -> FixedBitSet {
        let space = FormulaSpace::new(self.n);
        let mut out = FixedBitSet::with_capacity(space.size());
        for f in space.all() {
            if self.provable(f) {
                out.insert(space.index(f));
            }
        }
        out
    }
}

/// A-paths of a premise set, for reading premise sets off the patterns.
struct Paths<'a> {
    reach: &'a Reach,
    /// For each term, the A-premises entering it: (source, premise index).
    parents: Vec<Vec<(usize, u32)>>,
}

impl Paths<'_> {
    /// Premise indices of an A-path from `u` to `v` (`u ≤ v`).
    fn path(&self, u: usize, v: usize, out: &mut Vec<u32>) -> usize {
        let mut len = 0;
        let mut x = v;
        while x != u {
            let &(p, idx) = self.parents[x]
                .iter()
                .find(|&&(p, _)| self.reach.le(u, p))
                .expect("u reaches v");
            out.push(idx);
            x = p;
            len += 1;
        }
        len
    }
}

struct Candidate {
    ty: u8,
    set: Vec<u32>,
    chains: Vec<usize>,
}

/// Every minimal inference of `kb`, each conclusion once. A-paths are read
/// off the graph assuming they are unique, which non-redundancy guarantees.
pub fn enumerate_minimal(kb: &KnowledgeBase) -> Vec<MinimalInference> {
    enumerate_premises(kb.num_terms(), kb.formulas())
}

pub(crate) fn enumerate_premises(n: usize, premises: &[Formula]) -> Vec<MinimalInference> {
    let reach = Reach::new(n, premises);
    let mut parents = vec![Vec::new(); n];
    let mut e = Vec::new();
    let mut i = Vec::new();
    let mut o = Vec::new();
    for (idx, f) in premises.iter().enumerate() {
        let (s, p, idx) = (f.subject.index(), f.predicate.index(), idx as u32);
        match f.quantifier {
            Quantifier::A => parents[p].push((s, idx)),
            Quantifier::E => e.extend([(s, p, idx), (p, s, idx)]),
            Quantifier::I => i.extend([(s, p, idx), (p, s, idx)]),
            Quantifier::O => o.push((s, p, idx)),
        }
    }
    let paths = Paths {
        reach: &reach,
        parents,
    };
    let up = |x: usize| reach.up[x].ones().collect::<Vec<_>>();
    let down = |x: usize| reach.down[x].ones().collect::<Vec<_>>();
    let t = |x: usize| TermId(x as u32);
    let mut found: FxHashMap<Formula, Vec<Candidate>> = FxHashMap::default();
    let mut add = |conclusion: Formula, ty: u8, chains: &[(usize, usize)], extra: &[u32]| {
        let mut set = extra.to_vec();
        let lens = chains
            .iter()
            .map(|&(u, v)| paths.path(u, v, &mut set))
            .collect();
        set.sort_unstable();
        set.dedup();
        found.entry(conclusion).or_default().push(Candidate {
            ty,
            set,
            chains: lens,
        });
    };

    for a in 0..n {
        for b in up(a) {
            if b != a {
                add(Formula::a(t(a), t(b)), 2, &[(a, b)], &[]);
            }
        }
        let ups = up(a);
        for &b in &ups {
            for &c in &ups {
                if b < c {
                    add(Formula::i(t(b), t(c)), 4, &[(a, b), (a, c)], &[]);
                }
            }
        }
    }
    for &(a, d, idx) in &o {
        for b in up(a) {
            for c in down(d) {
                if b != c {
                    add(Formula::o(t(b), t(c)), 1, &[(a, b), (c, d)], &[idx]);
                }
            }
        }
    }
    for &(d, ee, idx) in &e {
        for c in down(d) {
            for a in down(ee) {
                for b in up(a) {
                    if b != c {
                        add(Formula::o(t(b), t(c)), 3, &[(a, b), (c, d), (a, ee)], &[idx]);
                    }
                }
            }
        }
        // Type 6 with E b d read as (b, d) = (d, ee) here.
        for a in down(d) {
            for c in down(ee) {
                if a < c {
                    add(Formula::e(t(a), t(c)), 6, &[(a, d), (c, ee)], &[idx]);
                }
            }
        }
    }
    for &(a, ee, iidx) in &i {
        for &(d, f, eidx) in &e {
            if reach.le(ee, f) {
                for b in up(a) {
                    for c in down(d) {
                        if b != c {
                            add(
                                Formula::o(t(b), t(c)),
                                5,
                                &[(a, b), (c, d), (ee, f)],
                                &[iidx, eidx],
                            );
                        }
                    }
                }
            }
        }
        // Type 7 with I a c read as (a, c) = (a, ee) here.
        for b in up(a) {
            for d in up(ee) {
                if b < d {
                    add(Formula::i(t(b), t(d)), 7, &[(a, b), (ee, d)], &[iidx]);
                }
            }
        }
    }

    let mut conclusions: Vec<Formula> = found.keys().copied().collect();
    conclusions.sort_unstable();
    let mut out = Vec::new();
    for h in conclusions {
        let mut cands = found.remove(&h).expect("listed conclusion");
        cands.sort_by(|x, y| (x.set.len(), &x.set, x.ty).cmp(&(y.set.len(), &y.set, y.ty)));
        let mut kept: Vec<Candidate> = Vec::new();
        for c in cands {
            let dominated = kept
                .iter()
                .any(|k| k.set == c.set || is_subset(&k.set, &c.set));
            if !dominated {
                kept.push(c);
            }
        }
        for k in kept {
            out.push(MinimalInference {
                syllogism_type: k.ty,
                premises: {
                    let mut p: Vec<Formula> = k.set.iter().map(|&i| premises[i as usize]).collect();
                    p.sort_unstable();
                    p
                },
                conclusion: h,
                chain_lengths: k.chains,
            });
        }
    }
    out
}

fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnswer {
    pub hypothesis: Formula,
    pub syllogism_type: u8,
    pub chain_length: usize,
    pub premise_selection: Vec<Formula>,
    /// `None` when the hypothesis needs no contradiction (types (i)/(ii)
    /// suffice), which covers every type (2) and (6) hypothesis.
    pub pbc_formula: Option<Formula>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GoldError {
    #[error("hypothesis {0:?} does not follow from the knowledge base")]
    NotDerivable(Formula),
    #[error("hypothesis {0:?} has {1} minimal premise sets (knowledge base is redundant)")]
    Ambiguous(Formula, usize),
}

/// Minimal inferences of one KB indexed by conclusion.
pub struct GoldIndex {
    n: usize,
    inferences: Vec<MinimalInference>,
    by_conclusion: BTreeMap<Formula, Vec<usize>>,
}

impl GoldIndex {
    pub fn new(kb: &KnowledgeBase) -> GoldIndex {
        GoldIndex::from_inferences(kb.num_terms(), enumerate_minimal(kb))
    }

    pub fn from_inferences(n: usize, inferences: Vec<MinimalInference>) -> GoldIndex {
        let mut by_conclusion: BTreeMap<Formula, Vec<usize>> = BTreeMap::new();
        for (i, inf) in inferences.iter().enumerate() {
            by_conclusion.entry(inf.conclusion).or_default().push(i);
        }
        GoldIndex {
            n,
            inferences,
            by_conclusion,
        }
    }

    pub fn inferences(&self) -> &[MinimalInference] {
        &self.inferences
    }

    /// Every hypothesis with a gold answer, both orientations of I and E.
    pub fn hypotheses(&self) -> Vec<Formula> {
        let mut hs: Vec<Formula> = self.inferences.iter().flat_map(|i| i.hypotheses()).collect();
        hs.sort_unstable();
        hs.dedup();
        hs
    }

    pub fn inference_for(&self, h: Formula) -> Result<&MinimalInference, GoldError> {
        match self.by_conclusion.get(&h.canonical()).map(Vec::as_slice) {
            None | Some([]) => Err(GoldError::NotDerivable(h)),
            Some([i]) => Ok(&self.inferences[*i]),
            Some(many) => Err(GoldError::Ambiguous(h, many.len())),
        }
    }

    pub fn gold(&self, h: Formula) -> Result<GoldAnswer, GoldError> {
        let inf = self.inference_for(h)?;
        Ok(GoldAnswer {
            hypothesis: h,
            syllogism_type: inf.syllogism_type,
            chain_length: chain_length_of(inf),
            premise_selection: inf.premises.clone(),
            pbc_formula: contradiction_hint(self.n, &inf.premises, h),
        })
    }
}

/// The contradiction formula for `h` under its own premise set, or `None`
/// when `h` is derivable without one.
pub fn contradiction_hint(n: usize, premises: &[Formula], h: Formula) -> Option<Formula> {
    let oracle = ProvabilityOracle::new(n, premises);
    if oracle.derivable(h) {
        return None;
    }
    oracle.contradiction_formula(h)
}

pub fn gold_for(kb: &KnowledgeBase, h: Formula) -> Result<GoldAnswer, GoldError> {
    GoldIndex::new(kb).gold(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_kb() -> KnowledgeBase {
        KnowledgeBase::from_toml(include_str!("../tests/fixtures/sample.kb")).unwrap()
    }

    fn fs(kb: &KnowledgeBase, lines: &[&str]) -> Vec<Formula> {
        let mut v: Vec<Formula> = lines.iter().map(|l| kb.parse(l).unwrap()).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn worked_examples_are_enumerated() {
        let kb = sample_kb();
        let idx = GoldIndex::new(&kb);
        let cases: [(&str, u8, &[&str]); 7] = [
            ("O x5 x1", 1, &["A x1 x2", "A x2 x3", "O x5 x3"]),
            ("A x6 x11", 2, &["A x6 x7", "A x7 x9", "A x9 x11"]),
            (
                "O x8 x2",
                3,
                &["A x2 x3", "A x3 x4", "A x7 x9", "A x9 x11", "A x7 x8", "E x4 x11"],
            ),
            ("I x10 x11", 4, &["A x7 x8", "A x8 x10", "A x7 x9", "A x9 x11"]),
            (
                "O x10 x6",
                5,
                &[
                    "A x1 x2", "A x2 x3", "A x3 x4", "A x6 x7", "A x7 x9", "A x9 x11", "A x8 x10",
                    "E x4 x11", "I x1 x8",
                ],
            ),
            (
                "E x6 x1",
                6,
                &["A x1 x2", "A x2 x3", "A x3 x4", "A x6 x7", "A x7 x9", "A x9 x11", "E x4 x11"],
            ),
            ("I x4 x10", 7, &["A x1 x2", "A x2 x3", "A x3 x4", "A x8 x10", "I x1 x8"]),
        ];
        for (h, ty, premises) in cases {
            let g = idx.gold(kb.parse(h).unwrap()).unwrap();
            assert_eq!(g.syllogism_type, ty, "{h}");
            assert_eq!(g.premise_selection, fs(&kb, premises), "{h}");
        }
        let counts = idx.inferences().iter().fold([0usize; 8], |mut c, i| {
            c[i.syllogism_type as usize] += 1;
            c
        });
        assert!(counts[1..].iter().all(|&c| c > 0), "{counts:?}");
    }

    #[test]
    fn chain_lengths() {
        let kb = sample_kb();
        let idx = GoldIndex::new(&kb);
        let a = idx.inference_for(kb.parse("A x6 x11").unwrap()).unwrap();
        assert_eq!(a.chain_lengths, vec![3]);
        assert_eq!(chain_length_of(a), 3);
        let i = idx.inference_for(kb.parse("I x10 x11").unwrap()).unwrap();
        assert_eq!(i.chain_lengths, vec![2, 2]);
        let o = idx.inference_for(kb.parse("O x5 x1").unwrap()).unwrap();
        assert_eq!(o.chain_lengths, vec![0, 2]);
        assert_eq!(chain_length_of(o), 2);
    }

    #[test]
    fn single_a_formula() {
        let kb = KnowledgeBase::from_symbolic("k", ["A a b"]).unwrap();
        let infs = enumerate_minimal(&kb);
        let a = kb.parse("A a b").unwrap();
        assert_eq!(infs.len(), 2);
        assert_eq!(infs[0].syllogism_type, 2);
        assert_eq!(infs[0].conclusion, a);
        assert_eq!(infs[1].syllogism_type, 4);
        assert_eq!(infs[1].chain_lengths, vec![0, 1]);
        let g = gold_for(&kb, kb.parse("I a b").unwrap()).unwrap();
        assert_eq!(g.pbc_formula, Some(kb.parse("I b a").unwrap()));
        // I b a follows by r4 directly.
        assert_eq!(gold_for(&kb, kb.parse("I b a").unwrap()).unwrap().pbc_formula, None);
        assert_eq!(
            gold_for(&kb, kb.parse("E a b").unwrap()),
            Err(GoldError::NotDerivable(kb.parse("E a b").unwrap()))
        );
    }

    #[test]
    fn no_extra_edges_means_only_a_and_i() {
        let kb = KnowledgeBase::from_symbolic("k", ["A a b", "A b c", "A a d"]).unwrap();
        assert!(enumerate_minimal(&kb)
            .iter()
            .all(|i| matches!(i.syllogism_type, 2 | 4)));
    }

    #[test]
    fn pattern_oracle_matches_enumeration_on_sample() {
        let kb = sample_kb();
        let oracle = PatternOracle::new(kb.num_terms(), kb.formulas());
        let idx = GoldIndex::new(&kb);
        let space = FormulaSpace::new(kb.num_terms());
        let mut hs = idx.hypotheses();
        hs.sort_unstable();
        let provable: Vec<Formula> = space.all().filter(|f| oracle.provable(*f)).collect();
        let mut provable = provable;
        provable.sort_unstable();
        assert_eq!(hs, provable);
    }
}
