//! The baseline prover: `derive` (proof types (i) and (ii)), `pbc` (type
//! (iii)) and `prove`, which tries them in that order.
//!
//! `derive` is a backward search over the rule heads with an explicit work
//! stack. Successful steps are memoized per premise set ("ambient") and
//! failures are cached. A failure observed while some ancestor goal was still
//! open is only provisional: it is stamped with the current generation and
//! discarded as soon as any new goal is proved. Once the open ancestor itself
//! fails, everything below it is promoted to a permanent failure.
//!
//! Candidate rules, middle terms and contradiction pairs are tried in an order
//! given by a keyed hash of `(seed, goal, candidate)`. A restricted vocabulary
//! therefore sees the same relative order as the full one.

use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closure::FormulaSpace;
use crate::formula::{Formula, Quantifier, TermId};
use crate::kb::KnowledgeBase;
use crate::proof::{PartialProof, Proof, ProofError, ProofType, Rule};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

pub type AmbientId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverConfig {
    pub seed: u64,
    /// Maximum number of `derive` invocations.
    pub budget: u64,
    pub failure_cache: bool,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            seed: 0,
            budget: DEFAULT_BUDGET,
            failure_cache: true,
        }
    }
}

impl ProverConfig {
    pub fn with_seed(seed: u64) -> ProverConfig {
        ProverConfig {
            seed,
            ..ProverConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Proved,
    #[serde(rename = "refuted-by-exhaustion")]
    Refuted,
    BudgetExceeded,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Proved => "proved",
            Outcome::Refuted => "refuted-by-exhaustion",
            Outcome::BudgetExceeded => "budget-exceeded",
        }
    }
}

/// Steps spent in each phase of a hybrid run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSteps {
    pub restricted_derive: u64,
    pub restricted_pbc: u64,
    pub fallback: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub hypothesis: Formula,
    pub outcome: Outcome,
    /// `derive` invocations, memo and cache hits included.
    pub steps: u64,
    pub pbc_pairs_tried: u64,
    pub seed: u64,
    pub wall_time: Duration,
    pub phases: Option<PhaseSteps>,
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("derive budget of {0} invocations exceeded")]
pub struct BudgetExceeded(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Unknown,
    Open(u32),
    Proved,
    Failed,
    Provisional { gen: u64, dep: u32 },
}

const NO_DEP: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Cand {
    prio: u64,
    rule: Rule,
    subs: [u32; 2],
    len: u8,
}

struct Frame {
    goal: u32,
    cands: Vec<Cand>,
    ci: usize,
    si: usize,
    min_dep: u32,
    mark: usize,
}

#[derive(Clone, Copy, Debug)]
struct Step {
    goal: u32,
    rule: Option<Rule>,
    subs: [u32; 2],
}

struct Contradiction {
    base: AmbientId,
    hypothesis: u32,
    formula: u32,
    assumed: AmbientId,
}

struct Ambient {
    premises: Vec<Formula>,
    member: FixedBitSet,
    vocab: Vec<TermId>,
    status: Vec<Status>,
    delta: Vec<u32>,
}

enum Call {
    Done(bool, u32),
    Pushed,
}

/// Everything one proof attempt accumulates: memoized steps, cached
/// failures, counters and the seed.
pub struct SearchState {
    config: ProverConfig,
    space: Option<FormulaSpace>,
    steps: u64,
    pbc_pairs_tried: u64,
    gen: u64,
    ambients: Vec<Ambient>,
    ambient_index: FxHashMap<(Vec<u32>, Vec<TermId>), AmbientId>,
    stack: Vec<Frame>,
    provisional: Vec<u32>,
    spare: Vec<Vec<Cand>>,
    log: Vec<(AmbientId, Step)>,
    contradictions: Vec<Contradiction>,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn formula_key(f: Formula) -> u64 {
    ((f.quantifier.index() as u64) << 42) | ((f.subject.0 as u64) << 21) | f.predicate.0 as u64
}

/// Seeded order key of `candidate` among the alternatives for `goal`.
fn priority(seed: u64, goal: Formula, candidate: u64) -> u64 {
    splitmix64(seed ^ splitmix64(formula_key(goal) ^ splitmix64(candidate)))
}

impl SearchState {
    pub fn new(config: ProverConfig) -> SearchState {
        SearchState {
            config,
            space: None,
            steps: 0,
            pbc_pairs_tried: 0,
            gen: 0,
            ambients: Vec::new(),
            ambient_index: FxHashMap::default(),
            stack: Vec::new(),
            provisional: Vec::new(),
            spare: Vec::new(),
            log: Vec::new(),
            contradictions: Vec::new(),
        }
    }

    pub fn config(&self) -> ProverConfig {
        self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn pbc_pairs_tried(&self) -> u64 {
        self.pbc_pairs_tried
    }

    fn space(&self) -> FormulaSpace {
        self.space.expect("no ambient registered")
    }

    /// Registers (or finds) the premise set `premises` over `n` terms, with
    /// `vocab` as the middle terms rule search may introduce.
    pub fn ambient(&mut self, n: usize, premises: &[Formula], vocab: &[TermId]) -> AmbientId {
        let space = *self.space.get_or_insert(FormulaSpace::new(n));
        assert_eq!(space.terms(), n, "one search state serves one term space");
        let mut key: Vec<u32> = premises
            .iter()
            .filter(|f| space.contains(**f))
            .map(|f| space.index(*f) as u32)
            .collect();
        key.sort_unstable();
        key.dedup();
        let mut vocab: Vec<TermId> = vocab.iter().copied().filter(|t| t.index() < n).collect();
        vocab.sort_unstable();
        vocab.dedup();
        if let Some(&id) = self.ambient_index.get(&(key.clone(), vocab.clone())) {
            return id;
        }
        let mut member = FixedBitSet::with_capacity(space.size());
        for &i in &key {
            member.insert(i as usize);
        }
        let id = self.ambients.len() as AmbientId;
        self.ambients.push(Ambient {
            premises: key.iter().map(|&i| space.formula(i as usize)).collect(),
            member,
            vocab: vocab.clone(),
            status: vec![Status::Unknown; space.size()],
            delta: vec![NONE; space.size()],
        });
        self.ambient_index.insert((key, vocab), id);
        id
    }

    /// The ambient for a whole KB, with all of its terms as vocabulary.
    pub fn kb_ambient(&mut self, kb: &KnowledgeBase) -> AmbientId {
        let terms: Vec<TermId> = kb.terms().collect();
        self.ambient(kb.num_terms(), kb.formulas(), &terms)
    }

    /// `ambient` plus one extra premise, same vocabulary.
    pub fn extend_ambient(&mut self, ambient: AmbientId, extra: Formula) -> AmbientId {
        let a = &self.ambients[ambient as usize];
        let mut premises = a.premises.clone();
        premises.push(extra);
        let vocab = a.vocab.clone();
        let n = self.space().terms();
        self.ambient(n, &premises, &vocab)
    }

    pub fn premises(&self, ambient: AmbientId) -> &[Formula] {
        &self.ambients[ambient as usize].premises
    }

    pub fn vocab(&self, ambient: AmbientId) -> &[TermId] {
        &self.ambients[ambient as usize].vocab
    }

    /// Derivation: true iff `h` follows from the ambient premises by proof
    /// types (i) and (ii).
    pub fn derive(&mut self, ambient: AmbientId, h: Formula) -> Result<bool, BudgetExceeded> {
        debug_assert!(self.stack.is_empty());
        if !self.space().contains(h) {
            self.tick()?;
            return Ok(false);
        }
        let goal = self.space().index(h) as u32;
        let mut ret = match self.call(ambient, goal)? {
            Call::Done(ok, _) => return Ok(ok),
            Call::Pushed => None,
        };
        let a = ambient as usize;
        loop {
            let top = self.stack.last_mut().expect("open frame");
            if let Some((ok, dep)) = ret.take() {
                if ok {
                    top.si += 1;
                } else {
                    top.min_dep = top.min_dep.min(dep);
                    top.ci += 1;
                    top.si = 0;
                }
            }
            if top.ci < top.cands.len() && top.si == top.cands[top.ci].len as usize {
                let c = top.cands[top.ci];
                let frame = self.stack.pop().expect("open frame");
                let step = Step {
                    goal: frame.goal,
                    rule: Some(c.rule),
                    subs: c.subs,
                };
                self.spare.push(frame.cands);
                let amb = &mut self.ambients[a];
                amb.status[frame.goal as usize] = Status::Proved;
                amb.delta[frame.goal as usize] = self.log.len() as u32;
                self.log.push((ambient, step));
                self.gen += 1;
                if self.stack.is_empty() {
                    return Ok(true);
                }
                ret = Some((true, NO_DEP));
                continue;
            }
            if top.ci == top.cands.len() {
                let frame = self.stack.pop().expect("open frame");
                let depth = self.stack.len() as u32;
                self.spare.push(frame.cands);
                self.fail(a, frame.goal, depth, frame.min_dep, frame.mark);
                if self.stack.is_empty() {
                    return Ok(false);
                }
                ret = Some((false, frame.min_dep));
                continue;
            }
            let sub = top.cands[top.ci].subs[top.si];
            match self.call(ambient, sub)? {
                Call::Done(ok, dep) => ret = Some((ok, dep)),
                Call::Pushed => ret = None,
            }
        }
    }

    fn fail(&mut self, a: usize, goal: u32, depth: u32, min_dep: u32, mark: usize) {
        if !self.config.failure_cache {
            self.ambients[a].status[goal as usize] = Status::Unknown;
            return;
        }
        let gen = self.gen;
        if min_dep >= depth {
            // Nothing below depended on a goal that is still open.
            let status = &mut self.ambients[a].status;
            for &g in &self.provisional[mark..] {
                if matches!(status[g as usize], Status::Provisional { gen: s, .. } if s == gen) {
                    status[g as usize] = Status::Failed;
                }
            }
            self.provisional.truncate(mark);
            status[goal as usize] = Status::Failed;
        } else {
            let status = &mut self.ambients[a].status;
            for &g in &self.provisional[mark..] {
                if let Status::Provisional { gen: s, dep } = &mut status[g as usize] {
                    if *s == gen && *dep >= depth {
                        *dep = min_dep;
                    }
                }
            }
            status[goal as usize] = Status::Provisional { gen, dep: min_dep };
            self.provisional.push(goal);
        }
    }

    fn tick(&mut self) -> Result<(), BudgetExceeded> {
        if self.steps >= self.config.budget {
            self.abort();
            return Err(BudgetExceeded(self.config.budget));
        }
        self.steps += 1;
        Ok(())
    }

    fn abort(&mut self) {
        for frame in std::mem::take(&mut self.stack) {
            for amb in &mut self.ambients {
                if matches!(amb.status[frame.goal as usize], Status::Open(_)) {
                    amb.status[frame.goal as usize] = Status::Unknown;
                }
            }
        }
        self.provisional.clear();
        // Provisional failures may rest on the abandoned frames.
        self.gen += 1;
    }

    fn call(&mut self, ambient: AmbientId, goal: u32) -> Result<Call, BudgetExceeded> {
        self.tick()?;
        let a = ambient as usize;
        let gen = self.gen;
        let amb = &mut self.ambients[a];
        let g = goal as usize;
        if amb.member.contains(g) {
            if amb.delta[g] == NONE {
                amb.delta[g] = self.log.len() as u32;
                self.log.push((
                    ambient,
                    Step {
                        goal,
                        rule: None,
                        subs: [NONE; 2],
                    },
                ));
            }
            return Ok(Call::Done(true, NO_DEP));
        }
        match amb.status[g] {
            Status::Proved => return Ok(Call::Done(true, NO_DEP)),
            Status::Failed => return Ok(Call::Done(false, NO_DEP)),
            Status::Open(d) => return Ok(Call::Done(false, d)),
            Status::Provisional { gen: s, dep } if s == gen => return Ok(Call::Done(false, dep)),
            _ => {}
        }
        let cands = self.candidates(a, goal);
        if cands.is_empty() {
            self.spare.push(cands);
            let amb = &mut self.ambients[a];
            amb.status[g] = if self.config.failure_cache {
                Status::Failed
            } else {
                Status::Unknown
            };
            return Ok(Call::Done(false, NO_DEP));
        }
        let depth = self.stack.len() as u32;
        self.ambients[a].status[g] = Status::Open(depth);
        self.stack.push(Frame {
            goal,
            cands,
            ci: 0,
            si: 0,
            min_dep: NO_DEP,
            mark: self.provisional.len(),
        });
        Ok(Call::Pushed)
    }

    /// Backward rule applications for `goal`, in seeded order.
    fn candidates(&mut self, a: usize, goal: u32) -> Vec<Cand> {
        let space = self.space();
        let seed = self.config.seed;
        let mut out = self.spare.pop().unwrap_or_default();
        out.clear();
        let h = space.formula(goal as usize);
        let (s, p) = (h.subject, h.predicate);
        let idx = |f: Formula| space.index(f) as u32;
        let vocab = &self.ambients[a].vocab;
        match h.quantifier {
            Quantifier::A => {
                for &m in vocab {
                    if m != s && m != p {
                        out.push(Cand {
                            prio: priority(seed, h, 1 << 32 | m.0 as u64),
                            rule: Rule::R1,
                            subs: [idx(Formula::a(s, m)), idx(Formula::a(m, p))],
                            len: 2,
                        });
                    }
                }
            }
            Quantifier::E => {
                for &m in vocab {
                    if m != s && m != p {
                        out.push(Cand {
                            prio: priority(seed, h, 2 << 32 | m.0 as u64),
                            rule: Rule::R2,
                            subs: [idx(Formula::a(s, m)), idx(Formula::e(m, p))],
                            len: 2,
                        });
                    }
                }
                out.push(Cand {
                    prio: priority(seed, h, 3 << 32),
                    rule: Rule::R3,
                    subs: [idx(Formula::e(p, s)), NONE],
                    len: 1,
                });
            }
            Quantifier::I => out.push(Cand {
                prio: priority(seed, h, 4 << 32),
                rule: Rule::R4,
                subs: [idx(Formula::a(p, s)), NONE],
                len: 1,
            }),
            Quantifier::O => {}
        }
        out.sort_unstable_by_key(|c| (c.prio, c.subs));
        out
    }

    /// Proof by contradiction over the pairs `(F, ¬F)` with `F` ranging over the
    /// vocabulary of `base`: `derive(¬F, base)` then `derive(F, base ∪ {¬h})`.
    /// Formulas in `first` are tried before the seeded order. Returns the
    /// closing `F`.
    pub fn pbc(
        &mut self,
        base: AmbientId,
        h: Formula,
        first: &[Formula],
    ) -> Result<Option<Formula>, BudgetExceeded> {
        let space = self.space();
        if !space.contains(h) {
            return Ok(None);
        }
        let assumed = self.extend_ambient(base, h.negate());
        let seed = self.config.seed;
        let hkey = formula_key(h);
        let vocab = self.ambients[base as usize].vocab.clone();
        let mut pairs: Vec<(u64, Formula)> = Vec::with_capacity(4 * vocab.len() * vocab.len());
        for q in Quantifier::ALL {
            for &s in &vocab {
                for &p in &vocab {
                    if s != p {
                        let f = Formula::new(q, s, p);
                        if !first.contains(&f) {
                            pairs.push((priority(seed, f, hkey), f));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        let mut tried_first = Vec::new();
        let hinted = first.iter().copied().filter(|f| {
            let fresh = space.contains(*f) && !tried_first.contains(f);
            tried_first.push(*f);
            fresh
        });
        let order: Vec<Formula> = hinted.chain(pairs.into_iter().map(|(_, f)| f)).collect();
        for f in order {
            self.pbc_pairs_tried += 1;
            if self.derive(base, f.negate())? && self.derive(assumed, f)? {
                self.contradictions.push(Contradiction {
                    base,
                    hypothesis: space.index(h) as u32,
                    formula: space.index(f) as u32,
                    assumed,
                });
                return Ok(Some(f));
            }
        }
        Ok(None)
    }

    /// True iff `h` was derived (types (i)/(ii)) under `ambient`.
    pub fn is_derived(&self, ambient: AmbientId, h: Formula) -> bool {
        let space = self.space();
        space.contains(h) && self.ambients[ambient as usize].delta[space.index(h)] != NONE
    }

    /// Rebuilds the proof of `h` under `ambient` from the stored steps.
    pub fn proof_of(&self, ambient: AmbientId, h: Formula) -> Result<Proof, ProofError> {
        let space = self.space();
        if !space.contains(h) {
            return Err(ProofError::Incomplete(h));
        }
        if self.is_derived(ambient, h) {
            return self.derived_proof(ambient, h);
        }
        let hi = space.index(h) as u32;
        let c = self
            .contradictions
            .iter()
            .find(|c| c.base == ambient && c.hypothesis == hi)
            .ok_or(ProofError::Incomplete(h))?;
        let f = space.formula(c.formula as usize);
        Ok(Proof::Contradiction {
            positive: Box::new(self.derived_proof(c.assumed, f)?),
            negative: Box::new(self.derived_proof(c.base, f.negate())?),
            conclusion: h,
        })
    }

    fn derived_proof(&self, ambient: AmbientId, h: Formula) -> Result<Proof, ProofError> {
        let space = self.space();
        let amb = &self.ambients[ambient as usize];
        let entry = |f: Formula| -> Result<Step, ProofError> {
            match amb.delta.get(space.index(f)) {
                Some(&i) if i != NONE => Ok(self.log[i as usize].1),
                _ => Err(ProofError::Incomplete(f)),
            }
        };
        build_tree(h, |f| {
            let step = entry(f)?;
            Ok(step.rule.map(|r| {
                let subs = step.subs[..r.arity()]
                    .iter()
                    .map(|&i| space.formula(i as usize))
                    .collect();
                (r, subs)
            }))
        })
    }

    /// Δ as a list of partial proofs, in insertion order.
    pub fn delta(&self) -> Vec<PartialProof> {
        let Some(space) = self.space else {
            return Vec::new();
        };
        let mut out: Vec<PartialProof> = self
            .log
            .iter()
            .map(|&(ambient, step)| PartialProof {
                premises: match step.rule {
                    None => Vec::new(),
                    Some(r) => step.subs[..r.arity()]
                        .iter()
                        .map(|&i| space.formula(i as usize))
                        .collect(),
                },
                conclusion: space.formula(step.goal as usize),
                proof_type: if step.rule.is_some() {
                    ProofType::RuleBased
                } else {
                    ProofType::Trivial
                },
                rule: step.rule,
                ambient,
                assumption: None,
            })
            .collect();
        out.extend(self.contradictions.iter().map(|c| {
            let f = space.formula(c.formula as usize);
            PartialProof {
                premises: vec![f, f.negate()],
                conclusion: space.formula(c.hypothesis as usize),
                proof_type: ProofType::Contradiction,
                rule: None,
                ambient: c.base,
                assumption: Some(c.assumed),
            }
        }));
        out
    }
}

/// Builds a proof tree top-down; `step(f)` returns `None` for a leaf or the
/// rule and premises that concluded `f`.
fn build_tree(
    h: Formula,
    mut step: impl FnMut(Formula) -> Result<Option<(Rule, Vec<Formula>)>, ProofError>,
) -> Result<Proof, ProofError> {
    enum Work {
        Visit(Formula),
        Build(Rule, Formula),
    }
    let mut work = vec![Work::Visit(h)];
    let mut done: Vec<Proof> = Vec::new();
    while let Some(w) = work.pop() {
        match w {
            Work::Visit(f) => match step(f)? {
                None => done.push(Proof::Trivial(f)),
                Some((rule, subs)) => {
                    work.push(Work::Build(rule, f));
                    work.extend(subs.into_iter().rev().map(Work::Visit));
                }
            },
            Work::Build(rule, f) => {
                let premises = done.split_off(done.len() - rule.arity());
                done.push(Proof::Rule {
                    rule,
                    premises,
                    conclusion: f,
                });
            }
        }
    }
    Ok(done.pop().expect("root built"))
}

/// Rebuilds the proof of `h` under `ambient` from a list of partial proofs.
pub fn get_steps(h: Formula, ambient: u32, delta: &[PartialProof]) -> Result<Proof, ProofError> {
    let mut derived: FxHashMap<(u32, Formula), &PartialProof> = FxHashMap::default();
    let mut contra: FxHashMap<(u32, Formula), &PartialProof> = FxHashMap::default();
    for p in delta {
        let map = if p.proof_type == ProofType::Contradiction {
            &mut contra
        } else {
            &mut derived
        };
        map.entry((p.ambient, p.conclusion)).or_insert(p);
    }
    let under = |amb: u32, f: Formula| {
        build_tree(f, |g| {
            let p = derived.get(&(amb, g)).ok_or(ProofError::Incomplete(g))?;
            Ok(p.rule.map(|r| (r, p.premises.clone())))
        })
    };
    if derived.contains_key(&(ambient, h)) {
        return under(ambient, h);
    }
    let c = contra.get(&(ambient, h)).ok_or(ProofError::Incomplete(h))?;
    let (f, nf) = (c.premises[0], c.premises[1]);
    let assumed = c.assumption.ok_or(ProofError::Incomplete(h))?;
    Ok(Proof::Contradiction {
        positive: Box::new(under(assumed, f)?),
        negative: Box::new(under(ambient, nf)?),
        conclusion: h,
    })
}

/// Full search: `derive`, then `pbc`, over the whole KB.
pub fn prove(h: Formula, kb: &KnowledgeBase, state: &mut SearchState) -> (Option<Proof>, StepReport) {
    let start = Instant::now();
    let (steps0, pairs0) = (state.steps, state.pbc_pairs_tried);
    let base = state.kb_ambient(kb);
    let result = run_algorithm1(state, base, h, &[]);
    let (proof, outcome) = finish(state, base, h, result);
    let report = StepReport {
        hypothesis: h,
        outcome,
        steps: state.steps - steps0,
        pbc_pairs_tried: state.pbc_pairs_tried - pairs0,
        seed: state.config.seed,
        wall_time: start.elapsed(),
        phases: None,
    };
    (proof, report)
}

pub(crate) fn run_algorithm1(
    state: &mut SearchState,
    base: AmbientId,
    h: Formula,
    first: &[Formula],
) -> Result<bool, BudgetExceeded> {
    Ok(state.derive(base, h)? || state.pbc(base, h, first)?.is_some())
}

pub(crate) fn finish(
    state: &SearchState,
    base: AmbientId,
    h: Formula,
    result: Result<bool, BudgetExceeded>,
) -> (Option<Proof>, Outcome) {
    match result {
        Ok(true) => {
            let proof = state
                .proof_of(base, h)
                .expect("a successful search leaves a complete derivation");
            (Some(proof), Outcome::Proved)
        }
        Ok(false) => (None, Outcome::Refuted),
        Err(_) => (None, Outcome::BudgetExceeded),
    }
}
