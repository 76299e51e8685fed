//! Set-theoretic semantics: interpretations, truth evaluation, model search
//! and consistency.
//!
//! Terms denote non-empty subsets of a finite universe. A model is described
//! by its elements, each element being identified with the set of terms it
//! belongs to (its *profile*). A and E constrain every profile; I, O and
//! term non-emptiness each demand that some profile exists. That split gives
//! an exact polynomial consistency test (every existential demand has a valid
//! minimal profile) and an exhaustive bounded model search (assign demands to
//! at most `max_universe` profiles).

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use rand::Rng;
use thiserror::Error;

use crate::formula::{Formula, Quantifier, TermId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("term {0:?} is not assigned by the interpretation")]
    Unassigned(TermId),
    #[error("term {0:?} is assigned the empty set")]
    EmptyTerm(TermId),
}

/// Finite universe `0..universe` and a non-empty subset per assigned term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    universe: u32,
    assignment: BTreeMap<TermId, BTreeSet<u32>>,
}

impl Interpretation {
    pub fn new(
        universe: u32,
        assignment: BTreeMap<TermId, BTreeSet<u32>>,
    ) -> Result<Interpretation, SemanticsError> {
        for (t, set) in &assignment {
            if set.is_empty() {
                return Err(SemanticsError::EmptyTerm(*t));
            }
        }
        let assignment = assignment
            .into_iter()
            .map(|(t, s)| (t, s.into_iter().filter(|&e| e < universe).collect::<BTreeSet<_>>()))
            .collect::<BTreeMap<_, _>>();
        if let Some((t, _)) = assignment.iter().find(|(_, s)| s.is_empty()) {
            return Err(SemanticsError::EmptyTerm(*t));
        }
        Ok(Interpretation {
            universe,
            assignment,
        })
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    pub fn set(&self, t: TermId) -> Option<&BTreeSet<u32>> {
        self.assignment.get(&t)
    }

    pub fn assignment(&self) -> &BTreeMap<TermId, BTreeSet<u32>> {
        &self.assignment
    }

    fn from_profiles(terms: &[TermId], profiles: &[FixedBitSet]) -> Interpretation {
        let mut assignment: BTreeMap<TermId, BTreeSet<u32>> = BTreeMap::new();
        for (elem, p) in profiles.iter().enumerate() {
            for local in p.ones() {
                assignment.entry(terms[local]).or_default().insert(elem as u32);
            }
        }
        Interpretation {
            universe: profiles.len() as u32,
            assignment,
        }
    }
}

/// Truth of `f` under `m`.
pub fn evaluate(f: Formula, m: &Interpretation) -> Result<bool, SemanticsError> {
    let a = m.set(f.subject).ok_or(SemanticsError::Unassigned(f.subject))?;
    let b = m.set(f.predicate).ok_or(SemanticsError::Unassigned(f.predicate))?;
    Ok(match f.quantifier {
        Quantifier::A => a.is_subset(b),
        Quantifier::E => a.is_disjoint(b),
        Quantifier::I => !a.is_disjoint(b),
        Quantifier::O => !a.is_subset(b),
    })
}

/// True when every formula holds under `m`.
pub fn satisfies(fs: &[Formula], m: &Interpretation) -> Result<bool, SemanticsError> {
    for &f in fs {
        if !evaluate(f, m)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default universe bound: one element per distinct term plus one.
pub fn default_universe_bound(fs: &[Formula]) -> usize {
    Constraints::build(fs).terms.len() + 1
}

/// Exhaustive, deterministic search for a model with at most `max_universe`
/// elements. The empty formula set has the empty model.
pub fn find_model(fs: &[Formula], max_universe: usize) -> Option<Interpretation> {
    let c = Constraints::build(fs);
    if !c.consistent() {
        return None;
    }
    let demands = c.demands();
    let mut search = ModelSearch {
        c: &c,
        demands: &demands,
        blocks: Vec::new(),
        bound: max_universe,
    };
    if search.assign(0) {
        let profiles: Vec<FixedBitSet> = search.blocks.into_iter().map(|b| b.members).collect();
        Some(Interpretation::from_profiles(&c.terms, &profiles))
    } else {
        None
    }
}

/// Unbounded satisfiability, decided in polynomial time.
pub fn is_consistent(fs: &[Formula]) -> bool {
    Constraints::build(fs).consistent()
}

/// `fs ⊨ h`: no model of `fs` falsifies `h`.
pub fn entails(fs: &[Formula], h: Formula) -> bool {
    let mut with_neg = fs.to_vec();
    with_neg.push(h.negate());
    !is_consistent(&with_neg)
}

/// A random model of a consistent formula set: one element per existential
/// demand plus `extra` random elements whose profiles respect every A and E
/// constraint. Returns `None` when `fs` is inconsistent.
pub fn random_model<R: Rng>(fs: &[Formula], extra: usize, rng: &mut R) -> Option<Interpretation> {
    let c = Constraints::build(fs);
    if !c.consistent() {
        return None;
    }
    let mut profiles: Vec<FixedBitSet> = c.demands().into_iter().map(|d| d.min).collect();
    // Randomly fold demands together where the merge stays valid.
    let mut i = 0;
    while i < profiles.len() && profiles.len() > 1 {
        if rng.gen_bool(0.3) {
            let j = rng.gen_range(0..profiles.len());
            if j != i {
                let mut merged = profiles[i].clone();
                merged.union_with(&profiles[j]);
                // Merging may break an O demand; only keep merges that leave
                // every formula true, checked at the end.
                let mut candidate = profiles.clone();
                candidate[i] = merged;
                candidate.swap_remove(j);
                if c.profiles_satisfy(&candidate) {
                    profiles = candidate;
                    continue;
                }
            }
        }
        i += 1;
    }
    let n = c.terms.len();
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < extra * 20 + 20 && n > 0 {
        attempts += 1;
        let mut p = FixedBitSet::with_capacity(n);
        for t in 0..n {
            if rng.gen_bool(0.25) {
                p.union_with(&c.up[t]);
            }
        }
        if p.count_ones(..) > 0 && c.valid(&p) {
            profiles.push(p);
            added += 1;
        }
    }
    // Shuffle element order so element ids carry no structure.
    for k in (1..profiles.len()).rev() {
        let j = rng.gen_range(0..=k);
        profiles.swap(k, j);
    }
    Some(Interpretation::from_profiles(&c.terms, &profiles))
}

struct Demand {
    min: FixedBitSet,
    /// Local index of a term the profile must exclude (O demands).
    forbid: Option<usize>,
    /// Term whose non-emptiness this demand encodes.
    nonempty: Option<usize>,
}

struct Block {
    members: FixedBitSet,
    forbidden: FixedBitSet,
}

/// Formula set compiled over local dense term indices.
struct Constraints {
    terms: Vec<TermId>,
    /// `up[t]`: terms reachable from t along A edges, t included.
    up: Vec<FixedBitSet>,
    /// `disjoint[t]`: E neighbours of t (both orientations).
    disjoint: Vec<FixedBitSet>,
    overlaps: Vec<(usize, usize)>,
    outside: Vec<(usize, usize)>,
}

impl Constraints {
    fn build(fs: &[Formula]) -> Constraints {
        let mut terms: Vec<TermId> = fs.iter().flat_map(|f| f.terms()).collect();
        terms.sort();
        terms.dedup();
        let local = |t: TermId| terms.binary_search(&t).unwrap();
        let n = terms.len();
        let mut succ = vec![Vec::new(); n];
        let mut disjoint = vec![FixedBitSet::with_capacity(n); n];
        let mut overlaps = Vec::new();
        let mut outside = Vec::new();
        for f in fs {
            let (s, p) = (local(f.subject), local(f.predicate));
            match f.quantifier {
                Quantifier::A => succ[s].push(p),
                Quantifier::E => {
                    disjoint[s].insert(p);
                    disjoint[p].insert(s);
                }
                Quantifier::I => overlaps.push((s, p)),
                Quantifier::O => outside.push((s, p)),
            }
        }
        let mut up = Vec::with_capacity(n);
        for t in 0..n {
            let mut seen = FixedBitSet::with_capacity(n);
            seen.insert(t);
            let mut stack = vec![t];
            while let Some(x) = stack.pop() {
                for &y in &succ[x] {
                    if !seen.contains(y) {
                        seen.insert(y);
                        stack.push(y);
                    }
                }
            }
            up.push(seen);
        }
        Constraints {
            terms,
            up,
            disjoint,
            overlaps,
            outside,
        }
    }

    /// A profile is admissible when no two of its terms are declared disjoint.
    /// Profiles built as unions of `up` sets are closed under A by construction.
    fn valid(&self, p: &FixedBitSet) -> bool {
        p.ones().all(|t| self.disjoint[t].is_disjoint(p))
    }

    fn demands(&self) -> Vec<Demand> {
        let n = self.terms.len();
        let mut out = Vec::new();
        for &(a, b) in &self.overlaps {
            let mut min = self.up[a].clone();
            min.union_with(&self.up[b]);
            out.push(Demand {
                min,
                forbid: None,
                nonempty: None,
            });
        }
        for &(a, b) in &self.outside {
            out.push(Demand {
                min: self.up[a].clone(),
                forbid: Some(b),
                nonempty: None,
            });
        }
        for t in 0..n {
            out.push(Demand {
                min: self.up[t].clone(),
                forbid: None,
                nonempty: Some(t),
            });
        }
        out
    }

    fn consistent(&self) -> bool {
        self.demands().iter().all(|d| {
            self.valid(&d.min) && d.forbid.map_or(true, |b| !d.min.contains(b))
        })
    }

    /// Do these profiles, read as a model, make every compiled formula true?
    fn profiles_satisfy(&self, profiles: &[FixedBitSet]) -> bool {
        if !profiles.iter().all(|p| self.valid(p) && self.a_closed(p)) {
            return false;
        }
        let nonempty = (0..self.terms.len()).all(|t| profiles.iter().any(|p| p.contains(t)));
        let overlaps = self
            .overlaps
            .iter()
            .all(|&(a, b)| profiles.iter().any(|p| p.contains(a) && p.contains(b)));
        let outside = self
            .outside
            .iter()
            .all(|&(a, b)| profiles.iter().any(|p| p.contains(a) && !p.contains(b)));
        nonempty && overlaps && outside
    }

    fn a_closed(&self, p: &FixedBitSet) -> bool {
        p.ones().all(|t| self.up[t].is_subset(p))
    }
}

struct ModelSearch<'a> {
    c: &'a Constraints,
    demands: &'a [Demand],
    blocks: Vec<Block>,
    bound: usize,
}

impl ModelSearch<'_> {
    fn assign(&mut self, i: usize) -> bool {
        let Some(d) = self.demands.get(i) else {
            return true;
        };
        if let Some(t) = d.nonempty {
            if self.blocks.iter().any(|b| b.members.contains(t)) {
                return self.assign(i + 1);
            }
        }
        for j in 0..self.blocks.len() {
            let mut members = self.blocks[j].members.clone();
            members.union_with(&d.min);
            let mut forbidden = self.blocks[j].forbidden.clone();
            if let Some(b) = d.forbid {
                forbidden.insert(b);
            }
            if !self.c.valid(&members) || !members.is_disjoint(&forbidden) {
                continue;
            }
            let saved = std::mem::replace(&mut self.blocks[j], Block { members, forbidden });
            if self.assign(i + 1) {
                return true;
            }
            self.blocks[j] = saved;
        }
        if self.blocks.len() < self.bound {
            let n = self.c.terms.len();
            let mut forbidden = FixedBitSet::with_capacity(n);
            if let Some(b) = d.forbid {
                forbidden.insert(b);
            }
            if self.c.valid(&d.min) && d.min.is_disjoint(&forbidden) {
                self.blocks.push(Block {
                    members: d.min.clone(),
                    forbidden,
                });
                if self.assign(i + 1) {
                    return true;
                }
                self.blocks.pop();
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(i: u32) -> TermId {
        TermId(i)
    }

    fn interp(sets: &[(u32, &[u32])]) -> Interpretation {
        let universe = sets.iter().flat_map(|(_, s)| s.iter()).max().map_or(0, |m| m + 1);
        Interpretation::new(
            universe,
            sets.iter()
                .map(|(k, s)| (t(*k), s.iter().copied().collect()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn evaluates_the_four_clauses() {
        let m = interp(&[(0, &[1]), (1, &[1, 2])]);
        assert!(evaluate(Formula::a(t(0), t(1)), &m).unwrap());
        let m = interp(&[(0, &[1]), (1, &[1])]);
        assert!(!evaluate(Formula::e(t(0), t(1)), &m).unwrap());
        let m = interp(&[(0, &[1, 3]), (1, &[1, 2])]);
        assert!(evaluate(Formula::o(t(0), t(1)), &m).unwrap());
        assert!(evaluate(Formula::i(t(0), t(1)), &m).unwrap());
    }

    #[test]
    fn unassigned_term_is_an_error() {
        let m = interp(&[(0, &[1])]);
        assert_eq!(
            evaluate(Formula::a(t(0), t(7)), &m),
            Err(SemanticsError::Unassigned(t(7)))
        );
    }

    #[test]
    fn empty_sets_are_rejected() {
        let mut a = BTreeMap::new();
        a.insert(t(0), BTreeSet::new());
        assert_eq!(Interpretation::new(3, a), Err(SemanticsError::EmptyTerm(t(0))));
    }

    #[test]
    fn model_search_small_cases() {
        let fs = [Formula::a(t(0), t(1)), Formula::i(t(0), t(1))];
        let m = find_model(&fs, default_universe_bound(&fs)).unwrap();
        assert!(satisfies(&fs, &m).unwrap());

        let fs = [Formula::a(t(0), t(1)), Formula::o(t(0), t(1))];
        assert!(find_model(&fs, 10).is_none());
        assert!(!is_consistent(&fs));

        assert!(find_model(&[], 1).is_some());
        assert!(is_consistent(&[]));
    }

    #[test]
    fn bound_is_respected() {
        // Two terms, two separated I demands and an O on each side: needs 3 elements.
        let fs = [
            Formula::i(t(0), t(1)),
            Formula::o(t(0), t(1)),
            Formula::o(t(1), t(0)),
        ];
        assert!(find_model(&fs, 2).is_none());
        let m = find_model(&fs, 3).unwrap();
        assert!(satisfies(&fs, &m).unwrap());
        assert_eq!(m.universe(), 3);
    }

    #[test]
    fn existential_import_makes_a_entail_i() {
        assert!(entails(&[Formula::a(t(0), t(1))], Formula::i(t(0), t(1))));
        assert!(entails(&[Formula::a(t(0), t(1))], Formula::i(t(1), t(0))));
        assert!(!entails(&[Formula::a(t(0), t(1))], Formula::a(t(1), t(0))));
        assert!(entails(&[Formula::e(t(0), t(1))], Formula::o(t(0), t(1))));
    }

    #[test]
    fn random_models_satisfy_their_theory() {
        let fs = [
            Formula::a(t(0), t(1)),
            Formula::a(t(1), t(2)),
            Formula::e(t(2), t(3)),
            Formula::i(t(0), t(4)),
            Formula::o(t(4), t(3)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_model(&fs, 4, &mut rng).unwrap();
            assert!(satisfies(&fs, &m).unwrap());
        }
    }
}
