//! Forward closure under the four rule schemas.
//!
//! This is the set of formulas reachable by trivial and rule-based proofs,
//! computed bottom-up. It gives a second, independent route to the prover's
//! `derive` (which searches top-down) and a fast decision procedure for the
//! generator, the enumerator and the assistants.

use crate::formula::{Formula, Quantifier, TermId};

/// Dense index space for all formulas over terms `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormulaSpace {
    n: usize,
}

impl FormulaSpace {
    pub fn new(n: usize) -> FormulaSpace {
        FormulaSpace { n }
    }

    pub fn terms(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        4 * self.n * self.n
    }

    pub fn contains(&self, f: Formula) -> bool {
        f.subject.index() < self.n && f.predicate.index() < self.n
    }

    pub fn index(&self, f: Formula) -> usize {
        (f.quantifier.index() * self.n + f.subject.index()) * self.n + f.predicate.index()
    }

    pub fn formula(&self, idx: usize) -> Formula {
        let p = idx % self.n;
        let s = (idx / self.n) % self.n;
        let q = Quantifier::ALL[idx / (self.n * self.n)];
        Formula::new(q, TermId(s as u32), TermId(p as u32))
    }

    /// Every well-formed formula, quantifier-major then subject then predicate.
    pub fn all(&self) -> impl Iterator<Item = Formula> + '_ {
        Quantifier::ALL.into_iter().flat_map(move |q| self.all_with(q))
    }

    pub fn all_with(&self, q: Quantifier) -> impl Iterator<Item = Formula> + '_ {
        (0..self.n).flat_map(move |s| {
            (0..self.n)
                .filter(move |&p| p != s)
                .map(move |p| Formula::new(q, TermId(s as u32), TermId(p as u32)))
        })
    }
}

/// Formulas derivable from a premise set with trivial and rule-based proofs.
#[derive(Clone, Debug)]
pub struct Closure {
    space: FormulaSpace,
    derivable: Vec<bool>,
}

impl Closure {
    /// Premises mentioning terms outside `0..n` are ignored.
    pub fn new(n: usize, premises: impl IntoIterator<Item = Formula>) -> Closure {
        let space = FormulaSpace::new(n);
        let mut derivable = vec![false; space.size()];
        let mut succ = vec![Vec::new(); n];
        let mut disjoint = Vec::new();
        for f in premises {
            if !space.contains(f) {
                continue;
            }
            derivable[space.index(f)] = true;
            match f.quantifier {
                Quantifier::A => succ[f.subject.index()].push(f.predicate.index()),
                Quantifier::E => disjoint.push((f.subject.index(), f.predicate.index())),
                _ => {}
            }
        }
        // reach[x * n + y]: a non-empty A-path leads from x to y.
        let mut reach = vec![false; n * n];
        for x in 0..n {
            let mut stack: Vec<usize> = succ[x].clone();
            while let Some(y) = stack.pop() {
                if reach[x * n + y] {
                    continue;
                }
                reach[x * n + y] = true;
                stack.extend(succ[y].iter().copied());
            }
        }
        let below = |x: usize| -> Vec<usize> { (0..n).filter(|&a| a == x || reach[a * n + x]).collect() };
        for x in 0..n {
            for y in 0..n {
                if x != y && reach[x * n + y] {
                    let (x, y) = (TermId(x as u32), TermId(y as u32));
                    derivable[space.index(Formula::a(x, y))] = true;
                    // r4: A y x gives I x y.
                    derivable[space.index(Formula::i(y, x))] = true;
                }
            }
        }
        // r2 and r3: shrink either side of a disjointness.
        for &(u, v) in &disjoint {
            let (bu, bv) = (below(u), below(v));
            for &a in &bu {
                for &c in &bv {
                    if a != c {
                        let (a, c) = (TermId(a as u32), TermId(c as u32));
                        derivable[space.index(Formula::e(a, c))] = true;
                        derivable[space.index(Formula::e(c, a))] = true;
                    }
                }
            }
        }
        Closure { space, derivable }
    }

    pub fn space(&self) -> FormulaSpace {
        self.space
    }

    pub fn contains(&self, f: Formula) -> bool {
        self.space.contains(f) && self.derivable[self.space.index(f)]
    }

    pub fn iter(&self) -> impl Iterator<Item = Formula> + '_ {
        self.derivable
            .iter()
            .enumerate()
            .filter(|(_, &d)| d)
            .map(|(i, _)| self.space.formula(i))
    }
}

/// Decides provability from `premises` exactly as the prover does: directly,
/// or by contradiction with some `F` derivable under `premises ∪ {¬h}` whose
/// negation is derivable under `premises`.
pub struct ProvabilityOracle {
    n: usize,
    premises: Vec<Formula>,
    base: Closure,
}

impl ProvabilityOracle {
    pub fn new(n: usize, premises: &[Formula]) -> ProvabilityOracle {
        ProvabilityOracle {
            n,
            premises: premises.to_vec(),
            base: Closure::new(n, premises.iter().copied()),
        }
    }

    pub fn closure(&self) -> &Closure {
        &self.base
    }

    pub fn assumption_closure(&self, h: Formula) -> Closure {
        Closure::new(
            self.n,
            self.premises.iter().copied().chain(std::iter::once(h.negate())),
        )
    }

    pub fn derivable(&self, h: Formula) -> bool {
        self.base.contains(h)
    }

    /// First formula, in quantifier order I, E, A, O and then by subject and
    /// predicate ascending, whose contradictory pair closes a proof by
    /// contradiction of `h` (one member derivable from the premises, the other
    /// from the premises plus `¬h`).
    pub fn contradiction_formula(&self, h: Formula) -> Option<Formula> {
        let assumed = self.assumption_closure(h);
        let space = FormulaSpace::new(self.n);
        let order = [Quantifier::I, Quantifier::E, Quantifier::A, Quantifier::O];
        let found = order
            .into_iter()
            .flat_map(|q| space.all_with(q).collect::<Vec<_>>())
            .find(|&f| {
                (self.base.contains(f) && assumed.contains(f.negate()))
                    || (self.base.contains(f.negate()) && assumed.contains(f))
            });
        found
    }

    pub fn provable(&self, h: Formula) -> bool {
        if !FormulaSpace::new(self.n).contains(h) {
            return false;
        }
        if self.base.contains(h) {
            return true;
        }
        let assumed = self.assumption_closure(h);
        let closes = assumed.iter().any(|f| self.base.contains(f.negate()));
        closes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(i: u32) -> TermId {
        TermId(i)
    }

    #[test]
    fn space_index_round_trip() {
        let s = FormulaSpace::new(5);
        for f in s.all() {
            assert_eq!(s.formula(s.index(f)), f);
        }
        assert_eq!(s.all().count(), 4 * 5 * 4);
    }

    #[test]
    fn chains_and_disjointness_propagate() {
        let c = Closure::new(
            4,
            [
                Formula::a(t(0), t(1)),
                Formula::a(t(1), t(2)),
                Formula::e(t(2), t(3)),
            ],
        );
        assert!(c.contains(Formula::a(t(0), t(2))));
        assert!(c.contains(Formula::i(t(2), t(0))));
        assert!(!c.contains(Formula::i(t(0), t(2))));
        assert!(c.contains(Formula::e(t(3), t(0))));
        assert!(c.contains(Formula::e(t(0), t(3))));
        assert!(!c.contains(Formula::a(t(2), t(0))));
    }

    #[test]
    fn i_symmetry_needs_contradiction() {
        let o = ProvabilityOracle::new(2, &[Formula::i(t(0), t(1))]);
        assert!(!o.derivable(Formula::i(t(1), t(0))));
        assert!(o.provable(Formula::i(t(1), t(0))));
    }

    #[test]
    fn a_gives_i_both_ways() {
        let o = ProvabilityOracle::new(2, &[Formula::a(t(0), t(1))]);
        let h = Formula::i(t(0), t(1));
        assert!(!o.derivable(h));
        assert!(o.provable(h));
        assert_eq!(o.contradiction_formula(h), Some(Formula::i(t(1), t(0))));
        assert!(!o.provable(Formula::e(t(0), t(1))));
    }
}
