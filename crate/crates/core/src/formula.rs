//! Syllogistic syntax: quantifiers, terms, formulas and A-chains.
//!
//! A formula is a quantifier applied to an ordered pair of distinct terms.
//! Its symbolic text form is `<Q> <subject> <predicate>`, e.g. `A x1 x2`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the four syllogistic quantifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantifier {
    /// All X are Y.
    A,
    /// No X are Y.
    E,
    /// Some X are Y.
    I,
    /// Some X are not Y.
    O,
}

impl Quantifier {
    pub const ALL: [Quantifier; 4] = [Quantifier::A, Quantifier::E, Quantifier::I, Quantifier::O];

    /// The contradictory quantifier: A/O and E/I.
    pub fn negate(self) -> Quantifier {
        match self {
            Quantifier::A => Quantifier::O,
            Quantifier::O => Quantifier::A,
            Quantifier::E => Quantifier::I,
            Quantifier::I => Quantifier::E,
        }
    }

    /// I and E formulas mean the same thing in either orientation.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Quantifier::E | Quantifier::I)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Quantifier::A => 'A',
            Quantifier::E => 'E',
            Quantifier::I => 'I',
            Quantifier::O => 'O',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Quantifier> {
        match s {
            "A" => Some(Quantifier::A),
            "E" => Some(Quantifier::E),
            "I" => Some(Quantifier::I),
            "O" => Some(Quantifier::O),
            _ => None,
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Opaque term identifier. Ordering is numeric and total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("subject and predicate must differ (got {0:?} twice)")]
    SameTerm(TermId),
    #[error("malformed formula `{0}`: expected `<Q> <term> <term>`")]
    Malformed(String),
    #[error("unknown quantifier `{0}`")]
    UnknownQuantifier(String),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("A-chain needs at least two distinct terms")]
    ShortChain,
    #[error("A-chain repeats term {0:?}")]
    RepeatedChainTerm(TermId),
}

/// A well-formed syllogistic formula. Subject and predicate always differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Formula {
    pub quantifier: Quantifier,
    pub subject: TermId,
    pub predicate: TermId,
}

impl Formula {
    pub fn try_new(
        quantifier: Quantifier,
        subject: TermId,
        predicate: TermId,
    ) -> Result<Formula, FormulaError> {
        if subject == predicate {
            return Err(FormulaError::SameTerm(subject));
        }
        Ok(Formula {
            quantifier,
            subject,
            predicate,
        })
    }

    /// Panics when `subject == predicate`.
    pub fn new(quantifier: Quantifier, subject: TermId, predicate: TermId) -> Formula {
        Formula::try_new(quantifier, subject, predicate).expect("ill-formed formula")
    }

    pub fn a(subject: TermId, predicate: TermId) -> Formula {
        Formula::new(Quantifier::A, subject, predicate)
    }

    pub fn e(subject: TermId, predicate: TermId) -> Formula {
        Formula::new(Quantifier::E, subject, predicate)
    }

    pub fn i(subject: TermId, predicate: TermId) -> Formula {
        Formula::new(Quantifier::I, subject, predicate)
    }

    pub fn o(subject: TermId, predicate: TermId) -> Formula {
        Formula::new(Quantifier::O, subject, predicate)
    }

    /// Contradictory formula over the same ordered terms.
    pub fn negate(self) -> Formula {
        Formula {
            quantifier: self.quantifier.negate(),
            ..self
        }
    }

    /// Same quantifier, swapped terms.
    pub fn converse(self) -> Formula {
        Formula {
            quantifier: self.quantifier,
            subject: self.predicate,
            predicate: self.subject,
        }
    }

    /// For I/E the orientation with the smaller subject; A/O unchanged.
    pub fn canonical(self) -> Formula {
        if self.quantifier.is_symmetric() && self.predicate < self.subject {
            self.converse()
        } else {
            self
        }
    }

    pub fn is_canonical(self) -> bool {
        self.canonical() == self
    }

    pub fn terms(self) -> [TermId; 2] {
        [self.subject, self.predicate]
    }

    pub fn mentions(self, t: TermId) -> bool {
        self.subject == t || self.predicate == t
    }
}

/// A path of A-formulas `A t0 t1, A t1 t2, ...` over pairwise distinct terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AChain {
    terms: Vec<TermId>,
}

impl AChain {
    pub fn new(terms: Vec<TermId>) -> Result<AChain, FormulaError> {
        if terms.len() < 2 {
            return Err(FormulaError::ShortChain);
        }
        let mut seen = terms.clone();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(FormulaError::RepeatedChainTerm(w[0]));
        }
        Ok(AChain { terms })
    }

    pub fn terms(&self) -> &[TermId] {
        &self.terms
    }

    /// Number of A-formulas in the chain.
    pub fn len(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> TermId {
        self.terms[0]
    }

    pub fn last(&self) -> TermId {
        *self.terms.last().unwrap()
    }

    pub fn formulas(&self) -> impl Iterator<Item = Formula> + '_ {
        self.terms.windows(2).map(|w| Formula::a(w[0], w[1]))
    }
}

/// Bidirectional mapping between term names and ids. Ids are dense and
/// assigned in interning order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn new() -> Vocabulary {
        Vocabulary::default()
    }

    pub fn from_names<I, S>(names: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary::new();
        for n in names {
            v.intern(n);
        }
        v
    }

    pub fn intern(&mut self, name: impl Into<String>) -> TermId {
        let name = name.into();
        if let Some(&id) = self.index.get(&name) {
            return id;
        }
        let id = TermId(self.names.len() as u32);
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn get(&self, name: &str) -> Option<TermId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: TermId) -> &str {
        &self.names[id.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = TermId> {
        (0..self.names.len() as u32).map(TermId)
    }

    pub fn contains(&self, id: TermId) -> bool {
        id.index() < self.names.len()
    }

    /// Symbolic text form, e.g. `O x5 x1`.
    pub fn format(&self, f: Formula) -> String {
        format!(
            "{} {} {}",
            f.quantifier,
            self.name(f.subject),
            self.name(f.predicate)
        )
    }

    /// Parses `<Q> <term> <term>` against known terms only.
    pub fn parse(&self, text: &str) -> Result<Formula, FormulaError> {
        let (q, s, p) = split_symbolic(text)?;
        let s = self.get(s).ok_or_else(|| FormulaError::UnknownTerm(s.to_string()))?;
        let p = self.get(p).ok_or_else(|| FormulaError::UnknownTerm(p.to_string()))?;
        Formula::try_new(q, s, p)
    }

    /// Parses `<Q> <term> <term>`, interning unseen terms.
    pub fn parse_interning(&mut self, text: &str) -> Result<Formula, FormulaError> {
        let (q, s, p) = split_symbolic(text)?;
        let s = self.intern(s);
        let p = self.intern(p);
        Formula::try_new(q, s, p)
    }
}

fn split_symbolic(text: &str) -> Result<(Quantifier, &str, &str), FormulaError> {
    let mut parts = text.split_whitespace();
    let (Some(q), Some(s), Some(p), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(FormulaError::Malformed(text.to_string()));
    };
    let q = Quantifier::from_symbol(q).ok_or_else(|| FormulaError::UnknownQuantifier(q.to_string()))?;
    Ok((q, s, p))
}
