//! Proof trees, the four inference rules, and an independent checker.
//!
//! A proof is a trivial leaf (a premise), a rule node, or a contradiction
//! node whose positive branch is checked under the premises plus the negated
//! conclusion. The dump format is one node per line, two spaces of indent per
//! level:
//!
//! ```text
//! (iii) I x10 x11
//!   (ii) r3 E x11 x10
//!     (i) E x10 x11
//!   (i) I x11 x10
//! ```

use std::fmt;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, FormulaError, Quantifier, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// A a b, A b c ⊢ A a c
    R1,
    /// A a b, E b c ⊢ E a c
    R2,
    /// E b a ⊢ E a b
    R3,
    /// A b a ⊢ I a b
    R4,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::R1, Rule::R2, Rule::R3, Rule::R4];

    pub fn arity(self) -> usize {
        match self {
            Rule::R1 | Rule::R2 => 2,
            Rule::R3 | Rule::R4 => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Rule::R1 => "r1",
            Rule::R2 => "r2",
            Rule::R3 => "r3",
            Rule::R4 => "r4",
        }
    }

    pub fn from_tag(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.tag() == s)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Proof types (i), (ii) and (iii).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProofType {
    Trivial,
    RuleBased,
    Contradiction,
}

impl ProofType {
    pub fn tag(self) -> &'static str {
        match self {
            ProofType::Trivial => "(i)",
            ProofType::RuleBased => "(ii)",
            ProofType::Contradiction => "(iii)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Proof {
    Trivial(Formula),
    Rule {
        rule: Rule,
        premises: Vec<Proof>,
        conclusion: Formula,
    },
    /// `positive` proves some F under the ambient premises plus the negated
    /// conclusion; `negative` proves ¬F under the ambient premises.
    Contradiction {
        positive: Box<Proof>,
        negative: Box<Proof>,
        conclusion: Formula,
    },
}

impl Proof {
    pub fn conclusion(&self) -> Formula {
        match self {
            Proof::Trivial(f) => *f,
            Proof::Rule { conclusion, .. } | Proof::Contradiction { conclusion, .. } => *conclusion,
        }
    }

    pub fn proof_type(&self) -> ProofType {
        match self {
            Proof::Trivial(_) => ProofType::Trivial,
            Proof::Rule { .. } => ProofType::RuleBased,
            Proof::Contradiction { .. } => ProofType::Contradiction,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Proof::Trivial(_) => 1,
            Proof::Rule { premises, .. } => 1 + premises.iter().map(Proof::size).sum::<usize>(),
            Proof::Contradiction {
                positive, negative, ..
            } => 1 + positive.size() + negative.size(),
        }
    }

    pub fn count_rule_nodes(&self, rule: Rule) -> usize {
        match self {
            Proof::Trivial(_) => 0,
            Proof::Rule {
                rule: r, premises, ..
            } => {
                usize::from(*r == rule)
                    + premises.iter().map(|p| p.count_rule_nodes(rule)).sum::<usize>()
            }
            Proof::Contradiction {
                positive, negative, ..
            } => positive.count_rule_nodes(rule) + negative.count_rule_nodes(rule),
        }
    }

    /// Leaves of the tree, in dump order.
    pub fn leaves(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match p {
                Proof::Trivial(f) => out.push(*f),
                Proof::Rule { premises, .. } => stack.extend(premises.iter().rev()),
                Proof::Contradiction {
                    positive, negative, ..
                } => {
                    stack.push(negative);
                    stack.push(positive);
                }
            }
        }
        out
    }
}

/// A stored step of a search: `(premises, conclusion, proof type)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialProof {
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
    pub proof_type: ProofType,
    pub rule: Option<Rule>,
    /// Premise set the step was derived under.
    pub ambient: u32,
    /// For (iii) steps, the premise set that includes the negated conclusion.
    pub assumption: Option<u32>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error("{rule} takes {expected} premise(s), got {got}")]
    Arity {
        rule: Rule,
        expected: usize,
        got: usize,
    },
    #[error("no stored derivation for {0:?}")]
    Incomplete(Formula),
    #[error("line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// The conclusion of `rule` applied to `inputs`, or `None` when the schema
/// does not unify.
pub fn apply_rule(rule: Rule, inputs: &[Formula]) -> Result<Option<Formula>, ProofError> {
    if inputs.len() != rule.arity() {
        return Err(ProofError::Arity {
            rule,
            expected: rule.arity(),
            got: inputs.len(),
        });
    }
    use Quantifier::*;
    let out = match rule {
        Rule::R1 => {
            let (x, y) = (inputs[0], inputs[1]);
            (x.quantifier == A && y.quantifier == A && x.predicate == y.subject)
                .then(|| Formula::try_new(A, x.subject, y.predicate).ok())
                .flatten()
        }
        Rule::R2 => {
            let (x, y) = (inputs[0], inputs[1]);
            (x.quantifier == A && y.quantifier == E && x.predicate == y.subject)
                .then(|| Formula::try_new(E, x.subject, y.predicate).ok())
                .flatten()
        }
        Rule::R3 => (inputs[0].quantifier == E).then(|| inputs[0].converse()),
        Rule::R4 => (inputs[0].quantifier == A).then(|| Formula::i(inputs[0].predicate, inputs[0].subject)),
    };
    Ok(out)
}

/// True iff `p` is a proof of `hypothesis` from `kb`.
pub fn check_proof(p: &Proof, kb: &[Formula], hypothesis: Formula) -> bool {
    if p.conclusion() != hypothesis {
        return false;
    }
    let ambient: FxHashSet<Formula> = kb.iter().copied().collect();
    check_under(p, &ambient)
}

fn check_under(p: &Proof, ambient: &FxHashSet<Formula>) -> bool {
    match p {
        Proof::Trivial(f) => ambient.contains(f),
        Proof::Rule {
            rule,
            premises,
            conclusion,
        } => {
            let inputs: Vec<Formula> = premises.iter().map(Proof::conclusion).collect();
            matches!(apply_rule(*rule, &inputs), Ok(Some(c)) if c == *conclusion)
                && premises.iter().all(|q| check_under(q, ambient))
        }
        Proof::Contradiction {
            positive,
            negative,
            conclusion,
        } => {
            if positive.conclusion() != negative.conclusion().negate() {
                return false;
            }
            let mut assumed = ambient.clone();
            assumed.insert(conclusion.negate());
            check_under(negative, ambient) && check_under(positive, &assumed)
        }
    }
}

/// Indented text dump, one node per line.
pub fn dump_proof(p: &Proof, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    let mut stack = vec![(p, 0usize)];
    while let Some((node, depth)) = stack.pop() {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(node.proof_type().tag());
        out.push(' ');
        if let Proof::Rule { rule, .. } = node {
            out.push_str(rule.tag());
            out.push(' ');
        }
        out.push_str(&vocab.format(node.conclusion()));
        out.push('\n');
        match node {
            Proof::Trivial(_) => {}
            Proof::Rule { premises, .. } => {
                stack.extend(premises.iter().rev().map(|q| (q, depth + 1)));
            }
            Proof::Contradiction {
                positive, negative, ..
            } => {
                stack.push((negative, depth + 1));
                stack.push((positive, depth + 1));
            }
        }
    }
    out
}

/// Inverse of [`dump_proof`]. Terms must be known to `vocab`.
pub fn parse_proof(text: &str, vocab: &Vocabulary) -> Result<Proof, ProofError> {
    struct Line {
        no: usize,
        depth: usize,
        kind: ProofType,
        rule: Option<Rule>,
        formula: Formula,
    }
    let err = |no: usize, msg: String| ProofError::Dump { line: no, msg };
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let body = raw.trim_start_matches(' ');
        let indent = raw.len() - body.len();
        if indent % 2 != 0 {
            return Err(err(no, "odd indentation".into()));
        }
        let (tag, rest) = body
            .split_once(' ')
            .ok_or_else(|| err(no, "missing conclusion".into()))?;
        let (kind, rule, rest) = match tag {
            "(i)" => (ProofType::Trivial, None, rest),
            "(iii)" => (ProofType::Contradiction, None, rest),
            "(ii)" => {
                let (r, rest) = rest
                    .split_once(' ')
                    .ok_or_else(|| err(no, "missing rule tag".into()))?;
                let r = Rule::from_tag(r).ok_or_else(|| err(no, format!("unknown rule `{r}`")))?;
                (ProofType::RuleBased, Some(r), rest)
            }
            _ => return Err(err(no, format!("unknown proof tag `{tag}`"))),
        };
        let formula = vocab
            .parse(rest)
            .map_err(|e: FormulaError| err(no, e.to_string()))?;
        lines.push(Line {
            no,
            depth: indent / 2,
            kind,
            rule,
            formula,
        });
    }
    if lines.is_empty() {
        return Err(err(0, "empty proof".into()));
    }
    // Build bottom-up: children of a node are the following lines one level
    // deeper, up to the next line at its own depth or shallower.
    let mut built: Vec<Option<Proof>> = (0..lines.len()).map(|_| None).collect();
    for i in (0..lines.len()).rev() {
        let d = lines[i].depth;
        let mut kids = Vec::new();
        let mut j = i + 1;
        while j < lines.len() && lines[j].depth > d {
            if lines[j].depth == d + 1 {
                kids.push(j);
            } else if lines[j].depth > d + 1 && kids.is_empty() {
                return Err(err(lines[j].no, "indentation jumps more than one level".into()));
            }
            j += 1;
        }
        let mut take = |k: usize| built[k].take().expect("child built");
        let l = &lines[i];
        let node = match l.kind {
            ProofType::Trivial => {
                if !kids.is_empty() {
                    return Err(err(l.no, "trivial node has children".into()));
                }
                Proof::Trivial(l.formula)
            }
            ProofType::RuleBased => {
                let rule = l.rule.expect("rule tag parsed");
                if kids.len() != rule.arity() {
                    return Err(err(l.no, format!("{rule} expects {} children", rule.arity())));
                }
                Proof::Rule {
                    rule,
                    premises: kids.into_iter().map(&mut take).collect(),
                    conclusion: l.formula,
                }
            }
            ProofType::Contradiction => {
                if kids.len() != 2 {
                    return Err(err(l.no, "contradiction expects 2 children".into()));
                }
                Proof::Contradiction {
                    positive: Box::new(take(kids[0])),
                    negative: Box::new(take(kids[1])),
                    conclusion: l.formula,
                }
            }
        };
        built[i] = Some(node);
    }
    if lines[0].depth != 0 || lines.iter().skip(1).any(|l| l.depth == 0) {
        return Err(err(lines[0].no, "expected exactly one root".into()));
    }
    Ok(built[0].take().expect("root built"))
}
