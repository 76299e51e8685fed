use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{dedup, Assistant, ContradictionHint, HintError, HintSource, OracleAssistant, PremiseHint};
use crate::closure::Closure;
use crate::formula::{Formula, Quantifier, TermId};
use crate::inference::GoldError;
use crate::kb::KnowledgeBase;
use crate::prover::splitmix64;

/// How often a simulated assistant is right, and what its mistakes look like.
///
/// A premise answer is exact with probability `premise_accuracy`, padded
/// with unnecessary KB premises with probability `padding_rate`, and wrong
/// otherwise. The three validity rates describe wrong answers only: both
/// hypothesis terms appear, every premise is in the KB, every term is in the
/// KB vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub premise_accuracy: f64,
    pub pbc_accuracy: f64,
    #[serde(default)]
    pub padding_rate: f64,
    #[serde(default)]
    pub extra_premise_mean: f64,
    #[serde(default)]
    pub extra_premise_sd: f64,
    pub term_overlap_rate: f64,
    pub premise_validity_rate: f64,
    pub term_validity_rate: f64,
    #[serde(with = "crate::kb::u64_str")]
    pub seed: u64,
}

impl NoiseProfile {
    /// Always right, never padded.
    pub fn perfect(seed: u64) -> NoiseProfile {
        NoiseProfile {
            premise_accuracy: 1.0,
            pbc_accuracy: 1.0,
            padding_rate: 0.0,
            extra_premise_mean: 0.0,
            extra_premise_sd: 0.0,
            term_overlap_rate: 1.0,
            premise_validity_rate: 1.0,
            term_validity_rate: 1.0,
            seed,
        }
    }

    /// A T5-sized model tested on unseen short chains.
    pub fn t5_compositional(seed: u64) -> NoiseProfile {
        NoiseProfile {
            premise_accuracy: 0.84,
            pbc_accuracy: 0.67,
            padding_rate: 0.02,
            extra_premise_mean: 5.44,
            extra_premise_sd: 4.48,
            term_overlap_rate: 0.46,
            premise_validity_rate: 0.25,
            term_validity_rate: 0.90,
            seed,
        }
    }

    /// A T5-sized model on the overall split.
    pub fn t5_overall(seed: u64) -> NoiseProfile {
        NoiseProfile {
            premise_accuracy: 0.99,
            pbc_accuracy: 0.98,
            padding_rate: 0.005,
            term_overlap_rate: 0.77,
            premise_validity_rate: 0.35,
            term_validity_rate: 0.92,
            ..NoiseProfile::t5_compositional(seed)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let probs = [
            ("premise_accuracy", self.premise_accuracy),
            ("pbc_accuracy", self.pbc_accuracy),
            ("padding_rate", self.padding_rate),
            ("term_overlap_rate", self.term_overlap_rate),
            ("premise_validity_rate", self.premise_validity_rate),
            ("term_validity_rate", self.term_validity_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} is not a probability"));
            }
        }
        if self.premise_accuracy + self.padding_rate > 1.0 + 1e-12 {
            return Err("premise_accuracy + padding_rate exceeds 1".into());
        }
        // Premises from the KB only use KB terms.
        if self.term_validity_rate < self.premise_validity_rate {
            return Err("term_validity_rate is below premise_validity_rate".into());
        }
        if self.extra_premise_mean < 0.0 || self.extra_premise_sd < 0.0 {
            return Err("extra premise mean and sd must be non-negative".into());
        }
        Ok(())
    }
}

/// Properties of a wrong premise answer, as the error-analysis criteria
/// define them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErrorTraits {
    pub term_overlap: bool,
    pub premise_valid: bool,
    pub term_valid: bool,
}

impl ErrorTraits {
    pub fn of(kb: &KnowledgeBase, h: Formula, premises: &[Formula]) -> ErrorTraits {
        let mentions = |t: TermId| premises.iter().any(|f| f.mentions(t));
        ErrorTraits {
            term_overlap: mentions(h.subject) && mentions(h.predicate),
            premise_valid: premises.iter().all(|f| kb.contains(*f)),
            term_valid: premises
                .iter()
                .all(|f| f.terms().iter().all(|t| t.index() < kb.num_terms())),
        }
    }
}

pub struct NoisyAssistant {
    profile: NoiseProfile,
    oracle: OracleAssistant,
}

const PREMISE_STREAM: u64 = 1;
const PBC_STREAM: u64 = 2;

fn stream_seed(seed: u64, kb: &KnowledgeBase, h: Formula, stream: u64) -> u64 {
    let mut x = splitmix64(seed ^ stream);
    for b in kb.id.bytes() {
        x = splitmix64(x ^ b as u64);
    }
    let key = (h.quantifier.index() as u64) << 58 | (h.subject.0 as u64) << 29 | h.predicate.0 as u64;
    splitmix64(x ^ key)
}

fn random_quantifier(rng: &mut ChaCha8Rng) -> Quantifier {
    *[Quantifier::A, Quantifier::E, Quantifier::I, Quantifier::O]
        .choose(rng)
        .expect("nonempty")
}

impl NoisyAssistant {
    pub fn new(profile: NoiseProfile) -> Result<NoisyAssistant, String> {
        profile.validate()?;
        Ok(NoisyAssistant {
            profile,
            oracle: OracleAssistant::new(),
        })
    }

    pub fn profile(&self) -> &NoiseProfile {
        &self.profile
    }

    fn padded(&self, kb: &KnowledgeBase, gold: &[Formula], rng: &mut ChaCha8Rng) -> Vec<Formula> {
        let normal = Normal::new(self.profile.extra_premise_mean, self.profile.extra_premise_sd)
            .expect("validated sd");
        let want = normal.sample(rng).round().max(1.0) as usize;
        let mut spare: Vec<Formula> = kb.formulas().iter().copied().filter(|f| !gold.contains(f)).collect();
        spare.shuffle(rng);
        spare.truncate(want);
        let mut out = gold.to_vec();
        out.extend(spare);
        out.shuffle(rng);
        out
    }

    /// A wrong answer drawn to have `want` traits; a few redraws cover the
    /// cases where the KB makes a trait hard to hit.
    fn wrong_premises(&self, kb: &KnowledgeBase, h: Formula, gold: Option<&[Formula]>, want: ErrorTraits, rng: &mut ChaCha8Rng) -> Vec<Formula> {
        let mut last = Vec::new();
        for _ in 0..32 {
            let c = self.candidate(kb, h, gold, want, rng);
            let wrong = gold.is_none_or(|g| !g.iter().all(|f| c.contains(f)));
            if wrong && !c.is_empty() && ErrorTraits::of(kb, h, &c) == want {
                return c;
            }
            if wrong && !c.is_empty() {
                last = c;
            }
        }
        if last.is_empty() {
            // Only reachable for KBs with a single premise.
            last.push(Formula::new(Quantifier::E, h.subject, h.predicate));
        }
        last
    }

    fn candidate(&self, kb: &KnowledgeBase, h: Formula, gold: Option<&[Formula]>, want: ErrorTraits, rng: &mut ChaCha8Rng) -> Vec<Formula> {
        let n = kb.num_terms() as u32;
        let size = gold.map_or(2, |g| g.len()).saturating_add_signed(rng.gen_range(-1..=1)).max(1);
        let avoid = (!want.term_overlap).then(|| if rng.gen_bool(0.5) { h.subject } else { h.predicate });
        let dropped = gold.and_then(|g| g.choose(rng).copied());
        let pool: Vec<Formula> = kb
            .formulas()
            .iter()
            .copied()
            .filter(|f| Some(*f) != dropped && avoid.is_none_or(|a| !f.mentions(a)))
            .collect();
        let kb_term = |rng: &mut ChaCha8Rng, not: &[TermId]| loop {
            let t = TermId(rng.gen_range(0..n));
            if !not.contains(&t) && Some(t) != avoid {
                break t;
            }
        };
        let mut out = Vec::new();
        if !want.premise_valid {
            let anchor = if want.term_overlap { h.subject } else { kb_term(rng, &[]) };
            let other = if want.term_valid { kb_term(rng, &[anchor]) } else { TermId(n) };
            let (s, p) = if rng.gen_bool(0.5) { (anchor, other) } else { (other, anchor) };
            let f = Formula::new(random_quantifier(rng), s, p);
            if !kb.contains(f) {
                out.push(f);
            }
        }
        if want.term_overlap {
            for t in [h.subject, h.predicate] {
                if out.iter().any(|f| f.mentions(t)) {
                    continue;
                }
                let with: Vec<Formula> = pool.iter().copied().filter(|f| f.mentions(t)).collect();
                if let Some(f) = with.choose(rng) {
                    out.push(*f);
                }
            }
        }
        let mut rest = pool;
        rest.shuffle(rng);
        for f in rest {
            if out.len() >= size {
                break;
            }
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out.shuffle(rng);
        dedup(out)
    }

    fn wrong_contradiction(&self, kb: &KnowledgeBase, h: Formula, rng: &mut ChaCha8Rng) -> Formula {
        let n = kb.num_terms();
        let base = Closure::new(n, kb.formulas().iter().copied());
        let assumed = Closure::new(n, kb.formulas().iter().copied().chain([h.negate()]));
        let mut f = h;
        for _ in 0..256 {
            let s = TermId(rng.gen_range(0..n as u32));
            let p = TermId(rng.gen_range(0..n as u32));
            let Ok(c) = Formula::try_new(random_quantifier(rng), s, p) else {
                continue;
            };
            f = c;
            if !(base.contains(c.negate()) && assumed.contains(c)) {
                break;
            }
        }
        f
    }
}

impl Assistant for NoisyAssistant {
    fn suggest_premises(&self, kb: &KnowledgeBase, h: Formula) -> Result<PremiseHint, HintError> {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(self.profile.seed, kb, h, PREMISE_STREAM));
        let gold = match self.oracle.suggest_premises(kb, h) {
            Ok(hint) => Some(hint.premises),
            Err(HintError::Gold(GoldError::NotDerivable(_))) => None,
            Err(e) => return Err(e),
        };
        let p = &self.profile;
        let u: f64 = rng.gen();
        let premises = match &gold {
            Some(g) if u < p.premise_accuracy => g.clone(),
            Some(g) if u < p.premise_accuracy + p.padding_rate => self.padded(kb, g, &mut rng),
            _ => {
                let premise_valid = rng.gen_bool(p.premise_validity_rate);
                let cond = if p.premise_validity_rate < 1.0 {
                    ((p.term_validity_rate - p.premise_validity_rate) / (1.0 - p.premise_validity_rate)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                let want = ErrorTraits {
                    term_overlap: rng.gen_bool(p.term_overlap_rate),
                    premise_valid,
                    term_valid: premise_valid || rng.gen_bool(cond),
                };
                self.wrong_premises(kb, h, gold.as_deref(), want, &mut rng)
            }
        };
        Ok(PremiseHint {
            premises: dedup(premises),
            source: HintSource::Noisy,
        })
    }

    fn suggest_contradiction(&self, kb: &KnowledgeBase, h: Formula) -> Result<ContradictionHint, HintError> {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(self.profile.seed, kb, h, PBC_STREAM));
        let formula = match self.oracle.gold(kb, h) {
            Ok(g) => match g.pbc_formula {
                None => return Err(HintError::NotApplicable),
                Some(f) if rng.gen_bool(self.profile.pbc_accuracy) => f,
                Some(_) => self.wrong_contradiction(kb, h, &mut rng),
            },
            Err(HintError::Gold(GoldError::NotDerivable(_))) => self.wrong_contradiction(kb, h, &mut rng),
            Err(e) => return Err(e),
        };
        Ok(ContradictionHint {
            formula,
            source: HintSource::Noisy,
        })
    }
}
