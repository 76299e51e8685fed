//! Pseudoword substitutions and the sentence forms of formulas.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::formula::{Formula, Quantifier, TermId, Vocabulary};

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cl", "dr", "gr",
    "pl", "pr", "st", "tr", "sn", "sk",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ea", "ee", "oe", "ai", "ou", "y"];
const CODAS: &[&str] = &["", "", "", "n", "r", "s", "t", "l", "d", "m", "c"];

// Real words the syllable grammar can produce.
const BLOCKLIST: &[&str] = &[
    "are", "bad", "bed", "bit", "cat", "dog", "fit", "god", "lot", "man", "map", "men", "mud",
    "not", "nut", "pan", "pet", "pot", "rat", "red", "sad", "set", "sit", "sun", "tan", "ten",
    "tin", "top", "van", "some", "none", "all", "gold", "meat", "seed", "tree", "rain", "road",
    "boat", "coat", "goat", "moon", "soon", "sea", "tea", "bee", "see", "pea", "lead", "read",
    "bread", "dream", "green", "steam", "train", "brain", "plan", "stop", "tram", "slip",
    "cream", "grain", "drain", "stain", "snail", "sour", "pour", "tour", "four", "your", "our",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("term {0:?} has no pseudoword")]
    MissingTerm(TermId),
    #[error("invalid pseudoword `{0}`")]
    InvalidWord(String),
    #[error("pseudoword `{0}` used twice")]
    DuplicateWord(String),
    #[error("malformed sentence `{0}`")]
    Malformed(String),
    #[error("unknown word `{0}`")]
    UnknownWord(String),
}

fn valid_word(w: &str) -> bool {
    (3..=8).contains(&w.len()) && w.bytes().all(|b| b.is_ascii_lowercase())
}

/// One pseudoword, 3 to 8 lowercase letters.
pub fn pseudoword(rng: &mut impl Rng) -> String {
    loop {
        let mut w = String::new();
        if rng.gen_bool(0.25) {
            // Vowel-initial words such as "usni".
            w.push_str(NUCLEI.choose(rng).expect("nonempty"));
        }
        for _ in 0..rng.gen_range(1..=2) {
            w.push_str(ONSETS.choose(rng).expect("nonempty"));
            w.push_str(NUCLEI.choose(rng).expect("nonempty"));
        }
        w.push_str(CODAS.choose(rng).expect("nonempty"));
        if valid_word(&w) && !BLOCKLIST.contains(&w.as_str()) {
            return w;
        }
    }
}

/// An injective map from term ids to pseudowords.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    words: Vec<String>,
    index: FxHashMap<String, TermId>,
}

impl Substitution {
    /// `words[i]` names term `i`.
    pub fn new(words: Vec<String>) -> Result<Substitution, TextError> {
        let mut index = FxHashMap::default();
        for (i, w) in words.iter().enumerate() {
            if !valid_word(w) {
                return Err(TextError::InvalidWord(w.clone()));
            }
            if index.insert(w.clone(), TermId(i as u32)).is_some() {
                return Err(TextError::DuplicateWord(w.clone()));
            }
        }
        Ok(Substitution { words, index })
    }

    pub fn generate(n: usize, seed: u64) -> Substitution {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = Vec::with_capacity(n);
        let mut index = FxHashMap::default();
        while words.len() < n {
            let w = pseudoword(&mut rng);
            if !index.contains_key(&w) {
                index.insert(w.clone(), TermId(words.len() as u32));
                words.push(w);
            }
        }
        Substitution { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, t: TermId) -> Option<&str> {
        self.words.get(t.index()).map(String::as_str)
    }

    pub fn term(&self, word: &str) -> Option<TermId> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Word lookup in either direction.
pub trait Lexicon {
    fn word(&self, t: TermId) -> Option<&str>;
    fn term(&self, word: &str) -> Option<TermId>;
    fn size(&self) -> usize;
}

impl Lexicon for Substitution {
    fn word(&self, t: TermId) -> Option<&str> {
        Substitution::word(self, t)
    }

    fn term(&self, word: &str) -> Option<TermId> {
        Substitution::term(self, word)
    }

    fn size(&self) -> usize {
        self.len()
    }
}

/// KB term names used as words.
impl Lexicon for Vocabulary {
    fn word(&self, t: TermId) -> Option<&str> {
        self.contains(t).then(|| self.name(t))
    }

    fn term(&self, word: &str) -> Option<TermId> {
        self.get(word)
    }

    fn size(&self) -> usize {
        self.len()
    }
}

fn sentence(f: Formula, s: &impl Lexicon, wrap: bool) -> Result<String, TextError> {
    let word = |t: TermId| {
        s.word(t).ok_or(TextError::MissingTerm(t)).map(|w| {
            if wrap {
                format!("{{{w}}}")
            } else {
                w.to_string()
            }
        })
    };
    let (x, y) = (word(f.subject)?, word(f.predicate)?);
    Ok(match f.quantifier {
        Quantifier::A => format!("All {x} are {y}"),
        Quantifier::E => format!("No {x} are {y}"),
        Quantifier::I => format!("Some {x} are {y}"),
        Quantifier::O => format!("Some {x} are not {y}"),
    })
}

pub fn render(f: Formula, s: &impl Lexicon) -> Result<String, TextError> {
    sentence(f, s, false)
}

/// Like [`render`], with each pseudoword in braces.
pub fn render_wrapped(f: Formula, s: &impl Lexicon) -> Result<String, TextError> {
    sentence(f, s, true)
}

fn split_sentence(text: &str) -> Option<(Quantifier, &str, &str)> {
    let text = text.trim().trim_end_matches('.');
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        ["All", x, "are", y] => Some((Quantifier::A, x, y)),
        ["No", x, "are", y] => Some((Quantifier::E, x, y)),
        ["Some", x, "are", "not", y] => Some((Quantifier::O, x, y)),
        ["Some", x, "are", y] => Some((Quantifier::I, x, y)),
        _ => None,
    }
}

fn unwrap_word(w: &str) -> &str {
    w.strip_prefix('{')
        .and_then(|w| w.strip_suffix('}'))
        .unwrap_or(w)
}

/// Reads a sentence whose words must all be in `s`. Braces around words and
/// a trailing period are accepted.
pub fn parse(text: &str, s: &impl Lexicon) -> Result<Formula, TextError> {
    let (q, x, y) = split_sentence(text).ok_or_else(|| TextError::Malformed(text.to_string()))?;
    let term = |w: &str| {
        let w = unwrap_word(w);
        s.term(w).ok_or_else(|| TextError::UnknownWord(w.to_string()))
    };
    Formula::try_new(q, term(x)?, term(y)?).map_err(|_| TextError::Malformed(text.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parsed {
    pub formula: Formula,
    /// Some word was not in the substitution.
    pub fabricated: bool,
}

/// Parses assistant output, giving unknown words fresh term ids past the
/// end of the lexicon. The same unknown word always gets the same id.
pub struct SentenceReader<'a, L: Lexicon> {
    subst: &'a L,
    fresh: Vec<String>,
}

impl<'a, L: Lexicon> SentenceReader<'a, L> {
    pub fn new(subst: &'a L) -> SentenceReader<'a, L> {
        SentenceReader {
            subst,
            fresh: Vec::new(),
        }
    }

    pub fn fresh_words(&self) -> &[String] {
        &self.fresh
    }

    fn term(&mut self, w: &str, fabricated: &mut bool) -> TermId {
        let w = unwrap_word(w);
        if let Some(t) = self.subst.term(w) {
            return t;
        }
        *fabricated = true;
        let k = match self.fresh.iter().position(|f| f == w) {
            Some(k) => k,
            None => {
                self.fresh.push(w.to_string());
                self.fresh.len() - 1
            }
        };
        TermId((self.subst.size() + k) as u32)
    }

    pub fn parse(&mut self, text: &str) -> Result<Parsed, TextError> {
        let (q, x, y) = split_sentence(text).ok_or_else(|| TextError::Malformed(text.to_string()))?;
        let mut fabricated = false;
        let s = self.term(x, &mut fabricated);
        let p = self.term(y, &mut fabricated);
        let formula = Formula::try_new(q, s, p).map_err(|_| TextError::Malformed(text.to_string()))?;
        Ok(Parsed { formula, fabricated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudoword_table() -> Substitution {
        let w = ["preac", "verde", "usni", "goed", "itil", "entpi", "ondy", "ramer"];
        Substitution::new(w.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn x(i: u32) -> TermId {
        TermId(i - 1)
    }

    #[test]
    fn pseudoword_sentences() {
        let s = pseudoword_table();
        assert_eq!(render(Formula::a(x(1), x(2)), &s).unwrap(), "All preac are verde");
        assert_eq!(render(Formula::e(x(3), x(8)), &s).unwrap(), "No usni are ramer");
        assert_eq!(render(Formula::o(x(3), x(1)), &s).unwrap(), "Some usni are not preac");
        assert_eq!(parse("All preac are verde", &s).unwrap(), Formula::a(x(1), x(2)));
        assert_eq!(parse("Some usni are not preac.", &s).unwrap(), Formula::o(x(3), x(1)));
        assert_eq!(
            render_wrapped(Formula::i(x(1), x(4)), &s).unwrap(),
            "Some {preac} are {goed}"
        );
        assert_eq!(parse("Some {preac} are {goed}", &s).unwrap(), Formula::i(x(1), x(4)));
    }

    #[test]
    fn fabricated_words_get_fresh_ids() {
        let s = pseudoword_table();
        let mut r = SentenceReader::new(&s);
        let p = r.parse("No gleeb are usni").unwrap();
        assert!(p.fabricated);
        assert_eq!(p.formula, Formula::e(TermId(8), x(3)));
        assert_eq!(r.parse("All gleeb are gleeb").ok(), None);
        assert_eq!(r.parse("Some usni are gleeb").unwrap().formula, Formula::i(x(3), TermId(8)));
        assert!(!r.parse("All preac are verde").unwrap().fabricated);
        assert!(matches!(parse("No gleeb are usni", &s), Err(TextError::UnknownWord(_))));
        assert!(matches!(parse("Many preac are verde", &s), Err(TextError::Malformed(_))));
    }

    #[test]
    fn generated_substitutions_are_valid() {
        let s = Substitution::generate(200, 3);
        assert_eq!(Substitution::new(s.words().to_vec()).unwrap(), s);
        assert_eq!(Substitution::generate(200, 3), s);
        assert!(matches!(
            Substitution::new(vec!["abc".into(), "abc".into()]),
            Err(TextError::DuplicateWord(_))
        ));
        assert!(Substitution::new(vec!["Ab".into()]).is_err());
    }
}
