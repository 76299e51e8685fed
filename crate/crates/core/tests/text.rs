use syllogic::formula::{Formula, Quantifier, TermId};
use syllogic::kb::KnowledgeBase;
use syllogic::text::{parse, render, Substitution};

fn pseudoword_table() -> Substitution {
    let w = ["preac", "verde", "usni", "goed", "itil", "entpi", "ondy", "ramer"];
    Substitution::new(w.iter().map(|s| s.to_string()).collect()).unwrap()
}

#[test]
fn pseudoword_sentences_reproduce() {
    let kb = KnowledgeBase::from_toml(include_str!("fixtures/pseudowords.kb")).unwrap();
    let s = pseudoword_table();
    let text: String = kb
        .formulas()
        .iter()
        .map(|f| render(*f, &s).unwrap() + "\n")
        .collect();
    assert_eq!(text, include_str!("fixtures/pseudowords.txt"));
    for (line, f) in include_str!("fixtures/pseudowords.txt").lines().zip(kb.formulas()) {
        assert_eq!(parse(line, &s).unwrap(), *f);
    }
}

#[test]
fn every_form_round_trips_on_a_large_substitution() {
    let s = Substitution::generate(60, 17);
    for q in [Quantifier::A, Quantifier::E, Quantifier::I, Quantifier::O] {
        for a in 0..60 {
            for b in 0..60 {
                if a != b {
                    let f = Formula::new(q, TermId(a), TermId(b));
                    assert_eq!(parse(&render(f, &s).unwrap(), &s).unwrap(), f);
                }
            }
        }
    }
}
