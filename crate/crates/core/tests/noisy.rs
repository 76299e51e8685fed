use syllogic::assistant::{Assistant, ErrorTraits, NoiseProfile, NoisyAssistant, OracleAssistant};
use syllogic::formula::Formula;
use syllogic::generate::{batch_seed, generate_kb, GenParams};
use syllogic::kb::KnowledgeBase;

const N: usize = 10_000;

/// About N (KB, hypothesis) queries over generated KBs.
fn queries() -> Vec<(KnowledgeBase, Vec<Formula>)> {
    let oracle = OracleAssistant::new();
    let mut out = Vec::new();
    let mut total = 0;
    let mut i = 0;
    while total < N {
        let kb = generate_kb(&GenParams::mixed(i, batch_seed(2024, i))).unwrap();
        let mut hs = oracle.index(&kb).hypotheses();
        hs.truncate(N - total);
        total += hs.len();
        out.push((kb, hs));
        i += 1;
    }
    out
}

#[test]
fn accuracies_converge() {
    let qs = queries();
    let p = NoiseProfile::t5_compositional(9);
    let noisy = NoisyAssistant::new(p.clone()).unwrap();
    let oracle = OracleAssistant::new();
    let (mut right, mut pbc_right, mut pbc_n) = (0usize, 0usize, 0usize);
    for (kb, hs) in &qs {
        for &h in hs {
            if noisy.suggest_premises(kb, h).unwrap().premises == oracle.suggest_premises(kb, h).unwrap().premises {
                right += 1;
            }
            if let Ok(gold) = oracle.suggest_contradiction(kb, h) {
                pbc_n += 1;
                if noisy.suggest_contradiction(kb, h).unwrap().formula == gold.formula {
                    pbc_right += 1;
                }
            }
        }
    }
    let within = |hits: usize, n: usize, p: f64| {
        let rate = hits as f64 / n as f64;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        ((rate - p).abs() <= 2.0 * sd, rate)
    };
    // Padded answers are wrong too, so exact answers happen at the accuracy rate.
    let (ok, rate) = within(right, N, p.premise_accuracy);
    assert!(ok, "premise accuracy {rate}");
    let (ok, rate) = within(pbc_right, pbc_n, p.pbc_accuracy);
    assert!(ok, "pbc accuracy {rate} over {pbc_n}");
}

#[test]
fn error_traits_match_the_profile() {
    let qs = queries();
    for base in [NoiseProfile::t5_overall(4), NoiseProfile::t5_compositional(4)] {
        let p = NoiseProfile {
            premise_accuracy: 0.0,
            padding_rate: 0.0,
            ..base
        };
        let noisy = NoisyAssistant::new(p.clone()).unwrap();
        let oracle = OracleAssistant::new();
        let (mut overlap, mut pv, mut tv, mut wrong) = (0, 0, 0, 0);
        for (kb, hs) in &qs {
            for &h in hs {
                let got = noisy.suggest_premises(kb, h).unwrap().premises;
                assert_ne!(got, oracle.suggest_premises(kb, h).unwrap().premises);
                let t = ErrorTraits::of(kb, h, &got);
                wrong += 1;
                overlap += t.term_overlap as usize;
                pv += t.premise_valid as usize;
                tv += t.term_valid as usize;
            }
        }
        let rate = |k: usize| k as f64 / wrong as f64;
        for (name, got, want) in [
            ("term overlap", rate(overlap), p.term_overlap_rate),
            ("premise validity", rate(pv), p.premise_validity_rate),
            ("term validity", rate(tv), p.term_validity_rate),
        ] {
            assert!((got - want).abs() <= 0.03, "{name}: {got:.4} vs {want}");
        }
    }
}
