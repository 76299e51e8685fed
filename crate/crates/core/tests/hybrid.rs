use syllogic::assistant::{NoiseProfile, NoisyAssistant};
use syllogic::bench::{sample_slate, BenchPlan, ConfigSpec, AssistantSpec};
use syllogic::generate::{generate_kb, GenParams};
use syllogic::hybrid::hybrid_run;
use syllogic::prover::{prove, Outcome, ProverConfig, SearchState};

/// Mean log10 steps fall as premise accuracy rises.
#[test]
fn steps_degrade_monotonically_with_accuracy() {
    let kbs = [generate_kb(&GenParams::short_chains(77)).unwrap()];
    let plan = BenchPlan::new(
        vec![ConfigSpec {
            name: "s".into(),
            assistant: AssistantSpec::Symbolic,
            failure_cache: true,
        }],
        3,
    );
    let slate = sample_slate(&kbs, &plan);
    let kb = &kbs[0];
    let mut means = Vec::new();
    for acc in [0.25, 0.5, 0.75, 1.0] {
        let mut logs = Vec::new();
        for rep in 0..4u64 {
            let profile = NoiseProfile {
                premise_accuracy: acc,
                pbc_accuracy: acc,
                padding_rate: 0.0,
                ..NoiseProfile::t5_compositional(rep)
            };
            let noisy = NoisyAssistant::new(profile).unwrap();
            for (i, s) in slate.samples.iter().enumerate() {
                let seed = rep << 32 | i as u64;
                let run = hybrid_run(s.hypothesis, kb, &noisy, &noisy, &mut SearchState::new(ProverConfig::with_seed(seed)));
                assert_eq!(run.report.outcome, Outcome::Proved);
                logs.push((run.report.steps as f64).log10());
            }
        }
        means.push(logs.iter().sum::<f64>() / logs.len() as f64);
    }
    // One-sided: each step up in accuracy may not raise the mean by more
    // than sampling noise, and the ends must differ clearly.
    for w in means.windows(2) {
        assert!(w[1] <= w[0] + 0.05, "{means:?}");
    }
    assert!(means[0] - means[3] >= 0.5, "{means:?}");
}

#[test]
fn symbolic_baseline_proves_the_whole_slate() {
    let kbs = [generate_kb(&GenParams::long_chains(5)).unwrap()];
    let plan = BenchPlan::new(
        vec![ConfigSpec {
            name: "s".into(),
            assistant: AssistantSpec::Symbolic,
            failure_cache: true,
        }],
        1,
    );
    for s in sample_slate(&kbs, &plan).samples {
        let (proof, report) = prove(s.hypothesis, &kbs[0], &mut SearchState::new(ProverConfig::with_seed(1)));
        assert!(proof.is_some(), "{}", kbs[0].format(s.hypothesis));
        assert_eq!(report.outcome, Outcome::Proved);
    }
}
