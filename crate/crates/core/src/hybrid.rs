//! Proving with assistant hints, falling back to the full search.
//!
//! Phase 1 derives the hypothesis from the hinted premises alone, over their
//! terms. Phase 2 runs proof by contradiction in that same restricted space,
//! trying the hinted formula first. Phase 3 is the unrestricted search over
//! the whole KB, again with the hinted formula first. Each phase only runs
//! if the previous ones failed, and all of them draw on one step budget.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assistant::{Assistant, HintError};
use crate::formula::{Formula, TermId};
use crate::kb::KnowledgeBase;
use crate::proof::Proof;
use crate::prover::{finish, prove, run_algorithm1, BudgetExceeded, PhaseSteps, ProverConfig, SearchState, StepReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    RestrictedDerive,
    RestrictedPbc,
    Fallback,
}

/// What happened to the hints of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HintLog {
    pub premise_error: Option<HintError>,
    pub contradiction_error: Option<HintError>,
    /// Hinted premises that are not in the KB.
    pub discarded: Vec<Formula>,
    pub solved_in: Option<Phase>,
}

#[derive(Clone, Debug)]
pub struct HybridRun {
    pub proof: Option<Proof>,
    pub report: StepReport,
    pub log: HintLog,
}

pub fn hybrid_prove(
    h: Formula,
    kb: &KnowledgeBase,
    premise_assistant: &dyn Assistant,
    pbc_assistant: &dyn Assistant,
    state: &mut SearchState,
) -> (Option<Proof>, StepReport) {
    let run = hybrid_run(h, kb, premise_assistant, pbc_assistant, state);
    (run.proof, run.report)
}

pub fn hybrid_run(
    h: Formula,
    kb: &KnowledgeBase,
    premise_assistant: &dyn Assistant,
    pbc_assistant: &dyn Assistant,
    state: &mut SearchState,
) -> HybridRun {
    let start = Instant::now();
    let (steps0, pairs0) = (state.steps(), state.pbc_pairs_tried());
    let mut log = HintLog::default();
    let mut phases = PhaseSteps::default();

    let hinted = match pbc_assistant.suggest_contradiction(kb, h) {
        Ok(c) => vec![c.formula, c.formula.negate()],
        Err(e) => {
            log.contradiction_error = Some(e);
            Vec::new()
        }
    };
    let restricted = match premise_assistant.suggest_premises(kb, h) {
        Ok(hint) => {
            let (inside, outside): (Vec<Formula>, Vec<Formula>) = hint.premises.into_iter().partition(|f| kb.contains(*f));
            log.discarded = outside;
            let mut vocab: Vec<TermId> = inside.iter().flat_map(|f| f.terms()).chain(h.terms()).collect();
            vocab.sort_unstable();
            vocab.dedup();
            Some(state.ambient(kb.num_terms(), &inside, &vocab))
        }
        Err(e) => {
            log.premise_error = Some(e);
            None
        }
    };

    let kb_amb = state.kb_ambient(kb);
    let mut result: Result<Option<(u32, Phase)>, BudgetExceeded> = Ok(None);
    if let Some(np) = restricted {
        result = (|| {
            let before = state.steps();
            let derived = state.derive(np, h);
            phases.restricted_derive = state.steps() - before;
            if derived? {
                return Ok(Some((np, Phase::RestrictedDerive)));
            }
            let before = state.steps();
            let closed = state.pbc(np, h, &hinted);
            phases.restricted_pbc = state.steps() - before;
            Ok(closed?.map(|_| (np, Phase::RestrictedPbc)))
        })();
    }
    if let Ok(None) = result {
        let before = state.steps();
        let r = run_algorithm1(state, kb_amb, h, &hinted);
        phases.fallback = state.steps() - before;
        result = r.map(|ok| ok.then_some((kb_amb, Phase::Fallback)));
    }

    let (amb, outcome_result) = match result {
        Ok(Some((amb, phase))) => {
            log.solved_in = Some(phase);
            (amb, Ok(true))
        }
        Ok(None) => (kb_amb, Ok(false)),
        Err(e) => (kb_amb, Err(e)),
    };
    let (proof, outcome) = finish(state, amb, h, outcome_result);
    HybridRun {
        proof,
        report: StepReport {
            hypothesis: h,
            outcome,
            steps: state.steps() - steps0,
            pbc_pairs_tried: state.pbc_pairs_tried() - pairs0,
            seed: state.config().seed,
            wall_time: start.elapsed(),
            phases: Some(phases),
        },
        log,
    }
}

/// A prover configuration to compare.
#[derive(Clone, Copy)]
pub enum Mode<'a> {
    Symbolic,
    Hybrid {
        premises: &'a dyn Assistant,
        contradiction: &'a dyn Assistant,
    },
}

#[derive(Clone, Copy)]
pub struct RunConfig<'a> {
    pub name: &'a str,
    pub mode: Mode<'a>,
    pub prover: ProverConfig,
}

#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub name: String,
    pub report: StepReport,
    /// Steps of the first configuration divided by steps of this one.
    pub speedup: f64,
}

/// Runs one configuration on a fresh search state.
pub fn run_config(h: Formula, kb: &KnowledgeBase, config: &RunConfig<'_>) -> (Option<Proof>, StepReport) {
    let mut state = SearchState::new(config.prover);
    match config.mode {
        Mode::Symbolic => prove(h, kb, &mut state),
        Mode::Hybrid {
            premises,
            contradiction,
        } => hybrid_prove(h, kb, premises, contradiction, &mut state),
    }
}

/// Runs every configuration with the same seed.
pub fn compare_runs(h: Formula, kb: &KnowledgeBase, configs: &[RunConfig<'_>], seed: u64) -> Vec<ComparisonRow> {
    assert!(configs.len() >= 2, "compare_runs needs at least two configurations");
    let reports: Vec<(String, StepReport)> = configs
        .iter()
        .map(|c| {
            let c = RunConfig {
                prover: ProverConfig { seed, ..c.prover },
                ..*c
            };
            (c.name.to_string(), run_config(h, kb, &c).1)
        })
        .collect();
    let first = reports[0].1.steps.max(1) as f64;
    reports
        .into_iter()
        .map(|(name, report)| ComparisonRow {
            speedup: first / report.steps.max(1) as f64,
            name,
            report,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assistant::{NoAssistant, OracleAssistant};
    use crate::prover::Outcome;
    use crate::proof::check_proof;

    fn sample_kb() -> KnowledgeBase {
        KnowledgeBase::from_toml(include_str!("../tests/fixtures/sample.kb")).unwrap()
    }

    #[test]
    fn oracle_hints_do_not_cost_more() {
        let kb = sample_kb();
        let oracle = OracleAssistant::new();
        for h in oracle.index(&kb).hypotheses() {
            for seed in 0..3 {
                let mut s1 = SearchState::new(ProverConfig::with_seed(seed));
                let (bp, base) = prove(h, &kb, &mut s1);
                let mut s2 = SearchState::new(ProverConfig::with_seed(seed));
                let run = hybrid_run(h, &kb, &oracle, &oracle, &mut s2);
                let p = run.report.phases.unwrap();
                assert!(bp.is_some() && run.proof.is_some());
                assert!(check_proof(run.proof.as_ref().unwrap(), kb.formulas(), h));
                assert_eq!(p.fallback, 0, "{}", kb.format(h));
                assert!(p.restricted_derive + p.restricted_pbc <= base.steps, "{}", kb.format(h));
            }
        }
    }

    #[test]
    fn no_hints_is_the_baseline_plus_nothing() {
        let kb = sample_kb();
        let h = kb.parse("O x5 x1").unwrap();
        let mut s1 = SearchState::new(ProverConfig::with_seed(4));
        let (_, base) = prove(h, &kb, &mut s1);
        let mut s2 = SearchState::new(ProverConfig::with_seed(4));
        let run = hybrid_run(h, &kb, &NoAssistant, &NoAssistant, &mut s2);
        assert_eq!(run.report.steps, base.steps);
        assert_eq!(run.report.outcome, Outcome::Proved);
        assert!(run.log.premise_error.is_some());
    }

    #[test]
    fn compare_identical_configs() {
        let kb = sample_kb();
        let h = kb.parse("A x6 x11").unwrap();
        let oracle = OracleAssistant::new();
        let cfgs = [
            RunConfig { name: "symbolic", mode: Mode::Symbolic, prover: ProverConfig::default() },
            RunConfig { name: "symbolic-again", mode: Mode::Symbolic, prover: ProverConfig::default() },
            RunConfig {
                name: "oracle",
                mode: Mode::Hybrid { premises: &oracle, contradiction: &oracle },
                prover: ProverConfig::default(),
            },
        ];
        let rows = compare_runs(h, &kb, &cfgs, 9);
        assert_eq!(rows[1].speedup, 1.0);
        assert!(rows[2].speedup >= 1.0);
    }
}
