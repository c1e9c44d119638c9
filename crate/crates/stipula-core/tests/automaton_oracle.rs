//! Cycle enumeration checked against an independent exhaustive oracle.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{oracle_disjoint, oracle_simple_cycles, random_automaton};
use stipula_core::automaton::{enumerate_cycles, fixpoint_iterations};

#[test]
fn fixpoint_agrees_with_exhaustive_dfs_on_random_automata() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA%1000 + 7);
    for case in 0..1200 {
        let automaton = random_automaton(&mut rng);
        let report = enumerate_cycles(&automaton);
        let expected = oracle_simple_cycles(&automaton);
        assert_eq!(
            report.cycles, expected,
            "case {case}: cycle sets differ on {automaton:?}"
        );
        assert_eq!(
            report.disjoint,
            oracle_disjoint(&expected),
            "case {case}: disjointness verdicts differ on {automaton:?}"
        );
        if report.disjoint {
            // every state appears in at most one cycle
            let mut seen = std::collections::BTreeSet::new();
            for cycle in &report.cycles {
                for state in cycle.states() {
                    assert!(seen.insert(state), "case {case}: shared state in disjoint report");
                }
            }
        } else {
            let witness = report.witness.expect("witness for overlap");
            assert!(!witness.shared.is_empty());
            assert!(report.cycles.contains(&witness.first.normalized_cycle()));
            assert!(report.cycles.contains(&witness.second.normalized_cycle()));
        }
    }
}

#[test]
fn fixpoint_iteration_count_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let automaton = random_automaton(&mut rng);
        let bound = automaton.transitions.len() * automaton.states.len() + 2;
        let iterations = fixpoint_iterations(&automaton);
        assert!(
            iterations <= bound,
            "{iterations} iterations exceeds bound {bound} on {automaton:?}"
        );
    }
}
