//! Linearity properties of the interpreter, checked over randomized
//! executions of the whole corpus: divisible owner-sums never change,
//! indivisible assets always have exactly one holder, amounts never go
//! negative, and ticks touch nothing but the clock and the timers.

mod common;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{check_asset_properties, fixture_ast, random_walk, CORPUS};
use stipula_core::interp::Machine;

#[test]
fn conservation_and_exclusivity_hold_on_random_walks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total_steps = 0usize;
    for name in CORPUS {
        let ast = fixture_ast(name);
        let machine = Machine::new(&ast).unwrap();
        for _ in 0..60 {
            let mut sums: Option<BTreeMap<String, i64>> = None;
            total_steps += random_walk(&machine, &mut rng, 40, |_, new| {
                let sums = sums.get_or_insert_with(|| {
                    machine
                        .assets
                        .models
                        .iter()
                        .map(|m| (m.asset.clone(), new.owner_sum(&m.asset)))
                        .collect()
                });
                check_asset_properties(&machine.assets, new, sums, name);
                for ((owner, asset), amount) in &new.asset_vals {
                    assert!(*amount >= 0, "{name}: negative {owner:?}.{asset}");
                }
            });
        }
    }
    assert!(total_steps >= 2_000, "walks were too short: {total_steps}");
}

#[test]
fn first_step_sums_match_the_endowments() {
    // the conservation baseline is the state right after init
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ast = fixture_ast("Deposit");
    let machine = Machine::new(&ast).unwrap();
    let (fields, endow) = common::sample_init("Deposit", &mut rng);
    let state = machine.init(&fields, &endow).unwrap();
    let endowed: i64 = endow.values().sum();
    assert_eq!(state.owner_sum("flour"), endowed);
}

#[test]
fn ticks_change_only_clock_and_timers() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for name in CORPUS {
        let ast = fixture_ast(name);
        let machine = Machine::new(&ast).unwrap();
        for _ in 0..10 {
            random_walk(&machine, &mut rng, 25, |old, _| {
                let ticked = machine.tick(old);
                assert_eq!(ticked.control, old.control);
                assert_eq!(ticked.field_vals, old.field_vals);
                assert_eq!(ticked.asset_vals, old.asset_vals);
                assert_eq!(ticked.messages, old.messages);
                assert_eq!(ticked.receipts, old.receipts);
                assert_eq!(ticked.clock, old.clock + 1);
                for ev in &ticked.pending {
                    assert!(ev.remaining >= 0);
                }
            });
        }
    }
}
