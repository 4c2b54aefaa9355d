//! Property suites over randomized model configurations.

mod common;

const CASES: u32 = 1000;

fn check(result: Result<(), String>) {
    if let Err(e) = result {
        panic!("{e}");
    }
}

#[test]
fn env_accounting() {
    check(common::env_accounting(CASES));
}

#[test]
fn arrival_homogeneity() {
    check(common::homogeneity(CASES));
}

#[test]
fn arrival_probabilities_agree() {
    check(common::arrival_probs_agree(CASES));
}

#[test]
fn be_spread_at_most_one() {
    check(common::be_spread(CASES));
}

#[test]
fn beae_floor_and_active_set() {
    check(common::beae_active_set(CASES));
}

#[test]
fn ucb_pulls_unseen_arms_first() {
    check(common::ucb_pulls_unseen_arms_first(CASES));
}

#[test]
fn rec_exploration_ignores_rewards() {
    check(common::rec_exploration_ignores_rewards(CASES));
}

#[test]
fn determinism_under_seed() {
    check(common::determinism(CASES));
}

#[test]
fn parallel_equals_serial() {
    check(common::parallel_equals_serial(CASES));
}

#[test]
fn oracle_bounds_ordered_and_stable() {
    check(common::oracle_bounds_ordered(CASES));
}

#[test]
fn ratio_limit_is_scale_free() {
    check(common::ratio_limit_scale_free(CASES));
}
