//! Randomized invariant checks shared by the property suite and the
//! acceptance run. Each check is a proptest property over generated model
//! configurations.

#![allow(dead_code)]

use extbandit::analytic::{self, SummationOrder};
use extbandit::env::{
    arrival_probs, arrival_probs_from_popularity, EnvState, Environment, Externality, ModelConfig,
};
use extbandit::harness::{run_replications, simulate, Execution, ExperimentSpec};
use extbandit::policies::{
    choose, BalancedElimination, BalancedExploration, BePhase, Policy, PolicyDescriptor,
    RandomExploreCommit, SideInformation, TauRule,
};
use extbandit::rng::{stream, Domain, ReplicationStreams, Role};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

/// Parameters of a generated model.
#[derive(Debug, Clone)]
pub struct Model {
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub horizon: u64,
}

impl Model {
    pub fn config(&self) -> ModelConfig {
        ModelConfig::power(
            self.mu.clone(),
            self.theta.clone(),
            self.alpha,
            self.horizon,
        )
        .expect("generated config is valid")
    }
}

fn has_unique_max(mu: &[f64]) -> bool {
    let top = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mu.iter().filter(|&&x| x == top).count() == 1
}

pub fn model(
    max_arms: usize,
    alpha: std::ops::Range<f64>,
    horizon: std::ops::RangeInclusive<u64>,
) -> impl Strategy<Value = Model> {
    (2..=max_arms)
        .prop_flat_map(move |m| {
            (
                prop::collection::vec(0.02f64..=1.0, m),
                prop::collection::vec(0.1f64..8.0, m),
                alpha.clone(),
                horizon.clone(),
            )
        })
        .prop_filter("unique best arm", |(mu, ..)| has_unique_max(mu))
        .prop_map(|(mu, theta, alpha, horizon)| Model {
            mu,
            theta,
            alpha,
            horizon,
        })
}

pub fn policy() -> impl Strategy<Value = PolicyDescriptor> {
    prop_oneof![
        Just(PolicyDescriptor::Oracle),
        (0.5f64..5.0).prop_map(|gamma| PolicyDescriptor::Ucb { gamma }),
        prop_oneof![Just(TauRule::SQRT), (0u64..50).prop_map(TauRule::Fixed)]
            .prop_map(|tau| PolicyDescriptor::Rec { tau }),
        (0.5f64..4.0, prop::option::of(1u64..20))
            .prop_map(|(beta, n)| PolicyDescriptor::Be { beta, n }),
        prop::option::of(0.1f64..12.0).prop_map(|p| PolicyDescriptor::BeAe { p }),
    ]
}

/// Runs `check` on `cases` generated inputs; `Err` carries the minimal
/// failing input.
pub fn property<S, F>(cases: u32, strategy: S, check: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

/// `Σ T_a = t`, `S_a ≤ T_a`, `N_a = S_a + θ_a`, `Σ λ = 1`, and in-range arms,
/// checked after every step of every policy.
pub fn env_accounting(cases: u32) -> Result<(), String> {
    property(
        cases,
        (model(4, 0.2..3.0, 1..=300), policy(), any::<u64>()),
        |(m, desc, seed)| {
            let config = m.config();
            let mut policy = desc
                .build(&config)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let mut streams = ReplicationStreams::new(seed, Domain::Policy, 0);
            let mut env = Environment::new(&config);
            let mut candidates = Vec::new();
            for t in 1..=config.horizon() {
                let arm = {
                    let obs = env.state().observation();
                    choose(
                        policy.as_mut(),
                        t,
                        &obs,
                        &mut candidates,
                        &mut streams.tie_break,
                    )
                };
                prop_assert!(arm < config.arms(), "arm {arm} out of range");
                let out = env
                    .step(arm, &mut streams.env)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                policy
                    .observe(&out)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                let s = env.state();
                prop_assert_eq!(s.t(), t);
                prop_assert_eq!(s.pulls().iter().sum::<u64>(), t);
                for a in 0..config.arms() {
                    prop_assert!(s.successes()[a] <= s.pulls()[a]);
                    prop_assert_eq!(
                        s.popularity()[a],
                        s.successes()[a] as f64 + config.theta()[a]
                    );
                }
                let total: f64 = env.arrival_probs().iter().sum();
                prop_assert!(
                    (total - 1.0).abs() < 1e-12,
                    "arrival probabilities sum to {total}"
                );
            }
            prop_assert_eq!(
                env.state().total_reward(),
                env.state().successes().iter().sum::<u64>()
            );
            Ok(())
        },
    )
}

/// Scaling every `N_a` by a common factor leaves `λ` unchanged under `x^α`.
pub fn homogeneity(cases: u32) -> Result<(), String> {
    property(
        cases,
        (
            prop::collection::vec(0.1f64..1e4, 2..6),
            0.1f64..4.0,
            1e-3f64..1e3,
        ),
        |(popularity, alpha, k)| {
            let f = Externality::power(alpha);
            let base = arrival_probs_from_popularity(&popularity, &f);
            let scaled: Vec<f64> = popularity.iter().map(|n| n * k).collect();
            for (a, b) in base.iter().zip(arrival_probs_from_popularity(&scaled, &f)) {
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-15, "{a} vs {b}");
            }
            Ok(())
        },
    )
}

/// While BE is exploring, success counts stay within one of each other.
pub fn be_spread(cases: u32) -> Result<(), String> {
    property(
        cases,
        (
            model(4, 0.2..3.0, 1..=2000),
            0.5f64..4.0,
            prop::option::of(1u64..60),
            any::<u64>(),
        ),
        |(m, beta, n, seed)| {
            let config = m.config();
            let mut be = BalancedExploration::new(config.arms(), config.horizon(), beta, n);
            let mut streams = ReplicationStreams::new(seed, Domain::Policy, 0);
            let mut env = Environment::new(&config);
            let mut candidates = Vec::new();
            for t in 1..=config.horizon() {
                let exploring = be.phase() == BePhase::Exploration;
                let arm = {
                    let obs = env.state().observation();
                    choose(&mut be, t, &obs, &mut candidates, &mut streams.tie_break)
                };
                let out = env.step(arm, &mut streams.env).unwrap();
                be.observe(&out).unwrap();
                if exploring {
                    let s = env.state().successes();
                    let spread = s.iter().max().unwrap() - s.iter().min().unwrap();
                    prop_assert!(spread <= 1, "spread {spread} at t = {t}: {s:?}");
                }
            }
            Ok(())
        },
    )
}

/// BE-AE: `λ_a ≥ c` for active arms under `x^α` with `α ≤ 1`, at least one
/// active arm, a nonincreasing active set, and eliminated arms never pulled.
pub fn beae_active_set(cases: u32) -> Result<(), String> {
    property(
        cases,
        (
            model(4, 0.2..2.5, 1..=1500),
            prop::option::of(0.05f64..3.0),
            any::<u64>(),
        ),
        |(m, p, seed)| {
            let config = m.config();
            let side = SideInformation::new(
                config.theta().to_vec(),
                config.externality().clone(),
                config.horizon(),
            );
            let mut policy = BalancedElimination::new(side, p).unwrap();
            let c = policy.lambda_floor();
            let mut streams = ReplicationStreams::new(seed, Domain::Policy, 0);
            let mut env = Environment::new(&config);
            let mut candidates = Vec::new();
            let mut previous = policy.active().to_vec();
            for t in 1..=config.horizon() {
                if m.alpha <= 1.0 {
                    for a in (0..config.arms()).filter(|&a| policy.active()[a]) {
                        let lambda = env.arrival_prob(a);
                        prop_assert!(
                            lambda >= c * (1.0 - 1e-12),
                            "λ_{a} = {lambda} < c = {c} at t = {t}"
                        );
                    }
                }
                let arm = {
                    let obs = env.state().observation();
                    choose(
                        &mut policy,
                        t,
                        &obs,
                        &mut candidates,
                        &mut streams.tie_break,
                    )
                };
                prop_assert!(
                    policy.active()[arm],
                    "pulled eliminated arm {arm} at t = {t}"
                );
                let out = env.step(arm, &mut streams.env).unwrap();
                policy.observe(&out).unwrap();
                let now = policy.active().to_vec();
                prop_assert!(now.iter().any(|&a| a), "active set emptied at t = {t}");
                for a in 0..now.len() {
                    prop_assert!(previous[a] || !now[a], "arm {a} re-activated at t = {t}");
                }
                previous = now;
            }
            Ok(())
        },
    )
}

/// An unpulled arm is always among UCB's candidates.
pub fn ucb_pulls_unseen_arms_first(cases: u32) -> Result<(), String> {
    property(
        cases,
        (model(5, 0.2..3.0, 1..=200), 0.5f64..5.0, any::<u64>()),
        |(m, gamma, seed)| {
            let config = m.config();
            let desc = PolicyDescriptor::Ucb { gamma };
            let mut policy = desc.build(&config).unwrap();
            let mut streams = ReplicationStreams::new(seed, Domain::Policy, 0);
            let mut env = Environment::new(&config);
            let mut candidates = Vec::new();
            for t in 1..=config.horizon() {
                let arm = {
                    let obs = env.state().observation();
                    choose(
                        policy.as_mut(),
                        t,
                        &obs,
                        &mut candidates,
                        &mut streams.tie_break,
                    )
                };
                if env.state().pulls().contains(&0) {
                    prop_assert_eq!(env.state().pulls()[arm], 0, "t = {}", t);
                }
                let out = env.step(arm, &mut streams.env).unwrap();
                policy.observe(&out).unwrap();
            }
            Ok(())
        },
    )
}

/// REC's exploration pulls depend only on the tie-break stream, not on
/// rewards.
pub fn rec_exploration_ignores_rewards(cases: u32) -> Result<(), String> {
    property(
        cases,
        (model(4, 0.2..3.0, 1..=300), 0u64..300, any::<u64>()),
        |(m, tau, seed)| {
            let config = m.config();
            let run = |env_seed: u64| {
                let mut rec =
                    RandomExploreCommit::new(config.arms(), TauRule::Fixed(tau), config.horizon());
                let mut tie = stream(seed, Domain::Policy, Role::TieBreak, 0);
                let mut rewards = stream(env_seed, Domain::Policy, Role::Environment, 0);
                let mut env = Environment::new(&config);
                let mut candidates = Vec::new();
                let mut arms = Vec::new();
                for t in 1..=config.horizon().min(tau) {
                    let arm = {
                        let obs = env.state().observation();
                        choose(&mut rec, t, &obs, &mut candidates, &mut tie)
                    };
                    let out = env.step(arm, &mut rewards).unwrap();
                    rec.observe(&out).unwrap();
                    arms.push(arm);
                }
                arms
            };
            prop_assert_eq!(
                run(seed.wrapping_add(1)),
                run(seed.wrapping_mul(31).wrapping_add(7))
            );
            Ok(())
        },
    )
}

/// Identical seeds give identical records; identical pull sequences give
/// identical state trajectories.
pub fn determinism(cases: u32) -> Result<(), String> {
    property(
        cases,
        (
            model(3, 0.2..3.0, 1..=300),
            policy(),
            any::<u64>(),
            0u64..1000,
        ),
        |(m, desc, seed, rep)| {
            let config = m.config();
            let a = simulate(&config, &desc, seed, Domain::Policy, rep, true).unwrap();
            let b = simulate(&config, &desc, seed, Domain::Policy, rep, true).unwrap();
            prop_assert_eq!(&a, &b);

            let pulls: Vec<usize> = (0..config.horizon())
                .map(|t| (t as usize * 7 + 3) % config.arms())
                .collect();
            let trajectory = || {
                let mut rng = stream(seed, Domain::Policy, Role::Environment, rep);
                let mut env = Environment::new(&config);
                let mut states: Vec<EnvState> = Vec::new();
                for &arm in &pulls {
                    env.step(arm, &mut rng).unwrap();
                    states.push(env.state().clone());
                }
                states
            };
            prop_assert_eq!(trajectory(), trajectory());
            Ok(())
        },
    )
}

/// Serial and multi-threaded execution produce identical records.
pub fn parallel_equals_serial(cases: u32) -> Result<(), String> {
    property(
        cases,
        (
            model(3, 0.2..3.0, 1..=120),
            policy(),
            any::<u64>(),
            1u64..12,
        ),
        |(m, desc, seed, reps)| {
            let spec = ExperimentSpec::new(m.config(), desc, reps, seed);
            let serial = run_replications(&spec, Execution::Serial).unwrap();
            let parallel = run_replications(&spec, Execution::ParallelWith(3)).unwrap();
            prop_assert_eq!(serial, parallel);
            Ok(())
        },
    )
}

/// `lower ≤ upper`, and both sums are stable under reversed summation order.
pub fn oracle_bounds_ordered(cases: u32) -> Result<(), String> {
    property(
        cases,
        (model(4, 0.05..4.0, 1..=20_000), any::<u64>()),
        |(m, _)| {
            let config = m.config();
            let forward =
                analytic::oracle_bounds_ordered(&config, config.horizon(), SummationOrder::Forward)
                    .unwrap();
            let reverse =
                analytic::oracle_bounds_ordered(&config, config.horizon(), SummationOrder::Reverse)
                    .unwrap();
            prop_assert!(forward.lower <= forward.upper, "{forward:?}");
            for (x, y) in [
                (forward.lower, reverse.lower),
                (forward.upper, reverse.upper),
            ] {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
            }
            Ok(())
        },
    )
}

/// The random-pull ratio limit depends on `μ` only through ratios.
pub fn ratio_limit_scale_free(cases: u32) -> Result<(), String> {
    property(
        cases,
        (model(4, 0.05..0.95, 1..=10), 0.05f64..=1.0),
        |(mut m, k)| {
            m.theta = m.theta.iter().map(|t| t.round().max(1.0)).collect();
            let base = analytic::random_pull_ratio_limit(&m.config()).unwrap();
            m.mu = m.mu.iter().map(|x| x * k).collect();
            let scaled = analytic::random_pull_ratio_limit(&m.config()).unwrap();
            for ((a, x), (b, y)) in base.iter().zip(&scaled) {
                prop_assert_eq!(a, b);
                prop_assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} vs {y}");
            }
            Ok(())
        },
    )
}

/// The arrival probabilities computed from a state match the environment's.
pub fn arrival_probs_agree(cases: u32) -> Result<(), String> {
    property(
        cases,
        (model(4, 0.2..3.0, 1..=50), any::<u64>()),
        |(m, seed)| {
            let config = m.config();
            let mut rng = stream(seed, Domain::Policy, Role::Environment, 0);
            let mut env = Environment::new(&config);
            for t in 0..config.horizon() {
                env.step(t as usize % config.arms(), &mut rng).unwrap();
                let direct = arrival_probs(env.state(), &config).unwrap();
                prop_assert_eq!(direct, env.arrival_probs());
            }
            Ok(())
        },
    )
}

pub type Suite = fn(u32) -> Result<(), String>;

/// Every invariant with its name.
pub const SUITES: [(&str, Suite); 11] = [
    ("env accounting", env_accounting),
    ("arrival homogeneity", homogeneity),
    ("arrival probabilities agree", arrival_probs_agree),
    ("BE spread <= 1", be_spread),
    ("BE-AE floor and active set", beae_active_set),
    ("UCB unseen arms first", ucb_pulls_unseen_arms_first),
    (
        "REC exploration ignores rewards",
        rec_exploration_ignores_rewards,
    ),
    ("determinism under seed", determinism),
    ("parallel equals serial", parallel_equals_serial),
    ("oracle bounds ordered and stable", oracle_bounds_ordered),
    ("ratio limit scale-free", ratio_limit_scale_free),
];
