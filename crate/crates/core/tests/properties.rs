//! Property tests for the structural invariants: normalization, oracle
//! equivalence, conservation, absorption, dominance, partition laws,
//! adversary legality over random trajectories, and the bit-exact Null
//! reduction.

use std::collections::BTreeMap;

use proptest::prelude::*;

use trimaj::adversary::{apply, propose, AdversaryKind, AdversarySpec, History};
use trimaj::dynamics::{
    adoption_distribution, brute_force_adoption_distribution, expected_next,
    expected_upper_bound, step_multinomial, step_node_level, TieBreakRule,
};
use trimaj::harness::{run_trial, ExperimentSpec, StopRule};
use trimaj::observer::{classify_terminal, partition_small_big, valid_set, Thresholds};
use trimaj::opinion::{Configuration, NodeAssignment, OpinionId};
use trimaj::rng::seed_for;

fn config_strategy() -> impl Strategy<Value = Configuration> {
    prop::collection::btree_map(0u32..40, 1u64..5000, 1..8).prop_map(|map: BTreeMap<u32, u64>| {
        Configuration::from_supports(map.into_iter().map(|(id, c)| (OpinionId(id), c))).unwrap()
    })
}

proptest! {
    #[test]
    fn adoption_probabilities_normalize(cfg in config_strategy()) {
        let dist = adoption_distribution(&cfg);
        prop_assert!((dist.sum() - 1.0).abs() <= 1e-9);
        for &(_, p) in dist.probs() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        }
    }

    #[test]
    fn closed_form_matches_oracle(cfg in config_strategy()) {
        let closed = adoption_distribution(&cfg);
        let brute = brute_force_adoption_distribution(&cfg, TieBreakRule::FirstSample).unwrap();
        for (&(_, p), &(_, q)) in closed.probs().iter().zip(brute.probs()) {
            prop_assert!((p - q).abs() <= 1e-12, "closed {p} vs brute {q}");
        }
    }

    #[test]
    fn tie_break_does_not_change_the_marginal(cfg in config_strategy()) {
        let first = brute_force_adoption_distribution(&cfg, TieBreakRule::FirstSample).unwrap();
        let uniform =
            brute_force_adoption_distribution(&cfg, TieBreakRule::UniformAmongSample).unwrap();
        for (&(_, p), &(_, q)) in first.probs().iter().zip(uniform.probs()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn both_engines_conserve_population(cfg in config_strategy(), seed in any::<u64>()) {
        let mut rng = seed_for(seed, 0, 0);
        let next = step_multinomial(&cfg, &mut rng);
        prop_assert_eq!(next.population(), cfg.population());

        if cfg.population() <= 2000 {
            let nodes = NodeAssignment::from_configuration(&cfg);
            let stepped = step_node_level(&nodes, TieBreakRule::FirstSample, &mut rng);
            prop_assert_eq!(stepped.len() as u64, cfg.population());
        }
    }

    #[test]
    fn consensus_is_absorbing(n in 1u64..100_000, id in 0u32..50, seed in any::<u64>()) {
        let cfg = Configuration::consensus(n, OpinionId(id)).unwrap();
        let mut rng = seed_for(seed, 1, 0);
        prop_assert_eq!(step_multinomial(&cfg, &mut rng), cfg.clone());
        if n <= 2000 {
            let nodes = NodeAssignment::from_configuration(&cfg);
            let stepped = step_node_level(&nodes, TieBreakRule::FirstSample, &mut rng);
            prop_assert_eq!(stepped.to_configuration(), cfg);
        }
    }

    #[test]
    fn upper_bound_dominates_expectation(cfg in config_strategy()) {
        let expected = expected_next(&cfg);
        for (id, _) in cfg.iter() {
            let bound = expected_upper_bound(&cfg, id).unwrap();
            prop_assert!(bound + 1e-9 >= expected[&id]);
        }
    }

    #[test]
    fn partition_is_a_partition(cfg in config_strategy()) {
        let th = Thresholds::default();
        let valid = valid_set(&cfg);
        let (small, big) = partition_small_big(&cfg, &valid, &th);
        prop_assert!(small.is_disjoint(&big));
        let union: std::collections::BTreeSet<_> = small.union(&big).copied().collect();
        prop_assert_eq!(union, cfg.active_ids().collect());
    }

    #[test]
    fn almost_consensus_is_monotone_in_c_stop(
        cfg in config_strategy(),
        c_small in 0.5f64..2.0,
        extra in 0.1f64..3.0,
    ) {
        let valid = valid_set(&cfg);
        let tight = Thresholds { c_stop: c_small, ..Thresholds::default() };
        let loose = Thresholds { c_stop: c_small + extra, ..Thresholds::default() };
        if classify_terminal(&cfg, &valid, &tight).is_some() {
            prop_assert!(classify_terminal(&cfg, &valid, &loose).is_some());
        }
    }
}

fn adversary_strategy() -> impl Strategy<Value = (AdversaryKind, u64, Option<u32>)> {
    (
        prop::sample::select(vec![
            AdversaryKind::Null,
            AdversaryKind::StaticPlant,
            AdversaryKind::DynamicSustain,
            AdversaryKind::DynamicBalanceBig,
            AdversaryKind::DynamicFeedMinBig,
            AdversaryKind::DynamicRandom,
        ]),
        0u64..40,
        prop::option::of(0u32..60),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every strategy, on every reachable configuration of a random
    /// trajectory, produces a displacement that applies cleanly within
    /// budget.
    #[test]
    fn strategies_always_produce_legal_displacements(
        cfg in config_strategy(),
        (kind, budget, target) in adversary_strategy(),
        seed in any::<u64>(),
    ) {
        let spec = AdversarySpec {
            kind,
            budget,
            target: target.map(OpinionId),
            sustain_level: None,
            thresholds: Thresholds::default(),
        };
        let mut rng = seed_for(seed, 2, 0);
        let mut history = History::new();
        let mut current = cfg;
        for _ in 0..15 {
            let pre = step_multinomial(&current, &mut rng);
            let d = propose(&spec, &history, &pre, &mut rng);
            prop_assert_eq!(d.net(), 0);
            prop_assert!(d.moved_nodes() <= budget);
            prop_assert!(d.total_abs() <= 2 * budget);
            let post = apply(&pre, &d, budget).expect("strategy output must apply");
            prop_assert_eq!(post.population(), pre.population());
            history.push(pre, post.clone());
            current = post;
        }
    }

    /// StaticPlant acts exactly once per run and the planted support never
    /// exceeds the budget at planting time.
    #[test]
    fn static_plant_fires_exactly_once(
        n in 100u64..5000,
        k in 2u32..5,
        budget in 1u64..50,
        seed in any::<u64>(),
    ) {
        let target = OpinionId(99);
        let spec = AdversarySpec::new(AdversaryKind::StaticPlant, budget).with_target(target);
        let mut rng = seed_for(seed, 3, 0);
        let mut history = History::new();
        let mut current = Configuration::uniform(n, k).unwrap();
        let mut nonzero = 0;
        for round in 0..10 {
            let pre = if round == 0 { current.clone() } else { step_multinomial(&current, &mut rng) };
            let d = propose(&spec, &history, &pre, &mut rng);
            if !d.is_zero() {
                nonzero += 1;
                prop_assert_eq!(d.get(target) as u64, budget.min(n));
            }
            let post = apply(&pre, &d, budget).unwrap();
            history.push(pre, post.clone());
            current = post;
        }
        prop_assert_eq!(nonzero, 1);
    }

    /// DynamicSustain never lifts the target by more than F in one round.
    #[test]
    fn sustain_is_budget_limited_per_round(
        n in 1000u64..20_000,
        budget in 1u64..30,
        seed in any::<u64>(),
    ) {
        let target = OpinionId(77);
        let spec = AdversarySpec {
            kind: AdversaryKind::DynamicSustain,
            budget,
            target: Some(target),
            sustain_level: Some(budget),
            thresholds: Thresholds::default(),
        };
        let mut rng = seed_for(seed, 4, 0);
        let mut history = History::new();
        let mut current = Configuration::uniform(n, 3).unwrap();
        for _ in 0..20 {
            let pre = step_multinomial(&current, &mut rng);
            let before = pre.support(target);
            let d = propose(&spec, &history, &pre, &mut rng);
            let post = apply(&pre, &d, budget).unwrap();
            prop_assert!(post.support(target) <= before + budget);
            history.push(pre, post.clone());
            current = post;
        }
    }
}

/// With the Null adversary the harness trajectory is bit-for-bit the pure
/// dynamics driven by the same derived RNG.
#[test]
fn null_adversary_reduces_to_pure_dynamics() {
    let mut spec = ExperimentSpec::single_cell(3000, 3);
    spec.seed = 0xFEED;
    spec.stop = StopRule::Strict;
    let cell = spec.cells()[0];
    for trial in 0..3u64 {
        let result = run_trial(&spec, &cell, trial, true).unwrap();
        let trace = result.trace.unwrap();

        let mut rng = seed_for(spec.seed, cell.index, trial);
        let mut current = Configuration::uniform(3000, 3).unwrap();
        assert_eq!(trace[0].pre_adv, current.canonical_string());
        assert_eq!(trace[0].post_adv, current.canonical_string());
        for record in &trace[1..] {
            current = step_multinomial(&current, &mut rng);
            assert_eq!(record.pre_adv, current.canonical_string());
            assert_eq!(record.post_adv, current.canonical_string());
        }
        assert_eq!(trace.len() as u64, result.outcome.rounds + 1);

        // Non-valid mass is identically zero without an adversary, so
        // mass-type closure violations are impossible.
        assert!(!result.outcome.violations.iter().any(|v| matches!(
            v,
            trimaj::observer::HypHViolation::NonValidMassExceeded { .. }
        )));
    }
}
