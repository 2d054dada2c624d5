use proptest::prelude::*;
use xorsat_lab::config::{ExperimentConfig, Verb};

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        proptest::option::of(2usize..8),
        proptest::option::of(3usize..10),
        proptest::option::of(1usize..500),
        proptest::option::of(any::<u64>()),
        proptest::option::of(proptest::collection::vec(any::<u64>(), 1..4)),
        proptest::option::of(1u64..100_000),
        proptest::option::of(1usize..8),
    )
        .prop_map(|(k, d, b, seed, seeds, sweeps, p)| ExperimentConfig {
            verb: Some(Verb::Solve),
            k,
            d,
            b,
            seed,
            seeds,
            sweeps,
            p,
            ..Default::default()
        })
}

proptest! {
    #[test]
    fn json_roundtrip(cfg in config()) {
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn flags_win_over_file(file in config(), flags in config()) {
        let merged = file.clone().overlay(flags.clone());
        prop_assert_eq!(merged.k, flags.k.or(file.k));
        prop_assert_eq!(merged.b, flags.b.or(file.b));
        prop_assert_eq!(merged.sweeps, flags.sweeps.or(file.sweeps));
        prop_assert_eq!(merged.seeds, flags.seeds.or(file.seeds));
    }

    #[test]
    fn n_must_equal_k_times_b(k in 2usize..8, b in 1usize..200, n in 1usize..2000) {
        let cfg = ExperimentConfig { verb: Some(Verb::Solve), k: Some(k), b: Some(b), n: Some(n), ..Default::default() };
        prop_assert_eq!(cfg.validate().is_ok(), n == k * b);
    }

    #[test]
    fn seed_list_is_never_empty(cfg in config()) {
        prop_assert!(!cfg.seed_list().is_empty());
    }
}
