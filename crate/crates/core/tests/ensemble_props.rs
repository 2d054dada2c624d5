use proptest::prelude::*;
use xorsat_core::ensemble::{block_partition, count_short_cycles, sample_instance, Instance};

fn params() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..6)
        .prop_flat_map(|k| (Just(k), k + 1..k + 5, 1usize..25, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instances_are_regular((k, d, b, seed) in params()) {
        let inst = sample_instance(k, d, b, seed).unwrap();
        prop_assert_eq!((inst.m(), inst.n()), (d * b, k * b));
        inst.check_regularity().unwrap();
        // One variable per layer in every constraint.
        for w in 0..inst.m() {
            let vars = inst.constraint_vars(w);
            for (i, &x) in vars.iter().enumerate() {
                prop_assert_eq!(x / b, i);
            }
        }
    }

    #[test]
    fn partition_covers_every_constraint_once((k, d, b, seed) in params()) {
        let inst = sample_instance(k, d, b, seed).unwrap();
        let part = block_partition(&inst);
        part.validate(&inst).unwrap();
        prop_assert_eq!(part.blocks.len(), b);
        let owner = part.block_of(inst.m());
        prop_assert!(owner.iter().all(|&o| o < b));
    }

    #[test]
    fn sampling_is_a_pure_function_of_the_seed((k, d, b, seed) in params()) {
        let a = sample_instance(k, d, b, seed).unwrap();
        prop_assert_eq!(&a, &sample_instance(k, d, b, seed).unwrap());
        prop_assert_eq!(&Instance::from_json(&a.to_json()).unwrap(), &a);
    }

    #[test]
    fn four_cycles_match_pair_overlaps((k, d, b, seed) in params()) {
        let inst = sample_instance(k, d, b, seed).unwrap();
        // Brute force: pairs of constraints sharing t variables contribute C(t,2).
        let mut brute = 0u64;
        for u in 0..inst.m() {
            for w in u + 1..inst.m() {
                let t = inst.constraint_vars(u).iter().filter(|x| inst.constraint_vars(w).contains(x)).count() as u64;
                brute += t * t.saturating_sub(1) / 2;
            }
        }
        prop_assert_eq!(count_short_cycles(&inst, 2).unwrap(), brute);
    }
}
