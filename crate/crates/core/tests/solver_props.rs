use proptest::prelude::*;
use xorsat_core::bp::{bp_decode, random_codeword};
use xorsat_core::ensemble::{sample_instance, Instance};
use xorsat_core::fgum::{critical_rate, threshold_scan};
use xorsat_core::solvers::{greedy, prange, simulated_annealing, turbo_prange, SAConfig};
use xorsat_core::{rng, GF2Vector};

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..5, 1usize..4, 2usize..30, any::<u64>())
        .prop_map(|(k, extra, b, seed)| sample_instance(k, k + extra, b, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reported_scores_recount(inst in instance(), seed in any::<u64>()) {
        let sa = SAConfig { sweeps: 30, seeds: 2, seed, ..Default::default() };
        for r in [
            prange(&inst, seed),
            turbo_prange(&inst, seed, false),
            turbo_prange(&inst, seed, true),
            greedy(&inst, &GF2Vector::zeros(inst.n()), seed).unwrap(),
            simulated_annealing(&inst, &sa).unwrap(),
        ] {
            prop_assert!(r.verify(&inst));
            prop_assert_eq!(r.satisfied, inst.satisfied(&r.assignment));
            prop_assert!((r.score - r.satisfied as f64 / inst.m() as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn prange_satisfies_at_least_its_packed_equations(inst in instance(), seed in any::<u64>()) {
        let r = prange(&inst, seed);
        prop_assert!(r.satisfied >= r.packed_equations.unwrap());
        let t = turbo_prange(&inst, seed, false);
        prop_assert!(t.satisfied >= t.packed_equations.unwrap());
    }

    #[test]
    fn greedy_never_loses_ground(inst in instance(), seed in any::<u64>()) {
        let start = GF2Vector::random(inst.n(), &mut rng::stream(seed, 3));
        let r = greedy(&inst, &start, seed).unwrap();
        prop_assert!(r.satisfied >= inst.satisfied(&start));
    }

    // Flipping a codeword into the received word flips the decision and nothing else.
    #[test]
    fn bp_is_codeword_symmetric(inst in instance(), seed in any::<u64>(), crossover in 0.01f64..0.2) {
        let mut noise = GF2Vector::zeros(inst.m());
        let mut g = rng::stream(seed, 0);
        for w in 0..inst.m() {
            if rng::unit_f64(&mut g) < crossover {
                noise.flip(w);
            }
        }
        let c = random_codeword(&inst, seed);
        prop_assert!(inst.bt_matrix().mat_vec(&c).unwrap().is_zero());
        let mut received = noise.clone();
        received.xor_assign(&c).unwrap();
        let a = bp_decode(&inst, &noise, crossover, 30).unwrap();
        let b = bp_decode(&inst, &received, crossover, 30).unwrap();
        let mut shifted = a.decoded.clone();
        shifted.xor_assign(&c).unwrap();
        prop_assert_eq!(b.decoded, shifted);
        prop_assert_eq!((a.converged, a.iterations), (b.converged, b.iterations));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn erasure_success_is_monotone_in_rate(k in 2usize..5, extra in 1usize..4, seed in any::<u64>()) {
        let rates: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let curve = threshold_scan(k, k + extra, 40, &rates, 12, seed).unwrap();
        prop_assert!(curve.successes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(curve.successes[0], 12);
        prop_assert!(curve.critical_rates.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn critical_rate_in_unit_interval(inst in instance(), seed in any::<u64>()) {
        let r = critical_rate(&inst, seed);
        prop_assert!((0.0..=1.0).contains(&r));
    }
}
