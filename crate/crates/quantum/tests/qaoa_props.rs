use proptest::prelude::*;
use std::f64::consts::PI;
use xorsat_quantum::qaoa::*;

fn params(g: Vec<f64>, b: Vec<f64>) -> QaoaParams {
    QaoaParams::new(g, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodic_in_gamma_and_beta(k in 2usize..=4, d in 2usize..=6, p in 1usize..=3,
                                  angles in proptest::collection::vec(-3.0f64..3.0, 6), which in 0usize..3) {
        let g: Vec<f64> = angles[..p].to_vec();
        let b: Vec<f64> = angles[3..3 + p].to_vec();
        let base = tree_energy(k, d, &params(g.clone(), b.clone())).unwrap();
        let j = which % p;
        let mut g2 = g.clone();
        g2[j] += 2.0 * PI;
        let mut b2 = b.clone();
        b2[j] += PI;
        prop_assert!((tree_energy(k, d, &params(g2, b.clone())).unwrap() - base).abs() < 1e-9);
        prop_assert!((tree_energy(k, d, &params(g.clone(), b2)).unwrap() - base).abs() < 1e-9);
        // Time reversal: negating every angle conjugates all amplitudes.
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        prop_assert!((tree_energy(k, d, &params(neg(&g), neg(&b))).unwrap() - base).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn tree_matches_oracle_on_small_cones(k in 2usize..=3, gamma in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let d = 3;
        let pr = params(vec![gamma], vec![beta]);
        let t = tree_energy(k, d, &pr).unwrap();
        let o = lightcone_statevector_energy(k, d, &pr).unwrap();
        prop_assert!((t - o).abs() < 1e-9);
    }
}
