use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use xorsat_core::theory::{
    alpha_min, alpha_perp, bp_score_from_threshold, build_id, e_max, fgum_score, i_hat_star_exact, p0, prange_score,
    sigma_d_exact, turbo_prange_score,
};

#[test]
fn sigma_identity_in_exact_arithmetic() {
    for d in 2..=24usize {
        let two_pow = BigRational::new(BigInt::one(), BigInt::one() << (d - 1));
        let rhs = BigRational::from_integer(BigInt::from(d)) + (two_pow - BigRational::one()) * i_hat_star_exact(d).unwrap();
        assert_eq!(sigma_d_exact(d).unwrap(), rhs, "D={d}");
    }
}

#[test]
fn coset_leader_weight_matches_enumeration() {
    for d in 2..=16usize {
        let id = build_id(d).unwrap();
        id.verify().unwrap();
        let mean = BigRational::new(BigInt::from(id.total_weight()), BigInt::from((1u64 << (d - 1)) - 1));
        assert_eq!(mean, i_hat_star_exact(d).unwrap(), "D={d}");
    }
}

proptest! {
    #[test]
    fn fgum_and_turbo_prange_coincide(k in 3usize..12, extra in 1usize..12) {
        let d = k + extra;
        let (f, t) = (fgum_score(k, d).unwrap(), turbo_prange_score(k, d).unwrap());
        prop_assert!((f - t).abs() < 1e-12, "({k},{d}) {f} {t}");
        let e = e_max(k, d).unwrap();
        prop_assert!(e > 0.0 && e < 1.0);
        let residual = e - e / d as f64 - (k - 1) as f64 / d as f64 * (1.0 - (1.0 - e).powi(d as i32));
        prop_assert!(residual.abs() < 1e-12);
        prop_assert!((p0(alpha_min(k, d).unwrap(), d).unwrap() - (1.0 - e)).abs() < 1e-12);
        prop_assert!((prange_score(k, d).unwrap() - 0.5 * (1.0 + k as f64 / d as f64)).abs() < 1e-15);
    }

    #[test]
    fn bp_score_inverts_alpha_perp(alpha in 0.0f64..0.5) {
        let eps = alpha_perp(alpha).unwrap();
        prop_assert!((bp_score_from_threshold(eps).unwrap() - (1.0 - alpha)).abs() < 1e-12);
    }
}
