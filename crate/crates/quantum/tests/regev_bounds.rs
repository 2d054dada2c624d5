use num_complex::Complex64;
use xorsat_core::GF2Matrix;
use xorsat_quantum::regev::*;

fn leader_supported(code: &Code, seed: u64) -> BiasFunction {
    let leaders = code.coset_leaders();
    BiasFunction::random_with_hadamard_support(code.m(), &leaders, seed).unwrap()
}

#[test]
fn perfect_decoding_reproduces_target_distribution() {
    for (m, n, seed) in [(2, 1, 0), (4, 2, 1), (5, 2, 2), (6, 3, 3)] {
        let code = Code::random(m, n, seed).unwrap();
        let p = leader_supported(&code, seed);
        let dec = DecoderSpec::perfect(&code);
        let (eps, per) = measure_epsilon(&code, &p, &dec).unwrap();
        assert!(eps < 1e-12 && per.iter().all(|e| *e < 1e-12));
        let runs = all_shifts(&code, &p, &dec).unwrap();
        for r in &runs {
            let z: f64 = (0..1usize << m)
                .filter(|&c| code.contains(c))
                .map(|c| p.values()[c ^ r.v].norm_sqr())
                .sum();
            for c in 0..1usize << m {
                let want = if code.contains(c) { p.values()[c ^ r.v].norm_sqr() / z } else { 0.0 };
                assert!((r.algo[c] - want).abs() < 1e-10, "m={m} v={} c={c}", r.v);
                assert!((r.actual[c] - want).abs() < 1e-10);
                assert!((r.target[c] - want).abs() < 1e-10);
            }
            assert!(r.trace_distance < 1e-7);
        }
        let h = fraction_satisfied(m);
        let (bound, dist) = verify_all(&code, &p, &dec, &h).unwrap();
        assert!((bound.lhs - bound.objective).abs() < 1e-10, "{bound:?}");
        assert!(dist.mean_tv_actual_target < 1e-10 && dist.mean_tv_algo_actual < 1e-10);
    }
}

#[test]
fn p_alpha_exact_when_dual_is_trivial() {
    let b = GF2Matrix::from_strs(&["1100", "0110", "0011", "0001"]).unwrap();
    let code = Code::new(&b).unwrap();
    assert_eq!(code.dual(), &[0]);
    for alpha in [0.1, 0.27, 0.5] {
        let p = BiasFunction::p_alpha(4, alpha).unwrap();
        let dec = DecoderSpec::perfect(&code);
        let report = verify_error_bound(&code, &p, &dec, &fraction_satisfied(4)).unwrap();
        assert!(report.epsilon < 1e-15);
        assert!((report.corollary_lhs - (1.0 - alpha)).abs() < 1e-10, "{report:?}");
    }
}

#[test]
fn weighted_target_score_matches_objective() {
    let code = Code::random(5, 2, 11).unwrap();
    let p = BiasFunction::p_alpha(5, 0.2).unwrap();
    let h = fraction_satisfied(5);
    let report = verify_error_bound(&code, &p, &DecoderSpec::zero(5), &h).unwrap();
    assert!((report.weighted_target_score - (1.0 - 0.2)).abs() < 1e-10);
}

#[test]
fn random_decoders_satisfy_all_bounds() {
    let mut count = 0;
    for (m, n, garbage, draws) in [(2, 1, 1, 8), (4, 2, 2, 8), (6, 3, 1, 6)] {
        for i in 0..draws {
            let seed = 100 * m as u64 + i;
            let code = Code::random(m, n, seed).unwrap();
            let p = if i % 2 == 0 {
                BiasFunction::random(m, seed).unwrap()
            } else {
                BiasFunction::p_alpha(m, 0.05 + 0.05 * i as f64).unwrap()
            };
            let strength = 0.1 + 0.8 * (i as f64) / draws as f64;
            let dec = DecoderSpec::random(&code, garbage, strength, seed).unwrap();
            let mut h: Vec<f64> = (0..1usize << m).map(|x| ((x * 37 + i as usize) % 11) as f64 / 10.0).collect();
            h[0] = 1.0;
            let (bound, dist) = verify_all(&code, &p, &dec, &h).unwrap();
            println!(
                "m={m} strength={strength:.2} eps={:.4} slack={:.4} td={:.4}/{:.4} tv_algo={:.4}",
                bound.epsilon, bound.slack, dist.mean_trace_distance, bound.epsilon.sqrt(), dist.mean_tv_algo_actual
            );
            assert!(bound.holds && bound.corollary_holds, "{bound:?}");
            assert!(dist.trace_bound_holds && dist.tv_bound_holds && dist.algo_bound_holds, "{dist:?}");
            assert!(dist.worst_tv_excess <= 1e-12);
            let runs = all_shifts(&code, &p, &dec).unwrap();
            for r in &runs {
                assert!((r.postselect_prob - (1.0 - bound.epsilon)).abs() < 1e-10);
                let lemma = 1.0 / (code.dual().len() as f64 * (1.0 - bound.epsilon)).sqrt();
                assert!((r.n_dec - lemma).abs() < 1e-10);
                assert!(r.step_norms.iter().all(|x| (x - 1.0).abs() < 1e-12), "{:?}", r.step_norms);
                assert!(r.residual_first < 1e-12);
            }
            count += 1;
        }
    }
    assert!(count >= 20);
}

#[test]
fn interpolated_decoder_epsilon_closed_form() {
    // Π^θ moves the output to d with probability sin²(πθ/2) unless d = 0.
    let code = Code::random(4, 2, 5).unwrap();
    let p = leader_supported(&code, 5);
    let dual = code.dual().len() as f64;
    let target = 0.04;
    let theta = 2.0 / std::f64::consts::PI * (target / (1.0 - 1.0 / dual)).sqrt().acos();
    let dec = DecoderSpec::interpolated(&code, theta);
    let (eps, _) = measure_epsilon(&code, &p, &dec).unwrap();
    assert!((eps - target).abs() < 1e-12, "{eps}");
    let (bound, dist) = verify_all(&code, &p, &dec, &fraction_satisfied(4)).unwrap();
    assert!(dist.mean_trace_distance <= 0.2 + 1e-12, "{dist:?}");
    assert!(bound.holds && dist.tv_bound_holds && dist.algo_bound_holds);
}

#[test]
fn explicit_bias_function_roundtrip() {
    let vals: Vec<Complex64> = (0..4).map(|i| Complex64::new(0.5, 0.0) * Complex64::from_polar(1.0, i as f64)).collect();
    let p = BiasFunction::new(vals.clone()).unwrap();
    let q = BiasFunction::from_hadamard(p.hadamard().to_vec()).unwrap();
    for (a, b) in q.values().iter().zip(&vals) {
        assert!((a - b).norm() < 1e-12);
    }
    assert!(BiasFunction::new(vec![Complex64::new(1.0, 0.0); 4]).is_err());
}
