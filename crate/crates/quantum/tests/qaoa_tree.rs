use std::f64::consts::PI;
use xorsat_core::rng;
use xorsat_quantum::qaoa::*;

fn random_params(g: &mut impl rand::RngCore, p: usize) -> QaoaParams {
    let gammas = (0..p).map(|_| PI * (2.0 * rng::unit_f64(g) - 1.0)).collect();
    let betas = (0..p).map(|_| PI * (rng::unit_f64(g) - 0.5)).collect();
    QaoaParams::new(gammas, betas).unwrap()
}

#[test]
fn tree_agrees_with_statevector_3_4() {
    let graph = LightConeGraph::tree(3, 4, 1, DEFAULT_MAX_QUBITS).unwrap();
    assert_eq!(graph.qubits(), 21);
    let sim = LightConeSimulator::new(&graph, DEFAULT_MAX_QUBITS).unwrap();
    let mut g = rng::stream(2024, 0);
    for _ in 0..50 {
        let params = random_params(&mut g, 1);
        let t = tree_energy(3, 4, &params).unwrap();
        let o = sim.energy(&params).unwrap();
        assert!((t - o).abs() < 1e-9, "{params:?}: {t} vs {o}");
    }
}

#[test]
fn tree_agrees_with_statevector_deeper_small_trees() {
    let mut g = rng::stream(2024, 1);
    for (k, d, p) in [(2, 3, 2), (3, 2, 2), (2, 2, 4), (2, 2, 5)] {
        let graph = LightConeGraph::tree(k, d, p, DEFAULT_MAX_QUBITS).unwrap();
        let sim = LightConeSimulator::new(&graph, DEFAULT_MAX_QUBITS).unwrap();
        for _ in 0..5 {
            let params = random_params(&mut g, p);
            let t = tree_energy(k, d, &params).unwrap();
            let o = sim.energy(&params).unwrap();
            assert!((t - o).abs() < 1e-9, "({k},{d},{p}) {t} vs {o}");
        }
    }
}

#[test]
fn relabeling_qubits_leaves_energy_unchanged() {
    let graph = LightConeGraph::tree(2, 3, 2, DEFAULT_MAX_QUBITS).unwrap();
    let mut g = rng::stream(9, 0);
    let perm = rng::permutation(&mut g, graph.qubits());
    let shuffled = graph.relabel(&perm).unwrap();
    let params = random_params(&mut g, 2);
    let a = LightConeSimulator::new(&graph, 28).unwrap().energy(&params).unwrap();
    let b = LightConeSimulator::new(&shuffled, 28).unwrap().energy(&params).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn oversized_light_cone_is_rejected() {
    let params = QaoaParams::zeros(2);
    assert!(matches!(
        lightcone_statevector_energy(3, 4, &params),
        Err(xorsat_quantum::Error::LightConeTooLarge { qubits: 129, .. })
    ));
}

#[test]
fn p1_optimum_matches_grid_search() {
    let best = optimize(3, 6, 1, 4, 3).unwrap();
    let mut grid_best = 0.0f64;
    let steps = 400;
    for i in 0..=steps {
        for j in 0..=steps {
            let gamma = 0.6 * i as f64 / steps as f64;
            let beta = (PI / 2.0) * j as f64 / steps as f64;
            let e = tree_energy(3, 6, &QaoaParams::new(vec![gamma], vec![beta]).unwrap()).unwrap();
            grid_best = grid_best.max(e);
        }
    }
    // The grid is a lower bound; a local refinement from its optimum must
    // agree with the optimizer.
    assert!(best.satisfied_fraction >= grid_best - 1e-9);
    assert!(best.satisfied_fraction - grid_best < 1e-5, "{} {}", best.satisfied_fraction, grid_best);
}

#[test]
fn more_restarts_never_hurt() {
    let opts = |restarts| OptimizeOptions { restarts, seed: 17, ..Default::default() };
    let a = optimize_path(3, 4, 2, &opts(1)).unwrap();
    let b = optimize_path(3, 4, 2, &opts(3)).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(y.satisfied_fraction >= x.satisfied_fraction);
    }
    assert!(b[1].satisfied_fraction >= b[0].satisfied_fraction);
}

#[test]
fn optimizer_is_deterministic() {
    let a = optimize(2, 3, 2, 2, 5).unwrap();
    let b = optimize(2, 3, 2, 2, 5).unwrap();
    assert_eq!(a, b);
}
