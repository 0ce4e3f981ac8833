use chemnmf::diagnostics::{
    escape_probability, layer_barriers, initial_divergence, multilayer_vs_single_survival,
    survival_probability, BarrierParams,
};
use chemnmf::{solve_chem_nmf, LayerSpec, NonNegMatrix, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(seed: u64, rows: usize, cols: usize) -> NonNegMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NonNegMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect())
        .unwrap()
}

#[test]
fn report_bookkeeping_on_real_cascades() {
    for seed in 0..20 {
        let y = data(seed, 15, 18);
        let cfg = SolverConfig::new(0.5, seed).unwrap().with_max_iter(150);
        let spec = LayerSpec::new(vec![6, 4, 3, 2], 0.5, cfg).unwrap();
        let result = solve_chem_nmf(&y, &spec).unwrap();
        let params = BarrierParams { beta: 1e-2, z: None };
        let report = layer_barriers(&result, &params, initial_divergence(&result)).unwrap();
        let mut sum = 0.0;
        for l in &report.layers {
            assert!(l.max_divergence >= l.final_divergence);
            sum += l.barrier;
        }
        assert_eq!(report.cumulative_barrier, sum);
        // Monotone traces start the chain at zero.
        assert_eq!(report.layers[0].barrier, 0.0);
        let max_p = report.escape_probabilities().into_iter().fold(0.0, f64::max);
        assert!((max_p - 1.0).abs() < 1e-12);
        if report.layers.iter().all(|l| l.barrier >= 0.0) {
            assert!(report.cumulative_barrier >= report.layers[0].barrier);
        }
    }
}

#[test]
fn trivial_survival_comparison_is_identical() {
    let y = data(3, 10, 12);
    let cfg = SolverConfig::new(0.5, 42).unwrap().with_max_iter(100);
    let spec = LayerSpec::new(vec![3], 0.5, cfg).unwrap();
    let params = BarrierParams { beta: 1.0, z: Some(3.0) };
    let c = multilayer_vs_single_survival(&y, &spec, 1, &params, 42).unwrap();
    assert_eq!(c.survival_ml, c.survival_sl);
    assert_eq!(c.survival_ml, 1.0 - 1.0 / 3.0);
}

proptest! {
    #[test]
    fn boltzmann_ratio(a in -20.0f64..20.0, b in -20.0f64..20.0, beta in 0.01f64..2.0, z in 0.5f64..5.0) {
        let pa = escape_probability(a, beta, z);
        let pb = escape_probability(b, beta, z);
        prop_assert!((pa * (beta * (a - b)).exp() - pb).abs() <= 1e-12 * pb.max(1e-300).max(1.0));
    }

    #[test]
    fn survival_monotone_in_each_probability(
        ps in proptest::collection::vec(0.0f64..1.0, 1..8),
        idx in 0usize..8,
        bump in 0.0f64..1.0,
    ) {
        let i = idx % ps.len();
        let base = survival_probability(&ps).unwrap();
        let mut raised = ps.clone();
        raised[i] += (1.0 - raised[i]) * bump;
        prop_assert!(survival_probability(&raised).unwrap() <= base + 1e-15);
    }

    #[test]
    fn constant_probability_survival(p in 0.0f64..1.0, n in 0usize..30) {
        let s = survival_probability(&vec![p; n]).unwrap();
        let repeated = (0..n).fold(1.0, |acc, _| acc * (1.0 - p));
        prop_assert_eq!(s, repeated);
        // powi squares repeatedly, so it may differ in the last bits.
        prop_assert!((s - (1.0 - p).powi(n as i32)).abs() <= 1e-14 * s.max(f64::MIN_POSITIVE));
    }
}
