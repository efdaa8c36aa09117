mod common;

use common::*;
use midecon::eval::fnmr_at_fmr;
use midecon::neuralnet::NetworkParams;
use midecon::reliability::{mod_pairwise, mod_variance, moc, StochasticPrediction};
use midecon::rng::SplitMix64;
use proptest::prelude::*;

#[test]
fn reliability_math_matches_double_loops() {
    let mut g = SplitMix64::new(3);
    for _ in 0..200 {
        let v: Vec<f64> = (0..100).map(|_| g.next_f64()).collect();
        let x = StochasticPrediction::new(v.clone()).unwrap();
        assert!((moc(&x) - mean_oracle(&v)).abs() <= 1e-12);
        assert!((mod_pairwise(&x) - pairwise_oracle(&v)).abs() <= 1e-12);
        assert!((mod_variance(&x) - variance_oracle(&v)).abs() <= 1e-12);
        assert!((mod_variance(&x) - 0.5 * ordered_pair_sq_oracle(&v)).abs() <= 1e-12);
    }
}

#[test]
fn constant_and_two_point_predictions() {
    let c = StochasticPrediction::new(vec![0.4; 50]).unwrap();
    assert_eq!(mod_pairwise(&c), 0.0);
    assert!(mod_variance(&c) < 1e-30);
    let two = StochasticPrediction::new(vec![0.0, 1.0]).unwrap();
    assert_eq!(mod_pairwise(&two), 1.0);
    assert_eq!(mod_variance(&two), 0.25);
}

#[test]
fn gradients_match_central_differences() {
    for seed in 0..4 {
        let net = random_network(seed);
        let r = grad_check(&net, 100 + seed, 1e-4, 1);
        assert!(r.max() <= 1e-4, "seed {seed}: {:?}", r.worst);
        for kind in ["conv", "relu", "maxpool", "dense", "dropout"] {
            assert!(r.worst.iter().any(|(k, _)| *k == kind), "{kind} not exercised");
        }
    }
}

#[test]
fn default_architecture_gradient_sample() {
    let net = NetworkParams::<f64>::default_architecture(32, 0.3, 9).unwrap();
    let r = grad_check(&net, 1, 1e-4, 97);
    assert!(r.checked > 100);
    assert!(r.max() <= 1e-4, "{:?}", r.worst);
}

#[test]
fn worked_threshold_example() {
    let (g, i) = ([0.9, 0.8, 0.7, 0.2], [0.6, 0.3, 0.1, 0.05]);
    let op = fnmr_at_fmr(&g, &i, 0.25).unwrap();
    assert_eq!((op.threshold, op.fnmr), (0.6, 0.25));
    assert_eq!(threshold_oracle(&g, &i, 0.25), (0.6, 0.25));
}

fn scores() -> impl Strategy<Value = Vec<f64>> {
    // Coarse values make ties common.
    proptest::collection::vec((0u32..=40).prop_map(|v| v as f64 / 40.0), 1..40)
}

proptest! {
    #[test]
    fn threshold_matches_enumeration(g in scores(), i in scores(), fmr in 0.01f64..=1.0) {
        let op = fnmr_at_fmr(&g, &i, fmr).unwrap();
        let (t, f) = threshold_oracle(&g, &i, fmr);
        prop_assert_eq!(op.threshold, t);
        prop_assert_eq!(op.fnmr, f);
        prop_assert_eq!(op.fnmr, best_fnmr_oracle(&g, &i, fmr));
    }
}
