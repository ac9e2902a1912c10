//! Randomized invariants over the sizing formulas, the split logic and the
//! pruning threshold rule.

use proptest::prelude::*;

use ndarray::Array2;
use odf2nna::data::{split, synth_classification, ClassSynthKind};
use odf2nna::nn::{init_network, Activation, LayerSpec, TaskKind};
use odf2nna::pruning::{capture_unit_stats, select_useful_units, CompensationMode};
use odf2nna::sizing::{
    compute_layer_width, paper_param_count, true_param_count, SizingInput, SizingMode,
};

proptest! {
    #[test]
    fn sizing_budget_inequalities(
        np in 1usize..2_000_000,
        d in 1usize..300,
        nl in 1usize..5,
        nc in 1usize..12,
    ) {
        for mode in [SizingMode::Paper, SizingMode::Exact] {
            let Ok(nu) = compute_layer_width(SizingInput { np, d, nl, nc, mode }) else {
                prop_assert!(np <= nc);
                continue;
            };
            let count = |n: usize| match mode {
                SizingMode::Paper => paper_param_count(n, d, nl, nc),
                SizingMode::Exact => true_param_count(n, d, nl, nc),
            };
            // within budget unless the clamp to width 1 had to fire
            prop_assert!(count(nu) <= np || nu == 1);
            prop_assert!(count(nu + 1) > np);
        }
    }

    #[test]
    fn width_is_monotone_in_examples(
        np in 20usize..100_000,
        extra in 1usize..50_000,
        d in 1usize..100,
        nl in 1usize..4,
        nc in 2usize..8,
    ) {
        for mode in [SizingMode::Paper, SizingMode::Exact] {
            let small = compute_layer_width(SizingInput { np, d, nl, nc, mode });
            let large = compute_layer_width(SizingInput { np: np + extra, d, nl, nc, mode });
            if let (Ok(a), Ok(b)) = (small, large) {
                prop_assert!(b >= a);
            }
        }
    }

    #[test]
    fn splits_partition_the_dataset(
        n in 30usize..300,
        seed in 0u64..1000,
        stratified in any::<bool>(),
    ) {
        let ds = synth_classification(
            ClassSynthKind::Blobs { classes: 3 }, n.max(30), 4, 0.5, 7,
        ).unwrap();
        let ds = split(&ds, (0.6, 0.2, 0.2), stratified, seed).unwrap();
        let mut all: Vec<usize> = ds
            .splits
            .train
            .iter()
            .chain(&ds.splits.validation)
            .chain(&ds.splits.test)
            .cloned()
            .collect();
        all.sort_unstable();
        let expected: Vec<usize> = (0..ds.n()).collect();
        prop_assert_eq!(all, expected);
    }

    #[test]
    fn keep_sets_nest_as_epsilon_grows(
        seed in 0u64..500,
        eps_lo in 1e-4f64..0.5,
        ratio in 1.01f64..10.0,
    ) {
        let net = init_network(
            &[
                LayerSpec::new(3, 6, Activation::Tanh),
                LayerSpec::new(6, 5, Activation::Sigmoid),
                LayerSpec::new(5, 2, Activation::Softmax),
            ],
            TaskKind::Classification(2),
            seed,
        ).unwrap();
        let eval = Array2::from_shape_fn((40, 3), |(i, j)| {
            ((seed as f64) + (i * 3 + j) as f64 * 0.37).sin() * 1.5
        });
        let stats = capture_unit_stats(&net, &eval).unwrap();
        let lo = select_useful_units(&stats, eps_lo, CompensationMode::Weighted).unwrap();
        let hi = select_useful_units(&stats, eps_lo * ratio, CompensationMode::Weighted).unwrap();
        for (a, b) in hi.keep.iter().flatten().zip(lo.keep.iter().flatten()) {
            // kept at the higher threshold implies kept at the lower one
            prop_assert!(!*a || *b);
        }
        prop_assert!(hi.kept_total() <= lo.kept_total());
    }

    #[test]
    fn init_is_seed_deterministic(seed in 0u64..10_000) {
        let specs = [
            LayerSpec::new(4, 7, Activation::Relu),
            LayerSpec::new(7, 3, Activation::Softmax),
        ];
        let a = init_network(&specs, TaskKind::Classification(3), seed).unwrap();
        let b = init_network(&specs, TaskKind::Classification(3), seed).unwrap();
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            prop_assert_eq!(&la.weights, &lb.weights);
            prop_assert_eq!(&la.bias, &lb.bias);
        }
    }
}
