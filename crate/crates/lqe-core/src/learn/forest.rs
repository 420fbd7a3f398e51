//! Random forest: bootstrap-aggregated CARTs with random feature subsets.

use alloc::vec::Vec;

use rand::Rng;

use super::tree::{grow_tree, Tree};
use super::{FeatureMatrix, ForestParams};
use crate::math;
use crate::rng::{stream, stream_rng};

/// Fits `n_trees` unpruned CARTs. Tree `t` draws its bootstrap sample and
/// its per-split feature subsets from a stream keyed by `(seed, t)`, so the
/// forest is deterministic and trees are independent of build order.
pub(crate) fn fit_forest(
    x: &FeatureMatrix,
    y: &[u8],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Vec<Tree> {
    let n = x.rows();
    let d = x.cols();
    let m = params
        .features_per_split
        .unwrap_or_else(|| math::ceil(math::sqrt(d as f64)) as usize)
        .clamp(1, d);
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = stream_rng(seed, &[stream::FOREST_TREE, t as u64]);
        let indices: Vec<u32> = if params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n) as u32).collect()
        } else {
            (0..n as u32).collect()
        };
        let rng_ref = if m < d { Some(&mut rng) } else { None };
        trees.push(grow_tree(
            x,
            y,
            n_classes,
            params.min_samples_leaf,
            params.max_depth,
            indices,
            m,
            rng_ref,
        ));
    }
    trees
}

/// Vote fractions over the trees' leaf predictions.
pub(crate) fn vote_distribution(trees: &[Tree], row: &[f64], n_classes: usize) -> Vec<f64> {
    let mut votes = alloc::vec![0.0; n_classes];
    for tree in trees {
        votes[tree.predict_one(row) as usize] += 1.0;
    }
    for v in votes.iter_mut() {
        *v /= trees.len() as f64;
    }
    votes
}

#[cfg(test)]
mod tests {
    use crate::featurize::LinkClass::{Bad, Good, Intermediate};
    use crate::learn::{fit, FeatureMatrix, Hyperparams, ModelKind, TreeParams};
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn three_band_data() -> (FeatureMatrix, Vec<crate::featurize::LinkClass>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let jitter = (i % 7) as f64 * 0.01;
            rows.push(vec![i as f64 / 3.0 + jitter, (i % 5) as f64]);
            labels.push(if i < 10 {
                Bad
            } else if i < 20 {
                Intermediate
            } else {
                Good
            });
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        (FeatureMatrix::from_rows(refs.into_iter()).unwrap(), labels)
    }

    #[test]
    fn forest_reduces_to_single_tree() {
        // one tree, no bootstrap, all candidate features, no pruning
        let (x, y) = three_band_data();
        let mut hp = Hyperparams::with_seed(5);
        hp.forest.n_trees = 1;
        hp.forest.bootstrap = false;
        hp.forest.features_per_split = Some(x.cols());
        hp.forest.min_samples_leaf = 2;
        hp.tree = TreeParams {
            min_samples_leaf: 2,
            max_depth: hp.forest.max_depth,
            ccp_alpha_grid: vec![0.0],
        };
        let forest = fit(ModelKind::RandomForest, &hp, &x, &y).unwrap();
        let tree = fit(ModelKind::DecisionTree, &hp, &x, &y).unwrap();
        assert_eq!(forest.predict(&x).unwrap(), tree.predict(&x).unwrap());
    }

    #[test]
    fn forest_fits_separable_bands() {
        let (x, y) = three_band_data();
        let mut hp = Hyperparams::with_seed(11);
        hp.forest.n_trees = 15;
        let model = fit(ModelKind::RandomForest, &hp, &x, &y).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn vote_distribution_sums_to_one() {
        let (x, y) = three_band_data();
        let mut hp = Hyperparams::with_seed(2);
        hp.forest.n_trees = 7;
        let model = fit(ModelKind::RandomForest, &hp, &x, &y).unwrap();
        for row in model.predict_scores(&x).unwrap() {
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        // Trees and forests are invariant under strictly increasing affine
        // feature maps applied consistently to train and test data.
        #[test]
        fn tree_and_forest_invariant_under_monotone_maps(
            scale in 0.1f64..10.0,
            shift in -100.0f64..100.0,
            seed in 0u64..50,
        ) {
            let (x, y) = three_band_data();
            let mapped_rows: Vec<Vec<f64>> = (0..x.rows())
                .map(|i| x.row(i).iter().map(|v| v * scale + shift).collect())
                .collect();
            let refs: Vec<&[f64]> = mapped_rows.iter().map(|r| r.as_slice()).collect();
            let mapped = FeatureMatrix::from_rows(refs.into_iter()).unwrap();

            // bootstrap off: a point outside a tree's sample can sit
            // ulp-close to a midpoint threshold, so exact invariance needs
            // every predicted point inside the training partition
            for kind in [ModelKind::DecisionTree, ModelKind::RandomForest] {
                let mut hp = Hyperparams::with_seed(seed);
                hp.forest.n_trees = 5;
                hp.forest.bootstrap = false;
                hp.forest.features_per_split = Some(1);
                hp.tree.ccp_alpha_grid = vec![0.0];
                let plain = fit(kind, &hp, &x, &y).unwrap();
                let transformed = fit(kind, &hp, &mapped, &y).unwrap();
                prop_assert_eq!(
                    plain.predict(&x).unwrap(),
                    transformed.predict(&mapped).unwrap()
                );
            }
        }
    }
}
