//! Stratified k-fold cross-validation with a leakage-safe pipeline order,
//! confusion matrices and the derived metrics.
//!
//! For every repeat and fold the pipeline is: fit the scaler on the
//! training split, re-sample the training split, fit the model, predict on
//! the untouched test fold. Re-sampling and scaler fitting never see test
//! examples.

use alloc::vec::Vec;
use core::fmt;

use crate::featurize::{Example, LinkClass, N_CLASSES};
use crate::learn::{
    fit_with_scaler, FeatureMatrix, Hyperparams, LearnError, ModelKind, StandardScaler,
};
use crate::resample::{resample_indices, EmptyInput, ResampleStrategy};
use crate::rng::{derive_seed, stream, stream_rng};

use rand::seq::SliceRandom;
use rand::Rng;

/// Errors from fold planning and cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// Fewer than two folds requested.
    InvalidFoldCount { k: usize },
    /// Fewer than one repeat requested.
    InvalidRepeatCount,
    /// A class with fewer members than folds.
    TooFewPerClass { class: LinkClass, count: usize, k: usize },
    /// Metrics over an all-zero confusion matrix.
    EmptyMatrix,
    /// No examples supplied.
    EmptyInput,
    /// Examples with differing feature lengths.
    RaggedFeatures,
    Learn(LearnError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::InvalidFoldCount { k } => write!(f, "fold count {k} below 2"),
            EvalError::InvalidRepeatCount => f.write_str("repeat count must be at least 1"),
            EvalError::TooFewPerClass { class, count, k } => {
                write!(f, "class {class} has {count} members, fewer than {k} folds")
            }
            EvalError::EmptyMatrix => f.write_str("metrics over an empty confusion matrix"),
            EvalError::EmptyInput => f.write_str("no examples to evaluate"),
            EvalError::RaggedFeatures => f.write_str("examples have differing feature lengths"),
            EvalError::Learn(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EvalError {}

impl From<LearnError> for EvalError {
    fn from(e: LearnError) -> Self {
        EvalError::Learn(e)
    }
}

impl From<EmptyInput> for EvalError {
    fn from(_: EmptyInput) -> Self {
        EvalError::EmptyInput
    }
}

/// 3x3 count table; rows are predicted classes, columns actual classes,
/// both in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (LinkClass, LinkClass)>,
    {
        let mut cm = Self::new();
        for (predicted, actual) in pairs {
            cm.record(predicted, actual);
        }
        cm
    }

    pub fn record(&mut self, predicted: LinkClass, actual: LinkClass) {
        self.counts[predicted.index()][actual.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for p in 0..N_CLASSES {
            for a in 0..N_CLASSES {
                self.counts[p][a] += other.counts[p][a];
            }
        }
    }

    pub fn counts(&self) -> &[[u64; N_CLASSES]; N_CLASSES] {
        &self.counts
    }

    pub fn count(&self, predicted: LinkClass, actual: LinkClass) -> u64 {
        self.counts[predicted.index()][actual.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let diag: u64 = (0..N_CLASSES).map(|i| self.counts[i][i]).sum();
        diag as f64 / total as f64
    }

    fn column_sum(&self, class: usize) -> u64 {
        (0..N_CLASSES).map(|p| self.counts[p][class]).sum()
    }

    fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Column-normalized diagonal entry: fraction of actual `class`
    /// instances predicted correctly. Zero for an empty column.
    pub fn recall(&self, class: LinkClass) -> f64 {
        let c = class.index();
        let total = self.column_sum(c);
        if total == 0 {
            0.0
        } else {
            self.counts[c][c] as f64 / total as f64
        }
    }

    /// Row-normalized diagonal entry. Zero for an empty row.
    pub fn precision(&self, class: LinkClass) -> f64 {
        let c = class.index();
        let total = self.row_sum(c);
        if total == 0 {
            0.0
        } else {
            self.counts[c][c] as f64 / total as f64
        }
    }

    pub fn recalls(&self) -> [f64; N_CLASSES] {
        [
            self.recall(LinkClass::Bad),
            self.recall(LinkClass::Intermediate),
            self.recall(LinkClass::Good),
        ]
    }
}

/// Derived views of a confusion matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class_recall: [f64; N_CLASSES],
    pub per_class_precision: [f64; N_CLASSES],
    /// Each column sums to one (empty columns stay zero).
    pub column_normalized: [[f64; N_CLASSES]; N_CLASSES],
    /// Each row sums to one (empty rows stay zero).
    pub row_normalized: [[f64; N_CLASSES]; N_CLASSES],
}

/// Computes the full metric set of a non-empty confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut column_normalized = [[0.0; N_CLASSES]; N_CLASSES];
    let mut row_normalized = [[0.0; N_CLASSES]; N_CLASSES];
    for c in 0..N_CLASSES {
        let col = cm.column_sum(c);
        if col > 0 {
            for p in 0..N_CLASSES {
                column_normalized[p][c] = cm.counts[p][c] as f64 / col as f64;
            }
        }
        let row = cm.row_sum(c);
        if row > 0 {
            for a in 0..N_CLASSES {
                row_normalized[c][a] = cm.counts[c][a] as f64 / row as f64;
            }
        }
    }
    Ok(Metrics {
        accuracy: cm.accuracy(),
        per_class_recall: cm.recalls(),
        per_class_precision: [
            cm.precision(LinkClass::Bad),
            cm.precision(LinkClass::Intermediate),
            cm.precision(LinkClass::Good),
        ],
        column_normalized,
        row_normalized,
    })
}

/// A stratified fold assignment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index per example.
    pub assignments: Vec<u32>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Assigns examples to `k` folds so that per-class counts differ by at most
/// one across folds. Every represented class needs at least `k` members.
pub fn stratified_kfold(
    y: &[LinkClass],
    k: usize,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFoldCount { k });
    }
    if y.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut per_class: [Vec<usize>; N_CLASSES] = Default::default();
    for (i, label) in y.iter().enumerate() {
        per_class[label.index()].push(i);
    }
    for (c, members) in per_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(EvalError::TooFewPerClass {
                class: LinkClass::from_index(c).unwrap(),
                count: members.len(),
                k,
            });
        }
    }
    let mut assignments = alloc::vec![0u32; y.len()];
    for (c, members) in per_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut rng = stream_rng(seed, &[stream::KFOLD, c as u64]);
        members.shuffle(&mut rng);
        // a random starting fold so remainders do not pile up in fold 0
        let start = rng.random_range(0..k);
        for (m, &example) in members.iter().enumerate() {
            assignments[example] = ((start + m) % k) as u32;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Aggregated result of a repeated stratified cross-validation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub kind: ModelKind,
    pub resample: ResampleStrategy,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub n_examples: usize,
    /// One matrix per (repeat, fold), in that order.
    pub fold_matrices: Vec<ConfusionMatrix>,
    /// Element-wise sum of the fold matrices.
    pub pooled: ConfusionMatrix,
    /// Mean / population-std of accuracy over all k x repeats folds.
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    /// Mean / population-std of per-class recall over folds.
    pub recall_mean: [f64; N_CLASSES],
    pub recall_std: [f64; N_CLASSES],
    /// Accuracy and recall of the pooled matrix.
    pub pooled_accuracy: f64,
    pub pooled_recall: [f64; N_CLASSES],
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, crate::math::sqrt(var.max(0.0)))
}

/// Runs `repeats` independent stratified k-fold evaluations.
///
/// Repeat `r` derives its fold plan from `(seed, r)`; each fold derives
/// re-sampling and model-training seeds from `(seed, r, fold)`. The scaler
/// is fitted on the raw training split before re-sampling; the test fold is
/// never re-sampled or used for fitting.
pub fn cross_validate(
    examples: &[Example],
    kind: ModelKind,
    hp: &Hyperparams,
    resample: ResampleStrategy,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if repeats == 0 {
        return Err(EvalError::InvalidRepeatCount);
    }
    let width = examples[0].features.len();
    if examples.iter().any(|e| e.features.len() != width) {
        return Err(EvalError::RaggedFeatures);
    }
    let labels: Vec<LinkClass> = examples.iter().map(|e| e.label).collect();

    let mut fold_matrices = Vec::with_capacity(k * repeats);
    for r in 0..repeats {
        let plan_seed = derive_seed(seed, &[stream::CV_REPEAT, r as u64]);
        let plan = stratified_kfold(&labels, k, plan_seed)?;
        for fold in 0..k {
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);

            let x_train = FeatureMatrix::from_examples(examples, &train_idx)?;
            let scaler = StandardScaler::fit(&x_train)?;

            let train_labels: Vec<LinkClass> =
                train_idx.iter().map(|&i| labels[i]).collect();
            let resample_seed =
                derive_seed(seed, &[stream::CV_RESAMPLE, r as u64, fold as u64]);
            let picked = resample_indices(resample, &train_labels, resample_seed)?;
            let resampled_idx: Vec<usize> = picked.iter().map(|&i| train_idx[i]).collect();
            let x_fit = FeatureMatrix::from_examples(examples, &resampled_idx)?;
            let y_fit: Vec<LinkClass> =
                resampled_idx.iter().map(|&i| labels[i]).collect();

            let fold_hp = Hyperparams {
                seed: derive_seed(seed, &[stream::CV_MODEL, r as u64, fold as u64]),
                ..hp.clone()
            };
            let model = fit_with_scaler(kind, &fold_hp, scaler, &x_fit, &y_fit)?;

            let x_test = FeatureMatrix::from_examples(examples, &test_idx)?;
            let predictions = model.predict(&x_test)?;
            let cm = ConfusionMatrix::from_pairs(
                predictions
                    .into_iter()
                    .zip(test_idx.iter().map(|&i| labels[i])),
            );
            fold_matrices.push(cm);
        }
    }

    let mut pooled = ConfusionMatrix::new();
    for cm in &fold_matrices {
        pooled.merge(cm);
    }
    let accuracies: Vec<f64> = fold_matrices.iter().map(ConfusionMatrix::accuracy).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&accuracies);
    let mut recall_mean = [0.0; N_CLASSES];
    let mut recall_std = [0.0; N_CLASSES];
    for class in LinkClass::ALL {
        let values: Vec<f64> =
            fold_matrices.iter().map(|cm| cm.recall(class)).collect();
        let (mean, std) = mean_std(&values);
        recall_mean[class.index()] = mean;
        recall_std[class.index()] = std;
    }

    Ok(EvalReport {
        kind,
        resample,
        k,
        repeats,
        seed,
        n_examples: examples.len(),
        pooled_accuracy: pooled.accuracy(),
        pooled_recall: pooled.recalls(),
        fold_matrices,
        pooled,
        accuracy_mean,
        accuracy_std,
        recall_mean,
        recall_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::LinkClass::{Bad, Good, Intermediate};
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn labels(counts: [usize; 3]) -> Vec<LinkClass> {
        let mut y = Vec::new();
        for (c, &count) in counts.iter().enumerate() {
            y.extend(core::iter::repeat(LinkClass::from_index(c).unwrap()).take(count));
        }
        y
    }

    fn fold_class_counts(plan: &FoldPlan, y: &[LinkClass]) -> Vec<[usize; 3]> {
        let mut counts = vec![[0usize; 3]; plan.k];
        for (i, &fold) in plan.assignments.iter().enumerate() {
            counts[fold as usize][y[i].index()] += 1;
        }
        counts
    }

    #[test]
    fn exact_divisibility_gives_equal_folds() {
        let y = labels([10, 10, 10]);
        let plan = stratified_kfold(&y, 5, 3).unwrap();
        for fold in fold_class_counts(&plan, &y) {
            assert_eq!(fold, [2, 2, 2]);
        }
    }

    #[test]
    fn remainder_lands_in_exactly_one_fold() {
        let y = labels([11, 10, 10]);
        let plan = stratified_kfold(&y, 5, 3).unwrap();
        let folds = fold_class_counts(&plan, &y);
        let with_extra: Vec<_> = folds.iter().filter(|f| f[0] == 3).collect();
        assert_eq!(with_extra.len(), 1);
        assert!(folds.iter().all(|f| f[0] == 2 || f[0] == 3));
    }

    #[test]
    fn too_few_members_rejected() {
        let y = labels([3, 20, 20]);
        let err = stratified_kfold(&y, 10, 0).unwrap_err();
        assert!(matches!(
            err,
            EvalError::TooFewPerClass { class: Bad, count: 3, k: 10 }
        ));
        assert!(matches!(
            stratified_kfold(&y, 1, 0),
            Err(EvalError::InvalidFoldCount { k: 1 })
        ));
    }

    #[test]
    fn metrics_of_identity_matrix() {
        let mut cm = ConfusionMatrix::new();
        for class in LinkClass::ALL {
            for _ in 0..10 {
                cm.record(class, class);
            }
        }
        let m = metrics(&cm).unwrap();
        assert_relative_eq!(m.accuracy, 1.0);
        assert_eq!(m.per_class_recall, [1.0, 1.0, 1.0]);
        assert_eq!(m.per_class_precision, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn metrics_of_constant_predictor() {
        // all 30 predictions = good over a balanced actual distribution
        let mut cm = ConfusionMatrix::new();
        for actual in LinkClass::ALL {
            for _ in 0..10 {
                cm.record(Good, actual);
            }
        }
        let m = metrics(&cm).unwrap();
        assert_relative_eq!(m.accuracy, 1.0 / 3.0);
        assert_eq!(m.per_class_recall, [0.0, 0.0, 1.0]);
        // column normalization puts all mass in the `good` row
        for c in 0..3 {
            assert_relative_eq!(m.column_normalized[Good.index()][c], 1.0);
        }
        // empty rows stay zero
        assert_eq!(m.row_normalized[Bad.index()], [0.0; 3]);
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(matches!(metrics(&ConfusionMatrix::new()), Err(EvalError::EmptyMatrix)));
    }

    fn toy_examples(counts: [usize; 3]) -> Vec<Example> {
        // classes sit in disjoint feature bands, with within-class variety
        let mut examples = Vec::new();
        for (c, &count) in counts.iter().enumerate() {
            for i in 0..count {
                examples.push(Example {
                    features: vec![c as f64 * 10.0 + (i % 5) as f64 * 0.1],
                    label: LinkClass::from_index(c).unwrap(),
                    trace_index: 0,
                    position: i,
                });
            }
        }
        examples
    }

    #[test]
    fn majority_accuracy_is_the_majority_share() {
        // 61/34/5 imbalance: majority predicts good, intermediate recall 0
        let examples = toy_examples([34, 5, 61]);
        let report = cross_validate(
            &examples,
            ModelKind::Majority,
            &Hyperparams::default(),
            ResampleStrategy::NoResample,
            5,
            2,
            9,
        )
        .unwrap();
        assert!((report.pooled_accuracy - 0.61).abs() < 0.02, "{}", report.pooled_accuracy);
        assert_eq!(report.pooled_recall[Intermediate.index()], 0.0);
        assert_eq!(report.pooled_recall[Good.index()], 1.0);
    }

    #[test]
    fn separable_bands_reach_perfect_folds() {
        let examples = toy_examples([20, 20, 20]);
        let mut hp = Hyperparams::default();
        hp.tree.min_samples_leaf = 1;
        let report = cross_validate(
            &examples,
            ModelKind::DecisionTree,
            &hp,
            ResampleStrategy::NoResample,
            5,
            1,
            4,
        )
        .unwrap();
        for cm in &report.fold_matrices {
            assert_relative_eq!(cm.accuracy(), 1.0);
        }
        assert_relative_eq!(report.accuracy_mean, 1.0);
        assert_relative_eq!(report.accuracy_std, 0.0);
    }

    #[test]
    fn pooled_total_counts_every_example_once_per_repeat() {
        let examples = toy_examples([15, 10, 25]);
        let repeats = 3;
        let report = cross_validate(
            &examples,
            ModelKind::Majority,
            &Hyperparams::default(),
            ResampleStrategy::Ros,
            5,
            repeats,
            7,
        )
        .unwrap();
        assert_eq!(report.pooled.total(), (examples.len() * repeats) as u64);
        assert_eq!(report.fold_matrices.len(), 5 * repeats);
    }

    #[test]
    fn report_is_deterministic() {
        let examples = toy_examples([12, 8, 20]);
        let run = || {
            cross_validate(
                &examples,
                ModelKind::RandomForest,
                &{
                    let mut hp = Hyperparams::with_seed(5);
                    hp.forest.n_trees = 5;
                    hp
                },
                ResampleStrategy::Rus,
                4,
                2,
                11,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn test_fold_examples_are_untouched() {
        let examples = toy_examples([10, 10, 10]);
        let before = examples.clone();
        let _ = cross_validate(
            &examples,
            ModelKind::DecisionTree,
            &Hyperparams::default(),
            ResampleStrategy::Ros,
            3,
            1,
            2,
        )
        .unwrap();
        assert_eq!(examples, before, "examples are read-only to the pipeline");
    }

    proptest! {
        // Stratification bound: per-class fold counts differ by at most one.
        #[test]
        fn stratification_spread_at_most_one(
            n_bad in 5usize..40,
            n_int in 5usize..40,
            n_good in 5usize..40,
            k in 2usize..6,
            seed in 0u64..100,
        ) {
            let y = labels([n_bad.max(k), n_int.max(k), n_good.max(k)]);
            let plan = stratified_kfold(&y, k, seed).unwrap();
            let folds = fold_class_counts(&plan, &y);
            for c in 0..3 {
                let per_fold: Vec<usize> = folds.iter().map(|f| f[c]).collect();
                let spread = per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap();
                prop_assert!(spread <= 1, "class {c}: {per_fold:?}");
            }
        }
    }
}
