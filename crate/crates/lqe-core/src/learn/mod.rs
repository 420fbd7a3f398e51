//! Feature scaling and the six classifiers: majority baseline, logistic
//! regression, linear SVM, CART decision tree, random forest and a one
//! hidden layer MLP.
//!
//! All learners are trained from first principles on standardized features
//! (standardization is harmless for the trees and keeps the pipeline
//! uniform). A [`TrainedModel`] bundles the fitted parameters with the
//! scaler that produced its training representation, so callers always pass
//! raw feature rows to [`TrainedModel::predict`].

mod forest;
mod linear;
mod mlp;
mod scaler;
mod tree;

pub use linear::softmax_ce_loss_grad;
pub use mlp::mlp_loss_grad;
pub use scaler::StandardScaler;
pub use tree::Tree;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::featurize::LinkClass;

/// Errors from matrix construction, fitting and prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnError {
    /// Empty design matrix or label list.
    EmptyInput,
    /// Rows of differing lengths.
    RaggedRows { row: usize, expected: usize, found: usize },
    /// Feature count differs between labels and matrix, or between a model
    /// and its prediction input.
    DimensionMismatch { expected: usize, found: usize },
    /// NaN or infinity in the design matrix.
    NonFiniteFeature { row: usize, col: usize },
    /// Invalid hyperparameter value.
    BadHyperparam(String),
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::EmptyInput => f.write_str("empty training input"),
            LearnError::RaggedRows { row, expected, found } => {
                write!(f, "row {row} has {found} features, expected {expected}")
            }
            LearnError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            LearnError::NonFiniteFeature { row, col } => {
                write!(f, "non-finite feature at row {row}, column {col}")
            }
            LearnError::BadHyperparam(msg) => write!(f, "bad hyperparameter: {msg}"),
        }
    }
}

impl core::error::Error for LearnError {}

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self, LearnError> {
        if data.len() != rows * cols {
            return Err(LearnError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(FeatureMatrix { data, rows, cols })
    }

    pub fn from_rows<'a, I>(rows: I) -> Result<Self, LearnError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut data = Vec::new();
        let mut n_rows = 0;
        let mut n_cols = None;
        for row in rows {
            let cols = *n_cols.get_or_insert(row.len());
            if row.len() != cols {
                return Err(LearnError::RaggedRows {
                    row: n_rows,
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
            n_rows += 1;
        }
        let cols = n_cols.unwrap_or(0);
        Ok(FeatureMatrix { data, rows: n_rows, cols })
    }

    /// Gathers a row subset of the examples' feature vectors.
    pub fn from_examples(
        examples: &[crate::featurize::Example],
        indices: &[usize],
    ) -> Result<Self, LearnError> {
        Self::from_rows(indices.iter().map(|&i| examples[i].features.as_slice()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    fn check_finite(&self) -> Result<(), LearnError> {
        for (i, value) in self.data.iter().enumerate() {
            if !value.is_finite() {
                return Err(LearnError::NonFiniteFeature {
                    row: i / self.cols,
                    col: i % self.cols,
                });
            }
        }
        Ok(())
    }
}

/// The six classifier kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelKind {
    Majority,
    LogisticRegression,
    LinearSvm,
    DecisionTree,
    RandomForest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Majority,
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::Mlp,
    ];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Majority => "majority",
            ModelKind::LogisticRegression => "logreg",
            ModelKind::LinearSvm => "svm",
            ModelKind::DecisionTree => "dtree",
            ModelKind::RandomForest => "rforest",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(ModelKind::Majority),
            "logreg" => Ok(ModelKind::LogisticRegression),
            "svm" => Ok(ModelKind::LinearSvm),
            "dtree" => Ok(ModelKind::DecisionTree),
            "rforest" => Ok(ModelKind::RandomForest),
            "mlp" => Ok(ModelKind::Mlp),
            _ => Err(alloc::format!("unknown model kind {s:?}")),
        }
    }
}

/// Logistic regression: L2-regularized multinomial softmax trained by
/// full-batch gradient descent with step halving when a step would raise
/// the loss.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogRegParams {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { l2_lambda: 1e-4, learning_rate: 0.1, max_epochs: 500, tol: 1e-6 }
    }
}

/// Linear SVM: one-vs-rest hinge loss with L2, stochastic subgradient
/// descent over seeded shuffles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmParams {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { l2_lambda: 1e-4, learning_rate: 0.01, max_epochs: 50 }
    }
}

/// CART decision tree: Gini splits grown to `min_samples_leaf`, then
/// minimal cost-complexity pruning with the alpha chosen from
/// `ccp_alpha_grid` by balanced accuracy on an internal stratified 80/20
/// split.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeParams {
    pub min_samples_leaf: usize,
    pub max_depth: usize,
    pub ccp_alpha_grid: Vec<f64>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_leaf: 5,
            max_depth: 32,
            ccp_alpha_grid: alloc::vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2],
        }
    }
}

/// Random forest: bagged unpruned CARTs with random feature subsets per
/// split and majority vote. `features_per_split = None` means ceil(sqrt(d)).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestParams {
    pub n_trees: usize,
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
    pub max_depth: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: None,
            bootstrap: true,
            min_samples_leaf: 1,
            max_depth: 32,
        }
    }
}

/// One-hidden-layer MLP: ReLU hidden activation, softmax output,
/// cross-entropy loss, mini-batch gradient descent with momentum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_units: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 20,
            batch_size: 256,
        }
    }
}

/// Hyperparameters for every kind, plus the training seed. Only the record
/// matching the fitted kind is consulted.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Hyperparams {
    pub seed: u64,
    pub logreg: LogRegParams,
    pub svm: SvmParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub mlp: MlpParams,
}

impl Hyperparams {
    pub fn with_seed(seed: u64) -> Self {
        Hyperparams { seed, ..Default::default() }
    }

    fn validate(&self, kind: ModelKind) -> Result<(), LearnError> {
        let bad = |msg: &str| Err(LearnError::BadHyperparam(String::from(msg)));
        match kind {
            ModelKind::Majority => Ok(()),
            ModelKind::LogisticRegression => {
                let p = &self.logreg;
                if !(p.learning_rate > 0.0) {
                    return bad("logreg learning_rate must be positive");
                }
                if !(p.l2_lambda >= 0.0) {
                    return bad("logreg l2_lambda must be non-negative");
                }
                if p.max_epochs == 0 {
                    return bad("logreg max_epochs must be at least 1");
                }
                if !(p.tol > 0.0) {
                    return bad("logreg tol must be positive");
                }
                Ok(())
            }
            ModelKind::LinearSvm => {
                let p = &self.svm;
                if !(p.learning_rate > 0.0) {
                    return bad("svm learning_rate must be positive");
                }
                if !(p.l2_lambda >= 0.0) {
                    return bad("svm l2_lambda must be non-negative");
                }
                if p.max_epochs == 0 {
                    return bad("svm max_epochs must be at least 1");
                }
                Ok(())
            }
            ModelKind::DecisionTree => {
                let p = &self.tree;
                if p.min_samples_leaf == 0 {
                    return bad("tree min_samples_leaf must be at least 1");
                }
                if p.max_depth == 0 || p.max_depth > 64 {
                    return bad("tree max_depth must be in 1..=64");
                }
                if p.ccp_alpha_grid.is_empty() {
                    return bad("tree ccp_alpha_grid must be non-empty");
                }
                if p.ccp_alpha_grid.iter().any(|a| !(*a >= 0.0)) {
                    return bad("tree ccp alphas must be non-negative");
                }
                Ok(())
            }
            ModelKind::RandomForest => {
                let p = &self.forest;
                if p.n_trees == 0 {
                    return bad("forest n_trees must be at least 1");
                }
                if p.features_per_split == Some(0) {
                    return bad("forest features_per_split must be at least 1");
                }
                if p.min_samples_leaf == 0 {
                    return bad("forest min_samples_leaf must be at least 1");
                }
                if p.max_depth == 0 || p.max_depth > 64 {
                    return bad("forest max_depth must be in 1..=64");
                }
                Ok(())
            }
            ModelKind::Mlp => {
                let p = &self.mlp;
                if p.hidden_units == 0 {
                    return bad("mlp hidden_units must be at least 1");
                }
                if !(p.learning_rate > 0.0) {
                    return bad("mlp learning_rate must be positive");
                }
                if !(0.0..1.0).contains(&p.momentum) {
                    return bad("mlp momentum must be in [0, 1)");
                }
                if p.epochs == 0 || p.batch_size == 0 {
                    return bad("mlp epochs and batch_size must be at least 1");
                }
                Ok(())
            }
        }
    }
}

/// Kind-specific fitted parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelParams {
    /// Modal class index into `classes_seen`.
    Majority { class: usize },
    /// Softmax weights, one row per seen class.
    Softmax(linear::LinearWeights),
    /// One-vs-rest hinge weights, one row per seen class.
    OneVsRest(linear::LinearWeights),
    Tree(Tree),
    Forest(Vec<Tree>),
    Mlp(mlp::MlpWeights),
}

/// A fitted classifier plus the scaler that standardizes its inputs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub scaler: StandardScaler,
    pub params: ModelParams,
    /// Classes present in training, in canonical order. Scores and local
    /// class indices refer to this list.
    pub classes_seen: Vec<LinkClass>,
    /// True when a non-majority kind saw a single training class and fell
    /// back to majority semantics.
    pub single_class_fallback: bool,
}

/// Fits a model, standardizing with a scaler fitted on `x` itself.
pub fn fit(
    kind: ModelKind,
    hp: &Hyperparams,
    x: &FeatureMatrix,
    y: &[LinkClass],
) -> Result<TrainedModel, LearnError> {
    let scaler = StandardScaler::fit(x)?;
    fit_with_scaler(kind, hp, scaler, x, y)
}

/// Fits a model with a caller-provided scaler. The cross-validation
/// pipeline uses this to fit the scaler on the training split before
/// re-sampling is applied.
pub fn fit_with_scaler(
    kind: ModelKind,
    hp: &Hyperparams,
    scaler: StandardScaler,
    x: &FeatureMatrix,
    y: &[LinkClass],
) -> Result<TrainedModel, LearnError> {
    if x.rows() == 0 || y.is_empty() {
        return Err(LearnError::EmptyInput);
    }
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), found: y.len() });
    }
    if x.cols() != scaler.dim() {
        return Err(LearnError::DimensionMismatch { expected: scaler.dim(), found: x.cols() });
    }
    x.check_finite()?;
    hp.validate(kind)?;

    let classes_seen: Vec<LinkClass> = LinkClass::ALL
        .iter()
        .copied()
        .filter(|c| y.contains(c))
        .collect();
    let y_local: Vec<u8> = y
        .iter()
        .map(|c| classes_seen.iter().position(|s| s == c).unwrap() as u8)
        .collect();
    let k = classes_seen.len();

    // Degenerate single-class input: every kind degrades to the majority
    // rule, flagged for the caller.
    if k == 1 && kind != ModelKind::Majority {
        return Ok(TrainedModel {
            kind,
            scaler,
            params: ModelParams::Majority { class: 0 },
            classes_seen,
            single_class_fallback: true,
        });
    }

    let xs = scaler.transform(x);
    let params = match kind {
        ModelKind::Majority => ModelParams::Majority { class: modal_class(&y_local, k) },
        ModelKind::LogisticRegression => {
            ModelParams::Softmax(linear::fit_logreg(&xs, &y_local, k, &hp.logreg))
        }
        ModelKind::LinearSvm => {
            ModelParams::OneVsRest(linear::fit_svm(&xs, &y_local, k, &hp.svm, hp.seed))
        }
        ModelKind::DecisionTree => {
            ModelParams::Tree(tree::fit_tree(&xs, &y_local, k, &hp.tree, hp.seed))
        }
        ModelKind::RandomForest => {
            ModelParams::Forest(forest::fit_forest(&xs, &y_local, k, &hp.forest, hp.seed))
        }
        ModelKind::Mlp => ModelParams::Mlp(mlp::fit_mlp(&xs, &y_local, k, &hp.mlp, hp.seed)),
    };

    Ok(TrainedModel {
        kind,
        scaler,
        params,
        classes_seen,
        single_class_fallback: false,
    })
}

/// Modal local class; ties break toward the canonical order.
fn modal_class(y_local: &[u8], k: usize) -> usize {
    let mut counts = alloc::vec![0usize; k];
    for &c in y_local {
        counts[c as usize] += 1;
    }
    let mut best = 0;
    for c in 1..k {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

impl TrainedModel {
    /// Per-class scores, one row per input, columns following
    /// `classes_seen`. Softmax kinds emit probabilities summing to one.
    pub fn predict_scores(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>, LearnError> {
        if x.cols() != self.scaler.dim() {
            return Err(LearnError::DimensionMismatch {
                expected: self.scaler.dim(),
                found: x.cols(),
            });
        }
        let k = self.classes_seen.len();
        let mut scores = Vec::with_capacity(x.rows());
        for row in x.iter_rows() {
            let scaled = self.scaler.transform_row(row);
            let row_scores = match &self.params {
                ModelParams::Majority { class } => {
                    let mut s = alloc::vec![0.0; k];
                    s[*class] = 1.0;
                    s
                }
                ModelParams::Softmax(w) => {
                    let mut s = w.decision_values(&scaled);
                    linear::softmax_in_place(&mut s);
                    s
                }
                ModelParams::OneVsRest(w) => w.decision_values(&scaled),
                ModelParams::Tree(t) => t.class_distribution(&scaled),
                ModelParams::Forest(trees) => forest::vote_distribution(trees, &scaled, k),
                ModelParams::Mlp(m) => m.probabilities(&scaled),
            };
            scores.push(row_scores);
        }
        Ok(scores)
    }

    /// Predicted classes: score argmax, ties toward the canonical order.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<LinkClass>, LearnError> {
        let scores = self.predict_scores(x)?;
        Ok(scores
            .iter()
            .map(|row| self.classes_seen[argmax(row)])
            .collect())
    }
}

/// First maximal index (canonical-order tie-break for class scores).
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
