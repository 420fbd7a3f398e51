//! Core algorithms for machine-learning based wireless link quality
//! estimation (LQE).
//!
//! The crate covers the full pipeline from raw link traces to evaluated
//! classifiers:
//!
//! * [`trace`] — the link-trace domain model, the raw trace parser and
//!   dataset statistics,
//! * [`synth`] — a deterministic synthetic trace generator with known
//!   ground truth,
//! * [`preprocess`] — cleaning and interpolation of missing RSSI readings,
//! * [`featurize`] — sliding-window feature vectors and PRR-derived
//!   three-class labels,
//! * [`resample`] — random over-/under-sampling for class balance,
//! * [`learn`] — feature scaling and six classifiers (majority, logistic
//!   regression, linear SVM, decision tree, random forest, MLP),
//! * [`evaluate`] — stratified k-fold cross-validation and confusion-matrix
//!   metrics.
//!
//! Everything here is pure computation over in-memory data: the crate is
//! `no_std` (with `alloc`) so the featurization and trained models can run
//! on embedded radio hardware. File formats, dataset loading and the batch
//! experiment CLI live in the companion `lqe-cli` crate.
//!
//! # Determinism
//!
//! Every randomized operation takes an explicit 64-bit seed and draws from
//! a ChaCha8 stream keyed by that seed and the indices of the entity being
//! processed (see [`rng`]). Identical inputs and seeds produce bit-identical
//! outputs, independent of iteration or thread order.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod evaluate;
pub mod featurize;
pub mod learn;
mod math;
pub mod preprocess;
pub mod resample;
pub mod rng;
pub mod synth;
pub mod trace;

pub use evaluate::{cross_validate, metrics, stratified_kfold, ConfusionMatrix, EvalReport};
pub use featurize::{
    build_examples, label_from_prr, prr, Example, FeatureSpec, FeatureTerm, LinkClass,
    WindowConfig,
};
pub use learn::{fit, FeatureMatrix, Hyperparams, ModelKind, StandardScaler, TrainedModel};
pub use preprocess::{interpolate, InterpolationStrategy, PreparedTrace};
pub use resample::{random_oversample, random_undersample, ResampleStrategy};
pub use synth::SynthConfig;
pub use trace::{parse_rutgers_trace, LinkTrace, PacketSlot, TraceSet, TraceStats};
