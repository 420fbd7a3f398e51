//! Seed derivation and the crate-wide random number generator.
//!
//! All randomness in this crate comes from ChaCha8 streams. A stream is
//! keyed by a root seed plus the indices of the entity it belongs to
//! (trace index, fold index, tree index, packet index, ...), mixed into a
//! single 64-bit seed with the SplitMix64 finalizer. Streams are therefore
//! independent of iteration order: generating trace 7 always consumes the
//! same deviates no matter which traces were generated before it.
//!
//! The first element of the part list is a stream tag (see the `stream`
//! constants) so that distinct uses of the same entity index never collide.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Each randomized operation owns one tag.
pub mod stream {
    /// Per-link SNR draw in the synthetic generator.
    pub const SYNTH_SNR: u64 = 1;
    /// Per-packet reception draw in the synthetic generator.
    pub const SYNTH_RECEPTION: u64 = 2;
    /// Per-packet RSSI noise draw in the synthetic generator.
    pub const SYNTH_RSSI: u64 = 3;
    /// Gaussian interpolation fills.
    pub const INTERP: u64 = 4;
    /// Random over-sampling draws.
    pub const ROS: u64 = 5;
    /// Random under-sampling draws.
    pub const RUS: u64 = 6;
    /// Per-class shuffles in stratified fold assignment.
    pub const KFOLD: u64 = 7;
    /// Per-repeat seed derivation in cross-validation.
    pub const CV_REPEAT: u64 = 8;
    /// Per-fold resampling seed derivation in cross-validation.
    pub const CV_RESAMPLE: u64 = 9;
    /// Per-tree seed derivation in the random forest.
    pub const FOREST_TREE: u64 = 10;
    /// Internal train/validation split for tree pruning.
    pub const TREE_PRUNE_SPLIT: u64 = 11;
    /// MLP weight initialization.
    pub const MLP_INIT: u64 = 12;
    /// Per-epoch example shuffles (SVM and MLP).
    pub const EPOCH_SHUFFLE: u64 = 13;
    /// Per-trace seed derivation when interpolating a whole trace set.
    pub const TRACE_SET: u64 = 14;
    /// Per-fold model-training seed derivation in cross-validation.
    pub const CV_MODEL: u64 = 15;
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a root seed and a list of stream parts into one 64-bit seed.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    let mut state = mix(root ^ 0x9e37_79b9_7f4a_7c15);
    for (i, part) in parts.iter().enumerate() {
        state = mix(
            state
                .wrapping_add(part.wrapping_mul(0x9e37_79b9_7f4a_7c15))
                .wrapping_add(i as u64 + 1),
        );
    }
    state
}

/// A ChaCha8 generator for the stream identified by `(root, parts)`.
pub fn stream_rng(root: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, parts))
}
