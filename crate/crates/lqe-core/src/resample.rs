//! Training-set class re-balancing by random over- and under-sampling.
//!
//! ROS equalizes all class sizes up to the majority count by duplicating
//! minority examples (every original survives exactly once); RUS equalizes
//! down to the minority count by discarding uniformly without replacement.
//! Both are deterministic under a seed. Re-balancing belongs to training
//! folds only — the cross-validation pipeline enforces that ordering.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::featurize::{Example, LinkClass, N_CLASSES};
use crate::rng::{stream, stream_rng};

/// Re-balancing strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ResampleStrategy {
    NoResample,
    /// Random over-sampling to the majority class size.
    Ros,
    /// Random under-sampling to the minority class size.
    Rus,
}

impl fmt::Display for ResampleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResampleStrategy::NoResample => "none",
            ResampleStrategy::Ros => "ros",
            ResampleStrategy::Rus => "rus",
        })
    }
}

impl FromStr for ResampleStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(ResampleStrategy::NoResample),
            "ros" => Ok(ResampleStrategy::Ros),
            "rus" => Ok(ResampleStrategy::Rus),
            _ => Err(alloc::format!("unknown resample strategy {s:?}")),
        }
    }
}

/// Re-sampling over an empty example list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyInput;

impl fmt::Display for EmptyInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("cannot re-sample an empty example list")
    }
}

impl core::error::Error for EmptyInput {}

fn class_indices(labels: &[LinkClass]) -> [Vec<usize>; N_CLASSES] {
    let mut per_class: [Vec<usize>; N_CLASSES] = Default::default();
    for (i, label) in labels.iter().enumerate() {
        per_class[label.index()].push(i);
    }
    per_class
}

/// Index-level ROS: all original indices in order, followed by duplicate
/// draws (uniform with replacement) per minority class in canonical class
/// order until every represented class reaches the majority count.
pub fn oversample_indices(labels: &[LinkClass], seed: u64) -> Result<Vec<usize>, EmptyInput> {
    if labels.is_empty() {
        return Err(EmptyInput);
    }
    let per_class = class_indices(labels);
    let majority = per_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    let mut rng = stream_rng(seed, &[stream::ROS]);
    for members in per_class.iter().filter(|m| !m.is_empty()) {
        for _ in members.len()..majority {
            out.push(members[rng.random_range(0..members.len())]);
        }
    }
    Ok(out)
}

/// Index-level RUS: a uniform without-replacement subset per class down to
/// the minority count, preserving the original input order.
pub fn undersample_indices(labels: &[LinkClass], seed: u64) -> Result<Vec<usize>, EmptyInput> {
    if labels.is_empty() {
        return Err(EmptyInput);
    }
    let per_class = class_indices(labels);
    let minority = per_class
        .iter()
        .filter(|m| !m.is_empty())
        .map(Vec::len)
        .min()
        .unwrap_or(0);
    let mut rng = stream_rng(seed, &[stream::RUS]);
    let mut keep = Vec::new();
    for members in per_class.iter().filter(|m| !m.is_empty()) {
        for pick in index::sample(&mut rng, members.len(), minority) {
            keep.push(members[pick]);
        }
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Applies a strategy at index level; `NoResample` is the identity.
pub fn resample_indices(
    strategy: ResampleStrategy,
    labels: &[LinkClass],
    seed: u64,
) -> Result<Vec<usize>, EmptyInput> {
    match strategy {
        ResampleStrategy::NoResample => {
            if labels.is_empty() {
                Err(EmptyInput)
            } else {
                Ok((0..labels.len()).collect())
            }
        }
        ResampleStrategy::Ros => oversample_indices(labels, seed),
        ResampleStrategy::Rus => undersample_indices(labels, seed),
    }
}

fn gather(examples: &[Example], indices: &[usize]) -> Vec<Example> {
    indices.iter().map(|&i| examples[i].clone()).collect()
}

fn labels_of(examples: &[Example]) -> Vec<LinkClass> {
    examples.iter().map(|e| e.label).collect()
}

/// Random over-sampling of a full example list.
pub fn random_oversample(examples: &[Example], seed: u64) -> Result<Vec<Example>, EmptyInput> {
    Ok(gather(examples, &oversample_indices(&labels_of(examples), seed)?))
}

/// Random under-sampling of a full example list.
pub fn random_undersample(examples: &[Example], seed: u64) -> Result<Vec<Example>, EmptyInput> {
    Ok(gather(examples, &undersample_indices(&labels_of(examples), seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn example(label: LinkClass, tag: usize) -> Example {
        Example { features: vec![tag as f64], label, trace_index: 0, position: tag }
    }

    fn dataset(counts: [usize; 3]) -> Vec<Example> {
        let mut out = Vec::new();
        for (class_idx, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                out.push(example(LinkClass::from_index(class_idx).unwrap(), out.len()));
            }
        }
        out
    }

    fn class_counts(examples: &[Example]) -> [usize; 3] {
        let mut counts = [0; 3];
        for e in examples {
            counts[e.label.index()] += 1;
        }
        counts
    }

    #[test]
    fn ros_brings_every_class_to_majority() {
        // counts {good: 6, bad: 3, intermediate: 1} -> {6, 6, 6}
        let input = dataset([3, 1, 6]);
        let out = random_oversample(&input, 0).unwrap();
        assert_eq!(class_counts(&out), [6, 6, 6]);
        assert_eq!(out.len(), 18);
        // all originals survive exactly once, as the prefix
        assert_eq!(&out[..input.len()], &input[..]);
    }

    #[test]
    fn rus_brings_every_class_to_minority() {
        let input = dataset([3, 1, 6]);
        let out = random_undersample(&input, 0).unwrap();
        assert_eq!(class_counts(&out), [1, 1, 1]);
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn balanced_input_is_a_fixed_point() {
        let input = dataset([4, 4, 4]);
        assert_eq!(random_oversample(&input, 3).unwrap(), input);
        assert_eq!(random_undersample(&input, 3).unwrap(), input);
    }

    #[test]
    fn absent_classes_stay_absent() {
        let input = dataset([5, 0, 2]);
        let out = random_oversample(&input, 1).unwrap();
        assert_eq!(class_counts(&out), [5, 0, 5]);
        let out = random_undersample(&input, 1).unwrap();
        assert_eq!(class_counts(&out), [2, 0, 2]);
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(random_oversample(&[], 0).unwrap_err(), EmptyInput);
        assert_eq!(random_undersample(&[], 0).unwrap_err(), EmptyInput);
        assert!(resample_indices(ResampleStrategy::NoResample, &[], 0).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let input = dataset([10, 2, 25]);
        assert_eq!(
            random_oversample(&input, 7).unwrap(),
            random_oversample(&input, 7).unwrap()
        );
        assert_eq!(
            random_undersample(&input, 7).unwrap(),
            random_undersample(&input, 7).unwrap()
        );
    }

    fn arb_labels() -> impl Strategy<Value = Vec<LinkClass>> {
        proptest::collection::vec(
            prop_oneof![
                Just(LinkClass::Bad),
                Just(LinkClass::Intermediate),
                Just(LinkClass::Good)
            ],
            1..60,
        )
    }

    proptest! {
        // Post-condition balance and the superset/subset multiset properties.
        #[test]
        fn ros_balances_and_contains_originals(labels in arb_labels(), seed in 0u64..100) {
            let indices = oversample_indices(&labels, seed).unwrap();
            // prefix is the identity over the input
            prop_assert!(indices[..labels.len()].iter().enumerate().all(|(i, &j)| i == j));
            // represented classes all reach the majority count
            let mut counts = [0usize; 3];
            for &i in &indices {
                counts[labels[i].index()] += 1;
            }
            let represented: Vec<usize> =
                counts.iter().copied().filter(|&c| c > 0).collect();
            let max = represented.iter().max().copied().unwrap();
            let min = represented.iter().min().copied().unwrap();
            prop_assert_eq!(max, min);
            // duplicates only reference real input positions
            prop_assert!(indices.iter().all(|&i| i < labels.len()));
        }

        #[test]
        fn rus_balances_with_an_ordered_subset(labels in arb_labels(), seed in 0u64..100) {
            let indices = undersample_indices(&labels, seed).unwrap();
            prop_assert!(indices.windows(2).all(|w| w[0] < w[1]), "strictly increasing");
            let mut counts = [0usize; 3];
            for &i in &indices {
                counts[labels[i].index()] += 1;
            }
            let represented: Vec<usize> =
                counts.iter().copied().filter(|&c| c > 0).collect();
            prop_assert_eq!(
                represented.iter().max(),
                represented.iter().min()
            );
            // same classes represented before and after
            let mut original = [0usize; 3];
            for l in &labels {
                original[l.index()] += 1;
            }
            for c in 0..3 {
                prop_assert_eq!(original[c] > 0, counts[c] > 0);
            }
        }

        // Different seeds may pick different duplicates or survivors, never
        // different class counts.
        #[test]
        fn seeds_change_choices_not_counts(labels in arb_labels()) {
            let a = oversample_indices(&labels, 1).unwrap();
            let b = oversample_indices(&labels, 2).unwrap();
            prop_assert_eq!(a.len(), b.len());
            let a = undersample_indices(&labels, 1).unwrap();
            let b = undersample_indices(&labels, 2).unwrap();
            prop_assert_eq!(a.len(), b.len());
        }
    }
}
