//! Cleaning and interpolation of missing RSSI readings.
//!
//! Three strategies are compared: leave gaps as they are, fill them with
//! Gaussian noise anchored on the neighboring valid readings, or use domain
//! knowledge and substitute 0 (no received signal). Whatever is filled, the
//! original reception mask travels with the series so that packet reception
//! ratios are always computed from genuine receptions.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::math;
use crate::rng::{stream_rng, stream};
use crate::trace::LinkTrace;

/// Missing-value handling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InterpolationStrategy {
    /// Keep gaps; downstream windows containing them are dropped.
    NoInterp,
    /// Fill each gap with Gaussian noise around the linear interpolation of
    /// the bounding valid readings.
    GaussianNoise,
    /// Replace missing readings with 0: no received signal.
    DomainZero,
}

impl fmt::Display for InterpolationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InterpolationStrategy::NoInterp => "none",
            InterpolationStrategy::GaussianNoise => "gaussian",
            InterpolationStrategy::DomainZero => "zero",
        })
    }
}

impl FromStr for InterpolationStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(InterpolationStrategy::NoInterp),
            "gaussian" => Ok(InterpolationStrategy::GaussianNoise),
            "zero" => Ok(InterpolationStrategy::DomainZero),
            _ => Err(alloc::format!("unknown interpolation strategy {s:?}")),
        }
    }
}

/// A trace after missing-value handling.
///
/// `rssi_series[i]` is present for every slot except under
/// [`InterpolationStrategy::NoInterp`]; `received_mask[i]` is true only for
/// packets that genuinely arrived, and those positions always carry the
/// original reading.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTrace {
    rssi: Vec<Option<f64>>,
    received: Vec<bool>,
    /// Number of slots that were filled in.
    pub filled: usize,
    /// True when an entirely empty trace fell back to all-zero fills under
    /// the Gaussian strategy (no valid anchor exists).
    pub empty_fallback: bool,
}

impl PreparedTrace {
    pub fn rssi_series(&self) -> &[Option<f64>] {
        &self.rssi
    }

    pub fn received_mask(&self) -> &[bool] {
        &self.received
    }

    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }
}

/// Linear interpolation of a gap position between its bounding valid
/// readings; the nearest single valid value for leading/trailing gaps.
fn gap_mean(prev: Option<(usize, f64)>, next: Option<(usize, f64)>, j: usize) -> f64 {
    match (prev, next) {
        (Some((ip, pv)), Some((in_, nv))) => {
            let span = (in_ - ip) as f64;
            pv + (nv - pv) * ((j - ip) as f64) / span
        }
        (Some((_, pv)), None) => pv,
        (None, Some((_, nv))) => nv,
        (None, None) => 0.0,
    }
}

/// Applies a missing-value strategy to one trace.
///
/// Gaussian fills draw from N(linear-interpolated mean, sigma) where sigma
/// is the sample standard deviation of the trace's valid readings (zero
/// with fewer than two), clamped to [0, 127] and rounded to an integer.
/// The function is total and deterministic for a fixed `(trace, strategy,
/// seed)`.
pub fn interpolate(
    trace: &LinkTrace,
    strategy: InterpolationStrategy,
    seed: u64,
) -> PreparedTrace {
    let n = trace.packets_per_trace();
    let received: Vec<bool> = trace.slots().iter().map(|s| s.is_received()).collect();
    let mut rssi: Vec<Option<f64>> =
        trace.slots().iter().map(|s| s.rssi().map(|v| v as f64)).collect();
    let missing = received.iter().filter(|&&r| !r).count();

    match strategy {
        InterpolationStrategy::NoInterp => PreparedTrace {
            rssi,
            received,
            filled: 0,
            empty_fallback: false,
        },
        InterpolationStrategy::DomainZero => {
            for value in rssi.iter_mut() {
                if value.is_none() {
                    *value = Some(0.0);
                }
            }
            PreparedTrace { rssi, received, filled: missing, empty_fallback: false }
        }
        InterpolationStrategy::GaussianNoise => {
            let valid: Vec<f64> = rssi.iter().flatten().copied().collect();
            if valid.is_empty() {
                // no anchor to interpolate from; fall back to zeros
                return PreparedTrace {
                    rssi: alloc::vec![Some(0.0); n],
                    received,
                    filled: missing,
                    empty_fallback: true,
                };
            }
            let sigma = math::sample_std(&valid);
            // next valid reading at or after each index
            let mut next_valid: Vec<Option<(usize, f64)>> = alloc::vec![None; n];
            let mut upcoming = None;
            for j in (0..n).rev() {
                if let Some(v) = rssi[j] {
                    upcoming = Some((j, v));
                }
                next_valid[j] = upcoming;
            }
            let mut rng = stream_rng(seed, &[stream::INTERP]);
            let mut prev_valid: Option<(usize, f64)> = None;
            for j in 0..n {
                match rssi[j] {
                    Some(v) => prev_valid = Some((j, v)),
                    None => {
                        let mean = gap_mean(prev_valid, next_valid[j], j);
                        let z: f64 = rng.sample(StandardNormal);
                        let value = math::round((mean + sigma * z).clamp(0.0, 127.0));
                        rssi[j] = Some(value);
                    }
                }
            }
            PreparedTrace { rssi, received, filled: missing, empty_fallback: false }
        }
    }
}
