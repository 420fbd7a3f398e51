//! Deterministic synthetic trace generator with known ground truth.
//!
//! Links follow the classic S-shaped reception curve: a per-link SNR is
//! drawn uniformly from a configured range, shifted by the artificial noise
//! level, and mapped through a logistic curve to a true packet reception
//! ratio. Packets are then received independently with that probability,
//! and received packets carry an RSSI that is affine in SNR plus Gaussian
//! noise, clamped to the valid register range.
//!
//! All draws come from ChaCha8 streams keyed by `(seed, purpose, link,
//! level, packet)`, so the generator is reproducible bit-for-bit and
//! per-link streams do not depend on iteration order. In particular the
//! per-packet reception deviate is independent of the SNR, which makes the
//! received set monotone in link quality.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::featurize::{label_from_prr, LinkClass};
use crate::math;
use crate::rng::{stream, stream_rng};
use crate::trace::{LinkTrace, TraceSet, NOISE_LEVELS_DBM, RSSI_MAX};

/// Configuration of the synthetic link model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub n_links: usize,
    pub packets_per_trace: usize,
    pub noise_levels_dbm: Vec<i32>,
    pub seed: u64,
    /// Uniform range the per-link SNR is drawn from, in dB.
    pub snr_range_db: (f64, f64),
    /// SNR at which the true reception ratio is 0.5.
    pub prr_midpoint_db: f64,
    /// Logistic slope scale; smaller means a narrower transitional region.
    pub prr_slope_db: f64,
    /// RSSI units per dB of SNR.
    pub rssi_gain: f64,
    pub rssi_offset: f64,
    /// Standard deviation of the per-packet RSSI noise.
    pub rssi_sigma: f64,
}

/// Invalid synthetic configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid synthetic config: {}", self.0)
    }
}

impl core::error::Error for ConfigError {}

impl SynthConfig {
    /// Preset approximating the class imbalance of the real trace
    /// collection: roughly 61% good, 34% bad and 5% intermediate examples
    /// after featurization with 10/10 windows, with enough RSSI noise that
    /// the classes overlap in feature space.
    pub fn rutgers_like(n_links: usize, seed: u64) -> Self {
        SynthConfig {
            n_links,
            packets_per_trace: 300,
            noise_levels_dbm: NOISE_LEVELS_DBM.to_vec(),
            seed,
            snr_range_db: (2.0, 30.0),
            prr_midpoint_db: 0.0,
            prr_slope_db: 0.6,
            rssi_gain: 2.0,
            rssi_offset: 10.0,
            rssi_sigma: 6.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_links == 0 {
            return Err(ConfigError(String::from("n_links must be at least 1")));
        }
        if self.packets_per_trace == 0 {
            return Err(ConfigError(String::from("packets_per_trace must be at least 1")));
        }
        if self.noise_levels_dbm.is_empty() {
            return Err(ConfigError(String::from("noise_levels_dbm must be non-empty")));
        }
        for level in &self.noise_levels_dbm {
            if !NOISE_LEVELS_DBM.contains(level) {
                return Err(ConfigError(alloc::format!(
                    "noise level {level} dBm not in {NOISE_LEVELS_DBM:?}"
                )));
            }
        }
        let (lo, hi) = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ConfigError(alloc::format!("bad snr_range_db ({lo}, {hi})")));
        }
        if !(self.prr_slope_db > 0.0) {
            return Err(ConfigError(String::from("prr_slope_db must be positive")));
        }
        if !(self.rssi_sigma >= 0.0) {
            return Err(ConfigError(String::from("rssi_sigma must be non-negative")));
        }
        if !(self.prr_midpoint_db.is_finite()
            && self.rssi_gain.is_finite()
            && self.rssi_offset.is_finite())
        {
            return Err(ConfigError(String::from("model parameters must be finite")));
        }
        Ok(())
    }

    fn base_snr(&self, link: usize) -> f64 {
        let (lo, hi) = self.snr_range_db;
        let u: f64 = stream_rng(self.seed, &[stream::SYNTH_SNR, link as u64]).random();
        lo + u * (hi - lo)
    }

    fn true_prr(&self, snr_db: f64) -> f64 {
        math::logistic((snr_db - self.prr_midpoint_db) / self.prr_slope_db)
    }
}

/// Ground-truth record for one generated trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub link_index: usize,
    pub src: u32,
    pub dst: u32,
    pub noise_dbm: i32,
    pub snr_db: f64,
    pub true_prr: f64,
    pub true_class: LinkClass,
}

/// Generates the full synthetic trace set. Identical configs (including the
/// seed) produce bit-identical output.
pub fn generate(cfg: &SynthConfig) -> Result<TraceSet, ConfigError> {
    cfg.validate()?;
    let mut traces = Vec::with_capacity(cfg.n_links * cfg.noise_levels_dbm.len());
    for link in 0..cfg.n_links {
        let base = cfg.base_snr(link);
        for (level_idx, &level) in cfg.noise_levels_dbm.iter().enumerate() {
            let snr = base + level as f64;
            let prr = cfg.true_prr(snr);
            let mut readings = Vec::with_capacity(cfg.packets_per_trace);
            for packet in 0..cfg.packets_per_trace {
                let key = [stream::SYNTH_RECEPTION, link as u64, level_idx as u64, packet as u64];
                let u: f64 = stream_rng(cfg.seed, &key).random();
                if u < prr {
                    let key =
                        [stream::SYNTH_RSSI, link as u64, level_idx as u64, packet as u64];
                    let z: f64 = stream_rng(cfg.seed, &key).sample(StandardNormal);
                    let raw = cfg.rssi_gain * snr + cfg.rssi_offset + cfg.rssi_sigma * z;
                    let value = math::round(raw.clamp(0.0, RSSI_MAX as f64)) as u8;
                    readings.push(Some(value));
                } else {
                    readings.push(None);
                }
            }
            let trace = LinkTrace::new(link as u32 + 1, 0, level, readings)
                .map_err(|e| ConfigError(alloc::format!("{e}")))?;
            traces.push(trace);
        }
    }
    TraceSet::new(traces, cfg.packets_per_trace).map_err(|e| ConfigError(alloc::format!("{e}")))
}

/// Per-trace ground truth: the drawn SNR, the true reception ratio and the
/// class it maps to. Pure function of the config; records are in the same
/// order as [`generate`]'s traces.
pub fn ground_truth(cfg: &SynthConfig) -> Result<Vec<GroundTruth>, ConfigError> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.n_links * cfg.noise_levels_dbm.len());
    for link in 0..cfg.n_links {
        let base = cfg.base_snr(link);
        for &level in &cfg.noise_levels_dbm {
            let snr = base + level as f64;
            let true_prr = cfg.true_prr(snr);
            let true_class = label_from_prr(true_prr)
                .expect("logistic output is always within [0, 1]");
            records.push(GroundTruth {
                link_index: link,
                src: link as u32 + 1,
                dst: 0,
                noise_dbm: level,
                snr_db: snr,
                true_prr,
                true_class,
            });
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn pinned_cfg(snr: f64, ppt: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_links: 1,
            packets_per_trace: ppt,
            noise_levels_dbm: vec![0],
            seed,
            snr_range_db: (snr, snr),
            prr_midpoint_db: 0.0,
            prr_slope_db: 1.0,
            rssi_gain: 2.0,
            rssi_offset: 10.0,
            rssi_sigma: 2.0,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::rutgers_like(5, 411);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        assert_eq!(ground_truth(&cfg).unwrap(), ground_truth(&cfg).unwrap());
    }

    #[test]
    fn saturated_high_snr_receives_everything() {
        let cfg = SynthConfig {
            n_links: 4,
            noise_levels_dbm: vec![0, -5, -10],
            snr_range_db: (40.0, 50.0),
            ..pinned_cfg(0.0, 300, 3)
        };
        let ts = generate(&cfg).unwrap();
        for t in ts.traces() {
            let prr = t.received_count() as f64 / 300.0;
            assert!(prr >= 0.99, "prr = {prr}");
        }
    }

    #[test]
    fn saturated_low_snr_receives_nothing() {
        let cfg = SynthConfig {
            n_links: 4,
            snr_range_db: (-60.0, -40.0),
            ..pinned_cfg(0.0, 300, 3)
        };
        let ts = generate(&cfg).unwrap();
        assert!(ts.traces().iter().all(|t| t.is_empty_trace()));
        assert_eq!(ts.stats().n_empty_traces, 4);
    }

    #[test]
    fn midpoint_snr_gives_half_reception() {
        // Bernoulli-sum oracle: at the logistic midpoint the true PRR is
        // exactly 0.5, and 10,000 draws concentrate well within ±0.02
        // (3 binomial sigmas = 0.015).
        let cfg = pinned_cfg(0.0, 10_000, 17);
        let ts = generate(&cfg).unwrap();
        let received = ts.traces()[0].received_count();
        let empirical = received as f64 / 10_000.0;
        assert!((empirical - 0.5).abs() <= 0.02, "empirical = {empirical}");
    }

    #[test]
    fn ground_truth_applies_class_rules() {
        // snr = slope * ln(p / (1 - p)) + midpoint inverts the logistic
        let snr_for = |p: f64| libm::log(p / (1.0 - p));
        for (p, expect) in [
            (0.05, LinkClass::Bad),
            (0.5, LinkClass::Intermediate),
            (0.95, LinkClass::Good),
        ] {
            let cfg = pinned_cfg(snr_for(p), 10, 1);
            let gt = ground_truth(&cfg).unwrap();
            assert_eq!(gt.len(), 1);
            assert!((gt[0].true_prr - p).abs() < 1e-9);
            assert_eq!(gt[0].true_class, expect, "p = {p}");
        }
    }

    #[test]
    fn ground_truth_matches_generate_order() {
        let cfg = SynthConfig::rutgers_like(3, 9);
        let ts = generate(&cfg).unwrap();
        let gt = ground_truth(&cfg).unwrap();
        assert_eq!(ts.len(), gt.len());
        for (t, g) in ts.traces().iter().zip(&gt) {
            assert_eq!(t.src(), g.src);
            assert_eq!(t.dst(), g.dst);
            assert_eq!(t.noise_dbm(), g.noise_dbm);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SynthConfig::rutgers_like(1, 0);
        cfg.n_links = 0;
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::rutgers_like(1, 0);
        cfg.prr_slope_db = 0.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::rutgers_like(1, 0);
        cfg.rssi_sigma = -1.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::rutgers_like(1, 0);
        cfg.noise_levels_dbm = vec![-7];
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::rutgers_like(1, 0);
        cfg.snr_range_db = (5.0, 2.0);
        assert!(generate(&cfg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // Raising every link's SNR never loses a received packet and never
        // decreases any true PRR.
        #[test]
        fn reception_monotone_in_snr(
            seed in 0u64..200,
            lo in -6.0f64..2.0,
            shift in 0.1f64..8.0,
        ) {
            let base = SynthConfig {
                n_links: 3,
                snr_range_db: (lo, lo + 4.0),
                ..pinned_cfg(0.0, 200, seed)
            };
            let raised = SynthConfig {
                snr_range_db: (lo + shift, lo + 4.0 + shift),
                ..base.clone()
            };
            let gt_base = ground_truth(&base).unwrap();
            let gt_raised = ground_truth(&raised).unwrap();
            for (b, r) in gt_base.iter().zip(&gt_raised) {
                prop_assert!(r.true_prr >= b.true_prr);
            }
            let ts_base = generate(&base).unwrap();
            let ts_raised = generate(&raised).unwrap();
            for (tb, tr) in ts_base.traces().iter().zip(ts_raised.traces()) {
                for (sb, sr) in tb.slots().iter().zip(tr.slots()) {
                    prop_assert!(!sb.is_received() || sr.is_received());
                }
            }
        }

        // Empirical reception concentrates around the true PRR.
        #[test]
        fn empirical_prr_tracks_true_prr(seed in 0u64..200, snr in -3.0f64..3.0) {
            let cfg = pinned_cfg(snr, 1000, seed);
            let ts = generate(&cfg).unwrap();
            let gt = ground_truth(&cfg).unwrap();
            let p = gt[0].true_prr;
            let sigma = (p * (1.0 - p) / 1000.0).sqrt();
            let empirical = ts.traces()[0].received_count() as f64 / 1000.0;
            prop_assert!((empirical - p).abs() <= 3.0 * sigma + 1e-9,
                "p = {p}, empirical = {empirical}");
        }
    }
}
