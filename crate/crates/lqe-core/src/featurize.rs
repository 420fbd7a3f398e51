//! Sliding-window feature vectors and packet-reception-ratio labels.
//!
//! Every position `i` of a prepared trace yields one training example: the
//! feature vector is computed from the history window of `w_history` packets
//! ending at `i` (inclusive), and the label is the three-class quality of
//! the following `w_prr` packets — `bad` when their reception ratio is at
//! most 0.1, `good` when it is at least 0.9, `intermediate` otherwise.
//!
//! Labels are computed from the genuine reception mask only; interpolated
//! RSSI values feed the features, never the labels.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::math;
use crate::preprocess::PreparedTrace;

/// Three-valued link quality target.
///
/// Canonical order is `Bad < Intermediate < Good`; class indices follow it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LinkClass {
    Bad,
    Intermediate,
    Good,
}

/// Number of link classes.
pub const N_CLASSES: usize = 3;

impl LinkClass {
    pub const ALL: [LinkClass; N_CLASSES] =
        [LinkClass::Bad, LinkClass::Intermediate, LinkClass::Good];

    pub fn index(self) -> usize {
        match self {
            LinkClass::Bad => 0,
            LinkClass::Intermediate => 1,
            LinkClass::Good => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<LinkClass> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::Bad => "bad",
            LinkClass::Intermediate => "intermediate",
            LinkClass::Good => "good",
        }
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LinkClass {
    type Err = FeaturizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bad" => Ok(LinkClass::Bad),
            "intermediate" => Ok(LinkClass::Intermediate),
            "good" => Ok(LinkClass::Good),
            _ => Err(FeaturizeError::UnknownClass(String::from(s))),
        }
    }
}

/// Errors from labeling, windowing and feature-spec parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum FeaturizeError {
    /// PRR outside [0, 1] passed to the labeler.
    Domain(f64),
    /// Window range outside the trace bounds.
    Range { start: usize, w: usize, len: usize },
    /// The history window contains missing readings (no-interpolation mode).
    MissingData { position: usize },
    /// History plus prediction window exceed the trace length.
    WindowsExceedTrace { w_history: usize, w_prr: usize, packets_per_trace: usize },
    /// Window size outside the supported [2, 100] range.
    WindowOutOfRange { w: usize },
    /// Feature term power outside {-4..-1, 2..4}.
    InvalidPower(i8),
    /// Feature spec with no terms.
    EmptyFeatureSpec,
    /// Feature spec with a repeated term.
    DuplicateTerm(FeatureTerm),
    /// Unparseable feature-spec token.
    BadFeatureToken(String),
    /// Unknown class name.
    UnknownClass(String),
}

impl fmt::Display for FeaturizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeaturizeError::Domain(p) => write!(f, "PRR {p} outside [0, 1]"),
            FeaturizeError::Range { start, w, len } => {
                write!(f, "window [{start}, {start}+{w}) outside trace of length {len}")
            }
            FeaturizeError::MissingData { position } => {
                write!(f, "missing reading in history window at position {position}")
            }
            FeaturizeError::WindowsExceedTrace { w_history, w_prr, packets_per_trace } => write!(
                f,
                "w_history {w_history} + w_prr {w_prr} exceed trace length {packets_per_trace}"
            ),
            FeaturizeError::WindowOutOfRange { w } => {
                write!(f, "window size {w} outside [2, 100]")
            }
            FeaturizeError::InvalidPower(k) => {
                write!(f, "power {k} outside {{-4..-1, 2..4}}")
            }
            FeaturizeError::EmptyFeatureSpec => write!(f, "feature spec has no terms"),
            FeaturizeError::DuplicateTerm(t) => write!(f, "duplicate feature term {t}"),
            FeaturizeError::BadFeatureToken(t) => write!(f, "unknown feature token {t:?}"),
            FeaturizeError::UnknownClass(s) => write!(f, "unknown class {s:?}"),
        }
    }
}

impl core::error::Error for FeaturizeError {}

/// Maps a packet reception ratio to its class.
///
/// Boundaries are inclusive: `p <= 0.1` is bad and `p >= 0.9` is good.
pub fn label_from_prr(p: f64) -> Result<LinkClass, FeaturizeError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(FeaturizeError::Domain(p));
    }
    Ok(if p <= 0.1 {
        LinkClass::Bad
    } else if p >= 0.9 {
        LinkClass::Good
    } else {
        LinkClass::Intermediate
    })
}

/// Fraction of packets received over the half-open range `[start, start + w)`.
pub fn prr(mask: &[bool], start: usize, w: usize) -> Result<f64, FeaturizeError> {
    if w == 0 || start + w > mask.len() {
        return Err(FeaturizeError::Range { start, w, len: mask.len() });
    }
    let received = mask[start..start + w].iter().filter(|&&r| r).count();
    Ok(received as f64 / w as f64)
}

/// History/prediction window sizes, both restricted to [2, 100] packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "WindowConfigRepr"))]
pub struct WindowConfig {
    w_history: usize,
    w_prr: usize,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct WindowConfigRepr {
    w_history: usize,
    w_prr: usize,
}

#[cfg(feature = "serde")]
impl TryFrom<WindowConfigRepr> for WindowConfig {
    type Error = FeaturizeError;

    fn try_from(repr: WindowConfigRepr) -> Result<Self, Self::Error> {
        WindowConfig::new(repr.w_history, repr.w_prr)
    }
}

/// The window grid explored by the window-size ablation.
pub const WINDOW_GRID: [usize; 9] = [2, 5, 10, 15, 20, 30, 50, 80, 100];

impl WindowConfig {
    pub const MIN_W: usize = 2;
    pub const MAX_W: usize = 100;

    pub fn new(w_history: usize, w_prr: usize) -> Result<Self, FeaturizeError> {
        for w in [w_history, w_prr] {
            if !(Self::MIN_W..=Self::MAX_W).contains(&w) {
                return Err(FeaturizeError::WindowOutOfRange { w });
            }
        }
        Ok(WindowConfig { w_history, w_prr })
    }

    pub fn w_history(&self) -> usize {
        self.w_history
    }

    pub fn w_prr(&self) -> usize {
        self.w_prr
    }
}

/// One term of a feature vector.
///
/// Powers are restricted to {-4..-1, 2..4}; the first power is the base
/// term itself. `0^k := 0` for negative `k`, so a missing-signal RSSI of
/// zero maps to the feature floor instead of infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureTerm {
    /// Instant RSSI at the window end.
    Rssi,
    /// First difference of RSSI at the window end (0 at the trace start).
    GradRssi,
    /// Instant RSSI raised to an integer power.
    RssiPow(i8),
    /// Mean RSSI over the history window.
    RssiAvg,
    /// Population standard deviation of RSSI over the history window.
    RssiStd,
    /// Window-mean RSSI raised to an integer power.
    RssiAvgPow(i8),
}

const ADMISSIBLE_POWERS: [i8; 7] = [-4, -3, -2, -1, 2, 3, 4];

impl FeatureTerm {
    fn validate(self) -> Result<Self, FeaturizeError> {
        match self {
            FeatureTerm::RssiPow(k) | FeatureTerm::RssiAvgPow(k)
                if !ADMISSIBLE_POWERS.contains(&k) =>
            {
                Err(FeaturizeError::InvalidPower(k))
            }
            term => Ok(term),
        }
    }
}

impl fmt::Display for FeatureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureTerm::Rssi => f.write_str("rssi"),
            FeatureTerm::GradRssi => f.write_str("grad_rssi"),
            FeatureTerm::RssiPow(k) => write!(f, "rssi^{k}"),
            FeatureTerm::RssiAvg => f.write_str("rssi_avg"),
            FeatureTerm::RssiStd => f.write_str("rssi_std"),
            FeatureTerm::RssiAvgPow(k) => write!(f, "rssi_avg^{k}"),
        }
    }
}

impl FromStr for FeatureTerm {
    type Err = FeaturizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rssi" => Ok(FeatureTerm::Rssi),
            "grad_rssi" => Ok(FeatureTerm::GradRssi),
            "rssi_avg" => Ok(FeatureTerm::RssiAvg),
            "rssi_std" => Ok(FeatureTerm::RssiStd),
            _ => {
                let (base, power) = s
                    .split_once('^')
                    .ok_or_else(|| FeaturizeError::BadFeatureToken(String::from(s)))?;
                let k: i8 = power
                    .parse()
                    .map_err(|_| FeaturizeError::BadFeatureToken(String::from(s)))?;
                let term = match (base, k) {
                    ("rssi", 1) => FeatureTerm::Rssi,
                    ("rssi_avg", 1) => FeatureTerm::RssiAvg,
                    ("rssi", _) => FeatureTerm::RssiPow(k),
                    ("rssi_avg", _) => FeatureTerm::RssiAvgPow(k),
                    _ => return Err(FeaturizeError::BadFeatureToken(String::from(s))),
                };
                term.validate()
            }
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for FeatureTerm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for FeatureTerm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered, duplicate-free, non-empty list of feature terms.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<FeatureTerm>", into = "Vec<FeatureTerm>"))]
pub struct FeatureSpec {
    terms: Vec<FeatureTerm>,
}

impl FeatureSpec {
    pub fn new(terms: Vec<FeatureTerm>) -> Result<Self, FeaturizeError> {
        if terms.is_empty() {
            return Err(FeaturizeError::EmptyFeatureSpec);
        }
        for (i, term) in terms.iter().enumerate() {
            term.validate()?;
            if terms[..i].contains(term) {
                return Err(FeaturizeError::DuplicateTerm(*term));
            }
        }
        Ok(FeatureSpec { terms })
    }

    /// Parses a comma-separated spec string.
    ///
    /// Single terms are `rssi`, `grad_rssi`, `rssi_avg`, `rssi_std`,
    /// `rssi^K` and `rssi_avg^K`. A range token such as `rssi_avg^-4..4`
    /// expands to one term per power in the range, skipping 0 (`^1` is the
    /// base term).
    pub fn parse(spec: &str) -> Result<Self, FeaturizeError> {
        let mut terms = Vec::new();
        for token in spec.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            if let Some((base, range)) = token.split_once('^') {
                if let Some((lo, hi)) = range.split_once("..") {
                    let lo: i8 = lo
                        .parse()
                        .map_err(|_| FeaturizeError::BadFeatureToken(String::from(token)))?;
                    let hi: i8 = hi
                        .parse()
                        .map_err(|_| FeaturizeError::BadFeatureToken(String::from(token)))?;
                    if lo > hi {
                        return Err(FeaturizeError::BadFeatureToken(String::from(token)));
                    }
                    for k in lo..=hi {
                        if k == 0 {
                            continue;
                        }
                        let mut term = String::from(base);
                        term.push('^');
                        // itoa for i8 without std
                        let mut buf = itoa_i8(k);
                        term.push_str(buf.as_mut_str());
                        terms.push(term.parse::<FeatureTerm>()?);
                    }
                    continue;
                }
            }
            terms.push(token.parse::<FeatureTerm>()?);
        }
        FeatureSpec::new(terms)
    }

    pub fn terms(&self) -> &[FeatureTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The paper's default trio: instant, window-mean and window-std RSSI.
    pub fn rssi_trio() -> Self {
        FeatureSpec::new(alloc::vec![
            FeatureTerm::Rssi,
            FeatureTerm::RssiAvg,
            FeatureTerm::RssiStd,
        ])
        .expect("static spec is valid")
    }
}

fn itoa_i8(k: i8) -> String {
    let mut s = String::new();
    fmt::write(&mut s, format_args!("{k}")).expect("formatting i8 cannot fail");
    s
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{term}")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<FeatureTerm>> for FeatureSpec {
    type Error = FeaturizeError;

    fn try_from(terms: Vec<FeatureTerm>) -> Result<Self, Self::Error> {
        FeatureSpec::new(terms)
    }
}

impl From<FeatureSpec> for Vec<FeatureTerm> {
    fn from(spec: FeatureSpec) -> Self {
        spec.terms
    }
}

/// One training or evaluation instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Example {
    pub features: Vec<f64>,
    pub label: LinkClass,
    /// Index of the source trace within its trace set.
    pub trace_index: usize,
    /// Index of the last history packet within the trace.
    pub position: usize,
}

/// Computes one feature vector from the history window ending at `i`.
///
/// The window spans `[i - w_history + 1, i]`; `i` must be at least
/// `w_history - 1`. Missing readings anywhere in the window (possible only
/// without interpolation) yield [`FeaturizeError::MissingData`].
pub fn window_features(
    series: &[Option<f64>],
    i: usize,
    w_history: usize,
    spec: &FeatureSpec,
) -> Result<Vec<f64>, FeaturizeError> {
    if w_history == 0 || i + 1 < w_history || i >= series.len() {
        return Err(FeaturizeError::Range { start: i, w: w_history, len: series.len() });
    }
    let start = i + 1 - w_history;
    let mut window = Vec::with_capacity(w_history);
    for (offset, value) in series[start..=i].iter().enumerate() {
        match value {
            Some(v) => window.push(*v),
            None => return Err(FeaturizeError::MissingData { position: start + offset }),
        }
    }
    let current = window[w_history - 1];
    let mut window_mean = None;
    let mut mean = |window: &[f64]| *window_mean.get_or_insert_with(|| math::mean(window));

    let mut features = Vec::with_capacity(spec.len());
    for term in spec.terms() {
        let value = match term {
            FeatureTerm::Rssi => current,
            FeatureTerm::GradRssi => {
                if i == 0 {
                    0.0
                } else {
                    let prev = series[i - 1]
                        .ok_or(FeaturizeError::MissingData { position: i - 1 })?;
                    current - prev
                }
            }
            FeatureTerm::RssiPow(k) => math::powi_zero_floor(current, *k),
            FeatureTerm::RssiAvg => mean(&window),
            FeatureTerm::RssiStd => math::population_std(&window),
            FeatureTerm::RssiAvgPow(k) => math::powi_zero_floor(mean(&window), *k),
        };
        features.push(value);
    }
    Ok(features)
}

/// Examples built from one trace, plus the count of positions dropped for
/// missing history data (possible only without interpolation).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceExamples {
    pub examples: Vec<Example>,
    pub dropped: usize,
}

/// Slides stride-1 windows over a prepared trace.
///
/// Positions run over `i ∈ [w_history - 1, n - w_prr - 1]`; features come
/// from the history window ending at `i` and the label from the reception
/// mask of `[i + 1, i + w_prr]`. A fully present trace yields exactly
/// `n - w_history - w_prr + 1` examples.
pub fn build_examples(
    prepared: &PreparedTrace,
    trace_index: usize,
    wc: WindowConfig,
    spec: &FeatureSpec,
) -> Result<TraceExamples, FeaturizeError> {
    let n = prepared.len();
    let (wh, wp) = (wc.w_history(), wc.w_prr());
    if wh + wp > n {
        return Err(FeaturizeError::WindowsExceedTrace {
            w_history: wh,
            w_prr: wp,
            packets_per_trace: n,
        });
    }
    let series = prepared.rssi_series();
    let mask = prepared.received_mask();
    let mut examples = Vec::with_capacity(n - wh - wp + 1);
    let mut dropped = 0;
    for i in (wh - 1)..=(n - wp - 1) {
        let features = match window_features(series, i, wh, spec) {
            Ok(f) => f,
            Err(FeaturizeError::MissingData { .. }) => {
                dropped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let label = label_from_prr(prr(mask, i + 1, wp)?)?;
        examples.push(Example { features, label, trace_index, position: i });
    }
    Ok(TraceExamples { examples, dropped })
}

/// Builds examples for every trace of a prepared set, concatenated in trace
/// order. Returns the examples and the total dropped-position count.
pub fn build_example_set(
    prepared: &[PreparedTrace],
    wc: WindowConfig,
    spec: &FeatureSpec,
) -> Result<(Vec<Example>, usize), FeaturizeError> {
    let mut all = Vec::new();
    let mut dropped = 0;
    for (trace_index, pt) in prepared.iter().enumerate() {
        let batch = build_examples(pt, trace_index, wc, spec)?;
        all.extend(batch.examples);
        dropped += batch.dropped;
    }
    Ok((all, dropped))
}
