//! Link-trace domain model, the raw Rutgers-format parser and dataset
//! statistics.
//!
//! A trace records one directed link observed for a fixed number of probe
//! packets (300 by default) at one artificial noise level. Each packet slot
//! either carries an RSSI reading in `[0, 127]` or is missing entirely: the
//! probe was never received, or the radio flagged the reading as invalid
//! (the sentinel value 128). Missing slots are first-class citizens here —
//! packet reception ratios are computed from them later.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Hardware sentinel for an invalid RSSI reading.
pub const RSSI_INVALID: u16 = 128;

/// Largest valid RSSI reading.
pub const RSSI_MAX: u8 = 127;

/// Artificial noise levels present in the trace collection, in dBm.
pub const NOISE_LEVELS_DBM: [i32; 5] = [0, -5, -10, -15, -20];

/// Default number of probe packets per trace.
pub const DEFAULT_PACKETS_PER_TRACE: usize = 300;

/// Errors from trace construction and parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceError {
    /// A line did not match the `<seq> <rssi>` grammar.
    MalformedLine { line_no: usize, content: String },
    /// A sequence number outside `1..=packets_per_trace`.
    SeqOutOfRange { line_no: usize, seq: i64 },
    /// An RSSI value outside `0..=128`.
    RssiOutOfRange { line_no: usize, value: i64 },
    /// The same sequence number appeared twice with conflicting readings.
    DuplicateSeq { line_no: usize, seq: u32 },
    /// A noise level outside the admissible set.
    InvalidNoiseLevel { noise_dbm: i32 },
    /// A trace whose slot count does not match the set's packets_per_trace.
    SlotCountMismatch { expected: usize, found: usize },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::MalformedLine { line_no, content } => {
                write!(f, "line {line_no}: malformed line {content:?}")
            }
            TraceError::SeqOutOfRange { line_no, seq } => {
                write!(f, "line {line_no}: sequence number {seq} out of range")
            }
            TraceError::RssiOutOfRange { line_no, value } => {
                write!(f, "line {line_no}: RSSI value {value} out of range")
            }
            TraceError::DuplicateSeq { line_no, seq } => {
                write!(f, "line {line_no}: conflicting duplicate for sequence {seq}")
            }
            TraceError::InvalidNoiseLevel { noise_dbm } => {
                write!(f, "noise level {noise_dbm} dBm is not one of {NOISE_LEVELS_DBM:?}")
            }
            TraceError::SlotCountMismatch { expected, found } => {
                write!(f, "expected {expected} slots per trace, found {found}")
            }
        }
    }
}

impl core::error::Error for TraceError {}

/// One probe packet slot: a sequence number and an optional RSSI reading.
///
/// `rssi = None` means the packet was not received (or its reading was the
/// invalid sentinel 128 in the raw file). A constructed slot never holds a
/// value above [`RSSI_MAX`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PacketSlot {
    seq: u32,
    rssi: Option<u8>,
}

impl PacketSlot {
    pub fn new(seq: u32, rssi: Option<u8>) -> Result<Self, TraceError> {
        if let Some(v) = rssi {
            if v > RSSI_MAX {
                return Err(TraceError::RssiOutOfRange { line_no: 0, value: v as i64 });
            }
        }
        Ok(PacketSlot { seq, rssi })
    }

    pub fn seq(&self) -> u32 {
        self.seq
    }

    /// The RSSI reading, or `None` for a missing packet.
    pub fn rssi(&self) -> Option<u8> {
        self.rssi
    }

    pub fn is_received(&self) -> bool {
        self.rssi.is_some()
    }
}

/// One 300-packet observation of a directed link at one noise level.
///
/// Slots are stored in sequence order `1..=packets_per_trace` with no gaps
/// or duplicates; unreceived packets are present as slots without RSSI.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkTrace {
    src: u32,
    dst: u32,
    noise_dbm: i32,
    slots: Vec<PacketSlot>,
}

impl LinkTrace {
    /// Builds a trace from per-sequence readings.
    ///
    /// `readings[i]` is the optional RSSI of sequence number `i + 1`.
    pub fn new(
        src: u32,
        dst: u32,
        noise_dbm: i32,
        readings: Vec<Option<u8>>,
    ) -> Result<Self, TraceError> {
        if !NOISE_LEVELS_DBM.contains(&noise_dbm) {
            return Err(TraceError::InvalidNoiseLevel { noise_dbm });
        }
        let slots = readings
            .into_iter()
            .enumerate()
            .map(|(i, r)| PacketSlot::new(i as u32 + 1, r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LinkTrace { src, dst, noise_dbm, slots })
    }

    pub fn src(&self) -> u32 {
        self.src
    }

    pub fn dst(&self) -> u32 {
        self.dst
    }

    pub fn noise_dbm(&self) -> i32 {
        self.noise_dbm
    }

    pub fn slots(&self) -> &[PacketSlot] {
        &self.slots
    }

    pub fn packets_per_trace(&self) -> usize {
        self.slots.len()
    }

    pub fn received_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_received()).count()
    }

    /// True when not a single packet of the trace was received.
    pub fn is_empty_trace(&self) -> bool {
        self.slots.iter().all(|s| !s.is_received())
    }
}

/// An ordered collection of traces sharing one packets-per-trace value.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceSet {
    traces: Vec<LinkTrace>,
    packets_per_trace: usize,
}

impl TraceSet {
    pub fn new(traces: Vec<LinkTrace>, packets_per_trace: usize) -> Result<Self, TraceError> {
        for t in &traces {
            if t.packets_per_trace() != packets_per_trace {
                return Err(TraceError::SlotCountMismatch {
                    expected: packets_per_trace,
                    found: t.packets_per_trace(),
                });
            }
        }
        Ok(TraceSet { traces, packets_per_trace })
    }

    pub fn traces(&self) -> &[LinkTrace] {
        &self.traces
    }

    pub fn packets_per_trace(&self) -> usize {
        self.packets_per_trace
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Dataset-level reception statistics.
    pub fn stats(&self) -> TraceStats {
        let n_traces = self.traces.len();
        let n_empty_traces = self.traces.iter().filter(|t| t.is_empty_trace()).count();
        let packets_sent = n_traces * self.packets_per_trace;
        let packets_received: usize = self.traces.iter().map(|t| t.received_count()).sum();
        let received_fraction = if packets_sent == 0 {
            0.0
        } else {
            packets_received as f64 / packets_sent as f64
        };
        TraceStats {
            n_traces,
            n_empty_traces,
            packets_sent,
            packets_received,
            received_fraction,
        }
    }
}

/// Reception statistics over a [`TraceSet`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStats {
    pub n_traces: usize,
    pub n_empty_traces: usize,
    pub packets_sent: usize,
    pub packets_received: usize,
    pub received_fraction: f64,
}

/// Parses one raw trace file.
///
/// The line grammar is whitespace-separated `<seq> <rssi>`; lines starting
/// with `#` and blank lines are ignored. Sequence numbers absent from the
/// file become missing slots, as do readings equal to the invalid sentinel
/// 128. Duplicate lines with identical readings are tolerated (retransmit
/// artifacts); conflicting duplicates are an error.
pub fn parse_rutgers_trace(
    text: &str,
    src: u32,
    dst: u32,
    noise_dbm: i32,
    packets_per_trace: usize,
) -> Result<LinkTrace, TraceError> {
    // raw readings, 128 kept distinct from "absent" until dedup is done
    let mut raw: Vec<Option<u16>> = alloc::vec![None; packets_per_trace];
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (seq_tok, rssi_tok) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(TraceError::MalformedLine { line_no, content: String::from(line) });
            }
        };
        let seq: i64 = seq_tok
            .parse()
            .map_err(|_| TraceError::MalformedLine { line_no, content: String::from(line) })?;
        let value: i64 = rssi_tok
            .parse()
            .map_err(|_| TraceError::MalformedLine { line_no, content: String::from(line) })?;
        if seq < 1 || seq > packets_per_trace as i64 {
            return Err(TraceError::SeqOutOfRange { line_no, seq });
        }
        if !(0..=RSSI_INVALID as i64).contains(&value) {
            return Err(TraceError::RssiOutOfRange { line_no, value });
        }
        let slot = &mut raw[(seq - 1) as usize];
        match slot {
            Some(prev) if *prev != value as u16 => {
                return Err(TraceError::DuplicateSeq { line_no, seq: seq as u32 });
            }
            _ => *slot = Some(value as u16),
        }
    }
    // 128 marks an invalid reading: record the slot as missing
    let readings = raw
        .into_iter()
        .map(|r| r.and_then(|v| if v == RSSI_INVALID { None } else { Some(v as u8) }))
        .collect();
    LinkTrace::new(src, dst, noise_dbm, readings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn full_trace(rssi: u8, ppt: usize) -> LinkTrace {
        LinkTrace::new(1, 2, 0, vec![Some(rssi); ppt]).unwrap()
    }

    fn empty_trace(ppt: usize) -> LinkTrace {
        LinkTrace::new(2, 1, 0, vec![None; ppt]).unwrap()
    }

    #[test]
    fn parses_three_received_slots() {
        let trace = parse_rutgers_trace("1 40\n2 41\n3 39\n", 1, 2, -5, 300).unwrap();
        assert_eq!(trace.received_count(), 3);
        assert_eq!(trace.packets_per_trace(), 300);
        assert_eq!(trace.slots()[0].rssi(), Some(40));
        assert_eq!(trace.slots()[1].rssi(), Some(41));
        assert_eq!(trace.slots()[2].rssi(), Some(39));
        assert!(trace.slots()[3..].iter().all(|s| !s.is_received()));
    }

    #[test]
    fn sentinel_128_becomes_missing() {
        let trace = parse_rutgers_trace("1 128\n2 50\n", 1, 2, 0, 300).unwrap();
        assert_eq!(trace.slots()[0].rssi(), None);
        assert_eq!(trace.slots()[1].rssi(), Some(50));
        assert_eq!(trace.received_count(), 1);
    }

    #[test]
    fn empty_file_yields_empty_trace() {
        let trace = parse_rutgers_trace("", 1, 2, 0, 300).unwrap();
        assert_eq!(trace.received_count(), 0);
        assert!(trace.is_empty_trace());
        assert_eq!(trace.packets_per_trace(), 300);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let trace = parse_rutgers_trace("# header\n\n  \n5 99\n", 1, 2, 0, 300).unwrap();
        assert_eq!(trace.slots()[4].rssi(), Some(99));
        assert_eq!(trace.received_count(), 1);
    }

    #[test]
    fn malformed_line_rejected() {
        let err = parse_rutgers_trace("1 forty\n", 1, 2, 0, 300).unwrap_err();
        assert!(matches!(err, TraceError::MalformedLine { line_no: 1, .. }));
        let err = parse_rutgers_trace("1 2 3\n", 1, 2, 0, 300).unwrap_err();
        assert!(matches!(err, TraceError::MalformedLine { .. }));
    }

    #[test]
    fn seq_out_of_range_rejected() {
        for bad in ["0 40", "301 40", "-3 40"] {
            let err = parse_rutgers_trace(bad, 1, 2, 0, 300).unwrap_err();
            assert!(matches!(err, TraceError::SeqOutOfRange { .. }), "{bad}");
        }
    }

    #[test]
    fn rssi_out_of_range_rejected() {
        for bad in ["1 129", "1 -1", "1 200"] {
            let err = parse_rutgers_trace(bad, 1, 2, 0, 300).unwrap_err();
            assert!(matches!(err, TraceError::RssiOutOfRange { .. }), "{bad}");
        }
    }

    #[test]
    fn identical_duplicates_tolerated_conflicting_rejected() {
        let trace = parse_rutgers_trace("7 40\n7 40\n", 1, 2, 0, 300).unwrap();
        assert_eq!(trace.slots()[6].rssi(), Some(40));
        let err = parse_rutgers_trace("7 40\n7 41\n", 1, 2, 0, 300).unwrap_err();
        assert!(matches!(err, TraceError::DuplicateSeq { line_no: 2, seq: 7 }));
        // 40 vs invalid-128 is a conflict of raw readings too
        let err = parse_rutgers_trace("7 40\n7 128\n", 1, 2, 0, 300).unwrap_err();
        assert!(matches!(err, TraceError::DuplicateSeq { .. }));
    }

    #[test]
    fn invalid_noise_level_rejected() {
        let err = LinkTrace::new(1, 2, -7, vec![None; 300]).unwrap_err();
        assert!(matches!(err, TraceError::InvalidNoiseLevel { noise_dbm: -7 }));
    }

    #[test]
    fn packet_slot_rejects_sentinel() {
        assert!(PacketSlot::new(1, Some(128)).is_err());
        assert!(PacketSlot::new(1, Some(127)).is_ok());
    }

    #[test]
    fn stats_single_full_trace() {
        let ts = TraceSet::new(vec![full_trace(70, 300)], 300).unwrap();
        let stats = ts.stats();
        assert_eq!(
            stats,
            TraceStats {
                n_traces: 1,
                n_empty_traces: 0,
                packets_sent: 300,
                packets_received: 300,
                received_fraction: 1.0,
            }
        );
    }

    #[test]
    fn stats_one_empty_one_full() {
        let ts = TraceSet::new(vec![empty_trace(300), full_trace(70, 300)], 300).unwrap();
        let stats = ts.stats();
        assert_eq!(stats.n_empty_traces, 1);
        assert_eq!(stats.received_fraction, 0.5);
    }

    #[test]
    fn mismatched_slot_count_rejected() {
        let err = TraceSet::new(vec![full_trace(70, 300)], 200).unwrap_err();
        assert!(matches!(err, TraceError::SlotCountMismatch { expected: 200, found: 300 }));
    }

    fn arb_trace(ppt: usize) -> impl Strategy<Value = LinkTrace> {
        proptest::collection::vec(proptest::option::of(0u8..=127), ppt)
            .prop_map(move |readings| LinkTrace::new(1, 2, 0, readings).unwrap())
    }

    proptest! {
        // Parser totality + invalid-reading policy: injected 128 readings
        // never survive into a constructed trace.
        #[test]
        fn parser_never_emits_sentinel(
            entries in proptest::collection::vec((1u32..=50, 0u16..=128), 0..60)
        ) {
            use core::fmt::Write;
            let mut text = String::new();
            let mut seen: [Option<u16>; 50] = [None; 50];
            let mut conflict = false;
            for (seq, rssi) in &entries {
                writeln!(text, "{seq} {rssi}").unwrap();
                let slot = &mut seen[(*seq - 1) as usize];
                match slot {
                    Some(prev) if *prev != *rssi => conflict = true,
                    _ => *slot = Some(*rssi),
                }
            }
            let result = parse_rutgers_trace(&text, 1, 2, 0, 50);
            if conflict {
                let is_dup = matches!(result, Err(TraceError::DuplicateSeq { .. }));
                prop_assert!(is_dup, "expected DuplicateSeq, got {:?}", result);
            } else {
                let trace = result.unwrap();
                prop_assert_eq!(trace.packets_per_trace(), 50);
                for slot in trace.slots() {
                    if let Some(v) = slot.rssi() {
                        prop_assert!(v <= 127);
                    }
                }
                // 128 readings were mapped to missing
                for (i, raw) in seen.iter().enumerate() {
                    let expect = raw.and_then(|v| if v == 128 { None } else { Some(v as u8) });
                    prop_assert_eq!(trace.slots()[i].rssi(), expect);
                }
            }
        }

        // Statistics additivity over concatenated sets.
        #[test]
        fn stats_additive_over_concatenation(
            a in proptest::collection::vec(arb_trace(20), 0..6),
            b in proptest::collection::vec(arb_trace(20), 0..6),
        ) {
            let sa = TraceSet::new(a.clone(), 20).unwrap().stats();
            let sb = TraceSet::new(b.clone(), 20).unwrap().stats();
            let mut both = a;
            both.extend(b);
            let s = TraceSet::new(both, 20).unwrap().stats();
            prop_assert_eq!(s.n_traces, sa.n_traces + sb.n_traces);
            prop_assert_eq!(s.n_empty_traces, sa.n_empty_traces + sb.n_empty_traces);
            prop_assert_eq!(s.packets_sent, sa.packets_sent + sb.packets_sent);
            prop_assert_eq!(s.packets_received, sa.packets_received + sb.packets_received);
            if s.packets_sent > 0 {
                let expect = s.packets_received as f64 / s.packets_sent as f64;
                prop_assert_eq!(s.received_fraction, expect);
            }
        }
    }
}
