//! Output-side statistics: turning trial logs into bit streams, Von
//! Neumann extraction, and a nine-test battery with the theta = 0.001
//! pass rule.
//!
//! Three streams come out of a log: S1 (first-slot outcomes), S2
//! (second-slot outcomes), and St (the two interleaved). The raw streams
//! are biased (each detector clicks with probability ~0.447) and St is
//! anticorrelated by construction (orthogonal projectors never click
//! together), so extraction is applied before the battery on the
//! per-detector streams, while St is deliberately tested raw to show the
//! correlation-sensitive tests failing.
//!
//! Bit files are written either as ASCII `0`/`1` lines (64 per line, with
//! the standard version comment) or packed binary behind a one-line
//! `bits=<n>` header, first bit in the most significant position.

pub mod extract;
pub mod nist;
pub mod special;

pub use extract::von_neumann_extract;
pub use nist::{CusumMode, Insufficient, PValue};

use crate::fileio::{self, IoFormatError};
use crate::sim::TrialLog;
use crate::FORMAT_VERSION;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Battery pass threshold used throughout.
pub const DEFAULT_THETA: f64 = 0.001;

#[derive(Debug, Error)]
pub enum RandTestsError {
    #[error("bit strings contain only 0 or 1, found {value} at index {index}")]
    InvalidBit { index: usize, value: u8 },
    #[error(transparent)]
    Io(#[from] IoFormatError),
}

/// Where a bit stream came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamOrigin {
    /// First-slot outcomes, one bit per trial.
    Detector1,
    /// Second-slot outcomes, one bit per trial.
    Detector2,
    /// Both outcomes interleaved, two bits per trial.
    Interleaved,
    /// Output of the Von Neumann extractor.
    Extracted,
}

impl StreamOrigin {
    pub fn label(self) -> &'static str {
        match self {
            StreamOrigin::Detector1 => "S1",
            StreamOrigin::Detector2 => "S2",
            StreamOrigin::Interleaved => "St",
            StreamOrigin::Extracted => "extracted",
        }
    }
}

impl fmt::Display for StreamOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An ordered bit sequence tagged with its origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitString {
    bits: Vec<u8>,
    origin: StreamOrigin,
}

impl BitString {
    /// Wraps raw bits, rejecting any value other than 0 or 1.
    pub fn new(bits: Vec<u8>, origin: StreamOrigin) -> Result<Self, RandTestsError> {
        if let Some(index) = bits.iter().position(|&b| b > 1) {
            return Err(RandTestsError::InvalidBit {
                index,
                value: bits[index],
            });
        }
        Ok(BitString { bits, origin })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| usize::from(b)).sum()
    }

    pub fn origin(&self) -> StreamOrigin {
        self.origin
    }
}

/// The three bit streams a trial log yields.
#[derive(Clone, Debug)]
pub struct LogStreams {
    pub s1: BitString,
    pub s2: BitString,
    pub interleaved: BitString,
}

/// Splits a log into S1, S2, and the interleaved stream St.
pub fn streams_from_log(log: &TrialLog) -> LogStreams {
    let k = log.records.len();
    let mut s1 = Vec::with_capacity(k);
    let mut s2 = Vec::with_capacity(k);
    let mut both = Vec::with_capacity(2 * k);
    for record in &log.records {
        s1.push(record.a_i);
        s2.push(record.a_j);
        both.push(record.a_i);
        both.push(record.a_j);
    }
    LogStreams {
        s1: BitString::new(s1, StreamOrigin::Detector1).expect("log outcomes are bits"),
        s2: BitString::new(s2, StreamOrigin::Detector2).expect("log outcomes are bits"),
        interleaved: BitString::new(both, StreamOrigin::Interleaved)
            .expect("log outcomes are bits"),
    }
}

/// One test's outcome inside a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TestResult {
    Computed { p_value: f64, pass: bool },
    InsufficientData { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub name: String,
    #[serde(flatten)]
    pub result: TestResult,
}

/// Battery outcome for one bit string: every test's p-value (or an
/// insufficient-data marker), plus the verdict lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestReport {
    pub format_version: u32,
    /// Display label of the stream's origin.
    pub origin: String,
    pub n_bits: usize,
    pub theta: f64,
    pub entries: Vec<TestEntry>,
    /// Names of tests with p < theta.
    pub failures: Vec<String>,
    /// Names of tests that could not run on a string this short.
    pub insufficient: Vec<String>,
    /// True when every test ran and none failed.
    pub all_pass: bool,
}

impl TestReport {
    /// The p-value of a named test, when it was computed.
    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| match e.result {
                TestResult::Computed { p_value, .. } => Some(p_value),
                TestResult::InsufficientData { .. } => None,
            })
    }
}

/// Names of the battery's tests, in report order.
pub const BATTERY_TESTS: [&str; 9] = [
    "frequency",
    "block_frequency",
    "runs",
    "longest_run_of_ones",
    "non_overlapping_templates",
    "serial",
    "approximate_entropy",
    "cusums",
    "two_bit",
];

/// Runs all nine tests at threshold `theta` (pass means p >= theta).
///
/// Defaults per test: block frequency M = 128, longest-run class M = 128,
/// the full 74-template aperiodic set at m = 8, serial and approximate
/// entropy at m = 2, cumulative sums reporting the worse of both
/// directions. Tests the string is too short for are marked, not failed;
/// `all_pass` demands positive evidence from every test.
pub fn battery(bits: &BitString, theta: f64) -> TestReport {
    assert!(
        theta > 0.0 && theta < 1.0,
        "pass threshold must lie in (0, 1), got {theta}"
    );
    let b = bits.bits();
    let templates = nist::aperiodic_templates(8);
    let results: [(&str, PValue); 9] = [
        ("frequency", nist::frequency(b)),
        ("block_frequency", nist::block_frequency(b, 128)),
        ("runs", nist::runs(b)),
        ("longest_run_of_ones", nist::longest_run_of_ones(b, 128)),
        (
            "non_overlapping_templates",
            nist::non_overlapping_templates(b, &templates, 8),
        ),
        ("serial", nist::serial(b, 2)),
        ("approximate_entropy", nist::approximate_entropy(b, 2)),
        ("cusums", nist::cusums_worst(b)),
        ("two_bit", nist::two_bit(b)),
    ];

    let mut entries = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut insufficient = Vec::new();
    for (name, outcome) in results {
        let result = match outcome {
            Ok(p_value) => {
                let pass = p_value >= theta;
                if !pass {
                    failures.push(name.to_string());
                }
                TestResult::Computed { p_value, pass }
            }
            Err(short) => {
                insufficient.push(name.to_string());
                TestResult::InsufficientData {
                    reason: short.to_string(),
                }
            }
        };
        entries.push(TestEntry {
            name: name.to_string(),
            result,
        });
    }
    let all_pass = failures.is_empty() && insufficient.is_empty();
    TestReport {
        format_version: FORMAT_VERSION,
        origin: bits.origin().label().to_string(),
        n_bits: bits.len(),
        theta,
        entries,
        failures,
        insufficient,
        all_pass,
    }
}

/// Writes bits as ASCII `0`/`1`, 64 per line, behind the version comment.
pub fn write_bits_ascii(path: &Path, bits: &BitString) -> Result<(), RandTestsError> {
    let mut out = fileio::version_comment();
    for line in bits.bits().chunks(64) {
        out.extend(line.iter().map(|&b| if b == 1 { '1' } else { '0' }));
        out.push('\n');
    }
    fileio::atomic_write(path, out.as_bytes())?;
    Ok(())
}

/// Reads an ASCII bit file; the caller supplies the origin tag, since the
/// file format does not record provenance.
pub fn read_bits_ascii(path: &Path, origin: StreamOrigin) -> Result<BitString, RandTestsError> {
    let text = fileio::read_text(path)?;
    let mut bits = Vec::new();
    for (lineno, line) in fileio::strip_version_comment(path, &text)? {
        for (col, ch) in line.trim().char_indices() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => {
                    return Err(IoFormatError::parse(
                        path,
                        lineno,
                        format!("invalid bit character {ch:?} at column {}", col + 1),
                    )
                    .into())
                }
            }
        }
    }
    BitString::new(bits, origin)
}

/// Writes bits packed 8 per byte, first bit most significant, behind a
/// one-line `bits=<n>` header carrying the exact bit count.
pub fn write_bits_packed(path: &Path, bits: &BitString) -> Result<(), RandTestsError> {
    let n = bits.len();
    let mut out = format!("bits={n}\n").into_bytes();
    out.reserve(n.div_ceil(8));
    for chunk in bits.bits().chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= b << (7 - i);
        }
        out.push(byte);
    }
    fileio::atomic_write(path, &out)?;
    Ok(())
}

/// Reads a packed bit file written by [`write_bits_packed`].
pub fn read_bits_packed(path: &Path, origin: StreamOrigin) -> Result<BitString, RandTestsError> {
    let raw = fileio::read_bytes(path)?;
    let newline = raw
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| IoFormatError::parse(path, 1, "missing bits=<n> header line"))?;
    let header = std::str::from_utf8(&raw[..newline])
        .map_err(|_| IoFormatError::parse(path, 1, "header is not UTF-8"))?;
    let n: usize = header
        .strip_prefix("bits=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| {
            IoFormatError::parse(path, 1, format!("expected bits=<n> header, got {header:?}"))
        })?;
    let body = &raw[newline + 1..];
    if body.len() != n.div_ceil(8) {
        return Err(IoFormatError::parse(
            path,
            2,
            format!(
                "payload holds {} bytes but {n} bits need {}",
                body.len(),
                n.div_ceil(8)
            ),
        )
        .into());
    }
    let mut bits = Vec::with_capacity(n);
    for i in 0..n {
        bits.push((body[i / 8] >> (7 - i % 8)) & 1);
    }
    BitString::new(bits, origin)
}
