//! Calibration of the statistical battery ("testing the tests").
//!
//! Under a uniform random input every test's p-value must itself be
//! uniformly distributed on [0, 1]. Each check below runs one test over 200
//! seeded pseudo-random strings of 10^5 bits and compares the empirical
//! p-value distribution against Uniform[0, 1] with a Kolmogorov–Smirnov
//! statistic, rejecting above the 1% critical value 1.628/sqrt(200).
//!
//! The strings are fixed by the library's seed-derivation scheme, so these
//! are deterministic regression tests: a formula or parameter slip that
//! skews any test's null distribution (e.g. a wrong variance in the
//! template test, a dropped term in the cusums tail sum) shows up here even
//! when single worked examples still pass.

use kcbs_core::randtests::nist::{
    aperiodic_templates, approximate_entropy, block_frequency, cusums, frequency,
    longest_run_of_ones, non_overlapping_templates, runs, serial, two_bit, CusumMode,
};
use kcbs_core::rng;
use rand::RngCore;
use rayon::prelude::*;
use std::sync::OnceLock;

const STRING_COUNT: usize = 200;
const STRING_LEN: usize = 100_000;
/// 1% Kolmogorov-Smirnov critical value for n = 200: 1.628 / sqrt(200).
const KS_CRITICAL_1PCT: f64 = 0.11512;

static STRINGS: OnceLock<Vec<Vec<u8>>> = OnceLock::new();

fn strings() -> &'static [Vec<u8>] {
    STRINGS.get_or_init(|| {
        (0..STRING_COUNT as u64)
            .map(|i| {
                let mut stream = rng::substream(rng::DEFAULT_SEED, "calibration-string", i);
                let mut buf = vec![0u8; STRING_LEN];
                stream.fill_bytes(&mut buf);
                for b in &mut buf {
                    *b &= 1;
                }
                buf
            })
            .collect()
    })
}

/// Two-sided KS distance between a sample and Uniform[0, 1].
fn ks_statistic(mut ps: Vec<f64>) -> f64 {
    assert!(!ps.is_empty());
    ps.sort_by(|a, b| a.partial_cmp(b).expect("p-values are finite"));
    let n = ps.len() as f64;
    let mut d = 0.0f64;
    for (i, p) in ps.iter().enumerate() {
        let above = (i as f64 + 1.0) / n - p;
        let below = p - i as f64 / n;
        d = d.max(above).max(below);
    }
    d
}

fn assert_calibrated(name: &str, ps: Vec<f64>) {
    assert_eq!(
        ps.len(),
        STRING_COUNT,
        "{name}: every string must yield a p-value"
    );
    for p in &ps {
        assert!(
            (0.0..=1.0).contains(p),
            "{name}: p-value {p} outside [0, 1]"
        );
    }
    let d = ks_statistic(ps);
    assert!(
        d < KS_CRITICAL_1PCT,
        "{name}: p-values are not uniform under the null \
         (KS = {d:.4}, 1% critical value {KS_CRITICAL_1PCT})"
    );
}

fn collect(
    test: impl Fn(&[u8]) -> Result<f64, kcbs_core::randtests::Insufficient> + Sync,
) -> Vec<f64> {
    strings()
        .par_iter()
        .map(|s| test(s).expect("10^5 bits is long enough for every battery test"))
        .collect()
}

#[test]
fn frequency_p_values_are_uniform_under_the_null() {
    assert_calibrated("frequency", collect(frequency));
}

#[test]
fn block_frequency_p_values_are_uniform_under_the_null() {
    assert_calibrated("block_frequency", collect(|s| block_frequency(s, 128)));
}

#[test]
fn runs_p_values_are_uniform_under_the_null() {
    assert_calibrated("runs", collect(runs));
}

#[test]
fn longest_run_p_values_are_uniform_under_the_null() {
    assert_calibrated(
        "longest_run_of_ones",
        collect(|s| longest_run_of_ones(s, 128)),
    );
}

#[test]
fn template_fisher_p_values_are_uniform_under_the_null() {
    let templates = aperiodic_templates(8);
    assert_calibrated(
        "non_overlapping_templates",
        collect(|s| non_overlapping_templates(s, &templates, 8)),
    );
}

#[test]
fn serial_p_values_are_uniform_under_the_null() {
    assert_calibrated("serial", collect(|s| serial(s, 2)));
}

#[test]
fn approximate_entropy_p_values_are_uniform_under_the_null() {
    assert_calibrated(
        "approximate_entropy",
        collect(|s| approximate_entropy(s, 2)),
    );
}

#[test]
fn cusums_forward_p_values_are_uniform_under_the_null() {
    assert_calibrated("cusums_forward", collect(|s| cusums(s, CusumMode::Forward)));
}

#[test]
fn cusums_backward_p_values_are_uniform_under_the_null() {
    assert_calibrated(
        "cusums_backward",
        collect(|s| cusums(s, CusumMode::Backward)),
    );
}

#[test]
fn two_bit_p_values_are_uniform_under_the_null() {
    assert_calibrated("two_bit", collect(two_bit));
}
