//! The nine statistical tests behind the battery: eight from the standard
//! randomness test suite (frequency, block frequency, runs, longest run of
//! ones, non-overlapping template matching, serial, approximate entropy,
//! cumulative sums) plus the two-bit serial test from the cryptography
//! handbook tradition. Each returns a p-value, or an explicit
//! [`Insufficient`] marker when the string is shorter than the test's
//! documented minimum — never a silently meaningless number.
//!
//! Parameter defaults follow the suite's recommendations for strings of
//! 10^4-10^5 bits: block frequency M = 128, longest-run class M = 128,
//! serial and approximate entropy m = 2, template length m = 8 with the
//! full aperiodic template set.

use super::special::{erfc, igamc, normal_cdf};
use std::fmt;

/// A string too short for a test: the test's name, its documented minimum,
/// and the actual length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Insufficient {
    pub test: &'static str,
    pub minimum: usize,
    pub actual: usize,
}

impl fmt::Display for Insufficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} needs at least {} bits, got {}",
            self.test, self.minimum, self.actual
        )
    }
}

/// Either a p-value or an insufficient-data marker.
pub type PValue = Result<f64, Insufficient>;

fn require(test: &'static str, minimum: usize, actual: usize) -> Result<(), Insufficient> {
    if actual < minimum {
        Err(Insufficient {
            test,
            minimum,
            actual,
        })
    } else {
        Ok(())
    }
}

fn assert_bits(bits: &[u8]) {
    debug_assert!(bits.iter().all(|&b| b <= 1), "bit values must be 0 or 1");
}

/// Monobit frequency test: p = erfc(|sum of +-1| / sqrt(2n)).
/// Minimum length 100.
pub fn frequency(bits: &[u8]) -> PValue {
    assert_bits(bits);
    let n = bits.len();
    require("frequency", 100, n)?;
    let s: i64 = bits.iter().map(|&b| 2 * i64::from(b) - 1).sum();
    let s_obs = (s.abs() as f64) / (n as f64).sqrt();
    Ok(erfc(s_obs / std::f64::consts::SQRT_2))
}

/// Block frequency test with block size `m`: chi-squared of per-block ones
/// fractions against 1/2. Minimum length max(100, m).
pub fn block_frequency(bits: &[u8], m: usize) -> PValue {
    assert!(m >= 1, "block size must be positive");
    assert_bits(bits);
    let n = bits.len();
    require("block_frequency", 100.max(m), n)?;
    let blocks = n / m;
    let mut chi2 = 0.0;
    for block in bits.chunks_exact(m) {
        let pi = block.iter().map(|&b| f64::from(b)).sum::<f64>() / m as f64;
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * m as f64;
    Ok(igamc(blocks as f64 / 2.0, chi2 / 2.0))
}

/// Runs test: number of maximal same-bit runs against its expectation.
///
/// Follows the standard's gate: when the ones fraction already deviates
/// from 1/2 by at least 2/sqrt(n) the run count carries no extra
/// information and the reported p-value is 0.0. Minimum length 10 (the
/// standard's own worked example size).
pub fn runs(bits: &[u8]) -> PValue {
    assert_bits(bits);
    let n = bits.len();
    require("runs", 10, n)?;
    let nf = n as f64;
    let pi = bits.iter().map(|&b| f64::from(b)).sum::<f64>() / nf;
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return Ok(0.0);
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * nf * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi);
    Ok(erfc(num / den))
}

// (category count K+1, minimum length, shortest counted run, tail probabilities)
struct LongestRunClass {
    min_n: usize,
    low: usize,
    pi: &'static [f64],
}

fn longest_run_class(m: usize) -> LongestRunClass {
    match m {
        8 => LongestRunClass {
            min_n: 128,
            low: 1,
            pi: &[0.21484375, 0.3671875, 0.23046875, 0.1875],
        },
        128 => LongestRunClass {
            min_n: 6272,
            low: 4,
            pi: &[
                0.1174035788,
                0.242955959,
                0.249363483,
                0.17517706,
                0.102701071,
                0.112398847,
            ],
        },
        10_000 => LongestRunClass {
            min_n: 750_000,
            low: 10,
            pi: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        },
        _ => panic!("longest-run block size must be 8, 128, or 10000, got {m}"),
    }
}

/// Longest run of ones in `m`-bit blocks, chi-squared against the class
/// distribution. Supported classes m = 8 (n >= 128), m = 128 (n >= 6272),
/// m = 10000 (n >= 750000).
pub fn longest_run_of_ones(bits: &[u8], m: usize) -> PValue {
    assert_bits(bits);
    let class = longest_run_class(m);
    require("longest_run_of_ones", class.min_n, bits.len())?;
    let k = class.pi.len() - 1;
    let mut v = vec![0u64; k + 1];
    let mut blocks = 0u64;
    for block in bits.chunks_exact(m) {
        let mut longest = 0usize;
        let mut run = 0usize;
        for &b in block {
            if b == 1 {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        let idx = longest.clamp(class.low, class.low + k) - class.low;
        v[idx] += 1;
        blocks += 1;
    }
    let nf = blocks as f64;
    let chi2: f64 = v
        .iter()
        .zip(class.pi)
        .map(|(&obs, &p)| {
            let expect = nf * p;
            (obs as f64 - expect) * (obs as f64 - expect) / expect
        })
        .sum();
    Ok(igamc(k as f64 / 2.0, chi2 / 2.0))
}

/// All aperiodic (unbordered) templates of length `m`, as packed values
/// with the first bit in the most significant position. A template is
/// aperiodic when no proper prefix equals the suffix of the same length,
/// so shifted copies of it cannot overlap. There are 74 for m = 8.
pub fn aperiodic_templates(m: usize) -> Vec<u32> {
    assert!(
        (2..=16).contains(&m),
        "template length must be in 2..=16, got {m}"
    );
    let mut out = Vec::new();
    'candidates: for value in 0u32..(1 << m) {
        for l in 1..m {
            // prefix = top l bits, suffix = bottom l bits
            let prefix = value >> (m - l);
            let suffix = value & ((1 << l) - 1);
            if prefix == suffix {
                continue 'candidates;
            }
        }
        out.push(value);
    }
    out
}

/// Non-overlapping template matching over N = 8 blocks, aggregated across
/// templates.
///
/// Each template's block counts give a chi-squared p-value exactly as in
/// the standard; the battery needs one number per test, so the per-template
/// p-values are combined with Fisher's method (-2 sum ln p ~ chi-squared
/// with 2T dof under uniformity). Minimum length: every template must
/// expect at least one occurrence per block, i.e. n >= 8 (2^m + m - 1).
pub fn non_overlapping_templates(bits: &[u8], templates: &[u32], m: usize) -> PValue {
    assert!(
        (2..=16).contains(&m),
        "template length must be in 2..=16, got {m}"
    );
    assert!(!templates.is_empty(), "template set must be non-empty");
    assert!(
        templates.iter().all(|&t| t < (1 << m)),
        "template value exceeds {m} bits"
    );
    assert_bits(bits);
    const N_BLOCKS: usize = 8;
    let n = bits.len();
    let min_n = N_BLOCKS * ((1usize << m) + m - 1);
    require("non_overlapping_templates", min_n, n)?;

    let block_len = n / N_BLOCKS;
    let mu = (block_len - m + 1) as f64 / (1u64 << m) as f64;
    let sigma2 = block_len as f64
        * (1.0 / (1u64 << m) as f64 - (2.0 * m as f64 - 1.0) / (1u64 << (2 * m)) as f64);

    // packed rolling windows per block, first bit most significant
    let mask: u32 = (1 << m) - 1;
    let mut windows = Vec::with_capacity(N_BLOCKS);
    for block_idx in 0..N_BLOCKS {
        let block = &bits[block_idx * block_len..(block_idx + 1) * block_len];
        let mut ws = vec![0u32; block_len + 1 - m];
        let mut w = 0u32;
        for (i, &b) in block.iter().enumerate() {
            w = ((w << 1) | u32::from(b)) & mask;
            if i + 1 >= m {
                ws[i + 1 - m] = w;
            }
        }
        windows.push(ws);
    }

    let mut log_sum = 0.0f64;
    for &t in templates {
        let mut chi2 = 0.0;
        for ws in &windows {
            let mut count = 0u64;
            let mut i = 0usize;
            while i < ws.len() {
                if ws[i] == t {
                    count += 1;
                    i += m; // non-overlapping: jump past the match
                } else {
                    i += 1;
                }
            }
            let d = count as f64 - mu;
            chi2 += d * d / sigma2;
        }
        let p_t = igamc(N_BLOCKS as f64 / 2.0, chi2 / 2.0);
        if p_t <= 0.0 {
            return Ok(0.0); // a template p-value underflowed: certain failure
        }
        log_sum -= p_t.ln();
    }
    Ok(igamc(templates.len() as f64, log_sum))
}

// cyclic m-bit pattern counts (positions wrap around the end)
fn cyclic_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let n = bits.len();
    let mask: u32 = (1 << m) - 1;
    let mut counts = vec![0u64; 1 << m];
    let mut w = 0u32;
    // prime the window with the first m-1 bits
    for &b in &bits[..m - 1] {
        w = (w << 1) | u32::from(b);
    }
    for i in 0..n {
        let b = bits[(i + m - 1) % n];
        w = ((w << 1) | u32::from(b)) & mask;
        counts[w as usize] += 1;
    }
    counts
}

fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum_sq: f64 = cyclic_counts(bits, m)
        .iter()
        .map(|&c| (c as f64) * (c as f64))
        .sum();
    (1u64 << m) as f64 / n * sum_sq - n
}

/// Serial test for `m`-bit cyclic pattern equidistribution; reports the
/// first-difference p-value igamc(2^(m-2), (psi2_m - psi2_{m-1}) / 2).
/// Requires m >= 2 and n >= max(100, 2^(m+3)).
pub fn serial(bits: &[u8], m: usize) -> PValue {
    assert!((2..=16).contains(&m), "serial needs 2 <= m <= 16, got {m}");
    assert_bits(bits);
    let min_n = 100.max(1usize << (m + 3));
    require("serial", min_n, bits.len())?;
    let delta = psi_squared(bits, m) - psi_squared(bits, m - 1);
    Ok(igamc((1u64 << (m - 2)) as f64, delta.max(0.0) / 2.0))
}

/// Approximate entropy test: chi-squared = 2n (ln 2 - (phi_m - phi_{m+1}))
/// with 2^(m-1) dof scale, cyclic pattern counts. Requires m >= 1 and
/// n >= max(100, 2^(m+5)).
pub fn approximate_entropy(bits: &[u8], m: usize) -> PValue {
    assert!(
        (1..=15).contains(&m),
        "approximate entropy needs 1 <= m <= 15, got {m}"
    );
    assert_bits(bits);
    let min_n = 100.max(1usize << (m + 5));
    require("approximate_entropy", min_n, bits.len())?;
    let n = bits.len() as f64;
    let phi = |j: usize| -> f64 {
        cyclic_counts(bits, j)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum()
    };
    let ap_en = phi(m) - phi(m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - ap_en);
    Ok(igamc((1u64 << (m - 1)) as f64, chi2.max(0.0) / 2.0))
}

/// Direction of the cumulative-sums walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CusumMode {
    Forward,
    Backward,
}

/// Cumulative sums test: the maximum absolute partial sum of the +-1 walk,
/// compared with the range distribution of a random walk. Minimum length
/// 100.
pub fn cusums(bits: &[u8], mode: CusumMode) -> PValue {
    assert_bits(bits);
    let n = bits.len();
    require("cusums", 100, n)?;
    let mut s = 0i64;
    let mut z = 0i64;
    let step = |b: u8| 2 * i64::from(b) - 1;
    match mode {
        CusumMode::Forward => {
            for &b in bits {
                s += step(b);
                z = z.max(s.abs());
            }
        }
        CusumMode::Backward => {
            for &b in bits.iter().rev() {
                s += step(b);
                z = z.max(s.abs());
            }
        }
    }
    let nf = n as f64;
    let zf = z as f64; // z >= 1 for non-empty input
    let sqrt_n = nf.sqrt();
    let term = |j: f64, offset: f64| normal_cdf((4.0 * j + offset) * zf / sqrt_n);

    let mut p = 1.0;
    let start = ((-nf / zf + 1.0) / 4.0).floor() as i64;
    let end = ((nf / zf - 1.0) / 4.0).floor() as i64;
    for j in start..=end {
        let j = j as f64;
        p -= term(j, 1.0) - term(j, -1.0);
    }
    let start = ((-nf / zf - 3.0) / 4.0).floor() as i64;
    for j in start..=end {
        let j = j as f64;
        p += term(j, 3.0) - term(j, 1.0);
    }
    Ok(p.clamp(0.0, 1.0))
}

/// The battery's single cumulative-sums entry: the worse (smaller) of the
/// forward and backward p-values.
pub fn cusums_worst(bits: &[u8]) -> PValue {
    let fwd = cusums(bits, CusumMode::Forward)?;
    let bwd = cusums(bits, CusumMode::Backward)?;
    Ok(fwd.min(bwd))
}

/// Two-bit serial test: joint chi-squared of single-bit and overlapping
/// two-bit counts (approximately 2 dof). Minimum length 100.
pub fn two_bit(bits: &[u8]) -> PValue {
    assert_bits(bits);
    let n = bits.len();
    require("two_bit", 100, n)?;
    let n1 = bits.iter().map(|&b| u64::from(b)).sum::<u64>();
    let n0 = n as u64 - n1;
    let mut pairs = [0u64; 4]; // indexed by 2*first + second
    for w in bits.windows(2) {
        pairs[(2 * w[0] + w[1]) as usize] += 1;
    }
    let sq = |x: u64| (x as f64) * (x as f64);
    let x2 = 4.0 / (n as f64 - 1.0) * pairs.iter().copied().map(sq).sum::<f64>()
        - 2.0 / (n as f64) * (sq(n0) + sq(n1))
        + 1.0;
    Ok(igamc(1.0, x2.max(0.0) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn alternating(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i % 2) as u8).collect()
    }

    fn random_bits(n: usize, label: &str) -> Vec<u8> {
        let mut stream = crate::rng::substream(3, label, 0);
        (0..n).map(|_| u8::from(stream.gen_bool(0.5))).collect()
    }

    fn parse(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn frequency_balanced_string_scores_one() {
        assert_eq!(frequency(&alternating(100)).unwrap(), 1.0);
    }

    #[test]
    fn frequency_all_zeros_fails_hard() {
        let p = frequency(&vec![0u8; 10_000]).unwrap();
        assert!(p < 1e-300, "all-zeros p-value should underflow, got {p}");
    }

    #[test]
    fn frequency_standard_worked_example() {
        // the suite's own 10-bit example, checked through the same formula
        // at the documented 100-bit floor via direct statistics
        let bits = parse("1011010101");
        // below the documented minimum -> insufficient
        let err = frequency(&bits).unwrap_err();
        assert_eq!(err.minimum, 100);
        // the same counts embedded in a balanced 100-bit string shift p
        // accordingly; check the formula directly instead
        let s = 2.0; // 6 ones - 4 zeros
        let p = erfc(s / (10.0f64).sqrt() / std::f64::consts::SQRT_2);
        assert!((p - 0.527089).abs() < 1e-6, "got {p}");
    }

    #[test]
    fn runs_standard_worked_example() {
        let p = runs(&parse("1001101011")).unwrap();
        assert!((p - 0.147232).abs() < 1e-6, "got {p}");
    }

    #[test]
    fn runs_gate_fires_on_biased_input() {
        // 90% ones: |pi - 1/2| = 0.4 >= 2/sqrt(1000)
        let mut bits = vec![1u8; 1000];
        for b in bits.iter_mut().take(100) {
            *b = 0;
        }
        assert_eq!(runs(&bits).unwrap(), 0.0);
    }

    #[test]
    fn block_frequency_alternating_is_perfectly_balanced() {
        let p = block_frequency(&alternating(12_800), 128).unwrap();
        assert_eq!(p, 1.0, "every block has exactly half ones");
    }

    #[test]
    fn longest_run_rejects_unsupported_class() {
        let result = std::panic::catch_unwind(|| longest_run_of_ones(&alternating(10_000), 64));
        assert!(result.is_err());
    }

    #[test]
    fn longest_run_detects_missing_long_runs() {
        // alternating bits never produce a run of 2: category floor piles up
        let p = longest_run_of_ones(&alternating(20_000), 128).unwrap();
        assert!(p < 1e-12, "got {p}");
    }

    #[test]
    fn aperiodic_template_counts_match_the_unbordered_word_sequence() {
        // unbordered binary word counts: 2, 4, 6, 12, 20, 40, 74 for m=2..8
        let expected = [2, 4, 6, 12, 20, 40, 74];
        for (m, want) in (2..=8).zip(expected) {
            assert_eq!(aperiodic_templates(m).len(), want, "m = {m}");
        }
        // spot-check: 0b10 and 0b01 are the only aperiodic 2-bit words
        assert_eq!(aperiodic_templates(2), vec![0b01, 0b10]);
        // no template may equal its own rotation overlap; 0b1010 is periodic
        assert!(!aperiodic_templates(4).contains(&0b1010));
    }

    #[test]
    fn notm_flags_a_planted_template_excess() {
        // plant 11111111 much more often than chance in otherwise random bits
        let mut bits = random_bits(50_000, "notm-plant");
        for start in (0..bits.len() - 8).step_by(250) {
            bits[start..start + 8].fill(1);
        }
        let p = non_overlapping_templates(&bits, &aperiodic_templates(8), 8).unwrap();
        assert!(p < 1e-6, "got {p}");
    }

    #[test]
    fn serial_and_approximate_entropy_reject_anticorrelation() {
        // alternating bits have zero 00/11 patterns
        let p = serial(&alternating(10_000), 2).unwrap();
        assert!(p < 1e-300, "serial: {p}");
        let p = approximate_entropy(&alternating(10_000), 2).unwrap();
        assert!(p < 1e-300, "approximate entropy: {p}");
    }

    #[test]
    fn cusums_worked_example() {
        // the suite's example: eps = 1011010111, forward z = 4, n = 10 is
        // below our floor; verify the tail formula itself on a random
        // string against a direct Monte Carlo bound instead
        let bits = random_bits(100_000, "cusums-mc");
        let p = cusums(&bits, CusumMode::Forward).unwrap();
        assert!((0.0..=1.0).contains(&p));
        // deterministic drift must be detected
        let drift: Vec<u8> = (0..10_000).map(|i| u8::from(i % 16 < 9)).collect();
        let p = cusums(&drift, CusumMode::Forward).unwrap();
        assert!(p < 1e-6, "drifting walk must fail, got {p}");
    }

    #[test]
    fn cusums_modes_agree_on_palindromes() {
        let mut bits = random_bits(5_000, "cusums-palindrome");
        let mirrored: Vec<u8> = bits.iter().rev().copied().collect();
        bits.extend(mirrored);
        let f = cusums(&bits, CusumMode::Forward).unwrap();
        let b = cusums(&bits, CusumMode::Backward).unwrap();
        assert_eq!(f, b, "palindrome makes both directions identical");
    }

    #[test]
    fn two_bit_counts_all_overlapping_pairs() {
        // alternating: n00 = n11 = 0 -> enormous statistic
        let p = two_bit(&alternating(10_000)).unwrap();
        assert!(p < 1e-300, "got {p}");
        // balanced random input passes comfortably
        let p = two_bit(&random_bits(100_000, "two-bit-ok")).unwrap();
        assert!(p > 0.001, "got {p}");
    }

    #[test]
    fn insufficient_markers_name_the_test_and_the_floor() {
        let short = vec![1u8, 0, 1];
        let err = longest_run_of_ones(&short, 128).unwrap_err();
        assert_eq!(err.test, "longest_run_of_ones");
        assert_eq!(err.minimum, 6272);
        assert_eq!(err.actual, 3);
        assert!(err.to_string().contains("6272"));
        assert!(serial(&short, 2).is_err());
        assert!(two_bit(&short).is_err());
        assert!(cusums_worst(&short).is_err());
        let err = non_overlapping_templates(&short, &aperiodic_templates(8), 8).unwrap_err();
        assert_eq!(err.minimum, 8 * (256 + 7));
    }

    #[test]
    fn random_input_passes_every_test() {
        let bits = random_bits(100_000, "all-pass");
        let theta = 0.001;
        assert!(frequency(&bits).unwrap() >= theta);
        assert!(block_frequency(&bits, 128).unwrap() >= theta);
        assert!(runs(&bits).unwrap() >= theta);
        assert!(longest_run_of_ones(&bits, 128).unwrap() >= theta);
        assert!(non_overlapping_templates(&bits, &aperiodic_templates(8), 8).unwrap() >= theta);
        assert!(serial(&bits, 2).unwrap() >= theta);
        assert!(approximate_entropy(&bits, 2).unwrap() >= theta);
        assert!(cusums_worst(&bits).unwrap() >= theta);
        assert!(two_bit(&bits).unwrap() >= theta);
    }
}
