//! Von Neumann debiasing: scan non-overlapping bit pairs, map 01 -> 0 and
//! 10 -> 1, discard 00 and 11. For i.i.d. input with any fixed bias the
//! kept bits are exactly unbiased, at the cost of a data-dependent output
//! length (at most half the input, a quarter in expectation for fair
//! input).

use super::{BitString, StreamOrigin};

/// Extracts an unbiased stream from `input`. A trailing unpaired bit is
/// discarded. The output is tagged [`StreamOrigin::Extracted`].
pub fn von_neumann_extract(input: &BitString) -> BitString {
    let bits = input.bits();
    let mut out = Vec::with_capacity(bits.len() / 4);
    for pair in bits.chunks_exact(2) {
        match (pair[0], pair[1]) {
            (0, 1) => out.push(0),
            (1, 0) => out.push(1),
            _ => {}
        }
    }
    BitString::new(out, StreamOrigin::Extracted)
        .expect("extractor output contains only bits produced from valid bits")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn bs(bits: &[u8]) -> BitString {
        BitString::new(bits.to_vec(), StreamOrigin::Detector1).unwrap()
    }

    #[test]
    fn definition_example() {
        // pairs 01 10 00 11 01 -> 0 1 0
        let out = von_neumann_extract(&bs(&[0, 1, 1, 0, 0, 0, 1, 1, 0, 1]));
        assert_eq!(out.bits(), &[0, 1, 0]);
        assert_eq!(out.origin(), StreamOrigin::Extracted);
    }

    #[test]
    fn empty_and_odd_inputs() {
        assert!(von_neumann_extract(&bs(&[])).is_empty());
        // trailing unpaired bit never contributes
        assert_eq!(von_neumann_extract(&bs(&[0, 1, 1])).bits(), &[0]);
        assert_eq!(von_neumann_extract(&bs(&[1])).bits(), &[] as &[u8]);
    }

    #[test]
    fn output_never_exceeds_half_the_input() {
        let mut stream = crate::rng::substream(9, "vn-length", 0);
        for _ in 0..50 {
            let n = stream.gen_range(0usize..500);
            let bits: Vec<u8> = (0..n).map(|_| u8::from(stream.gen_bool(0.3))).collect();
            let out = von_neumann_extract(&bs(&bits));
            assert!(out.len() <= n / 2, "{} kept from {n}", out.len());
        }
    }

    #[test]
    fn global_bit_flip_complements_the_output() {
        let mut stream = crate::rng::substream(9, "vn-flip", 0);
        let bits: Vec<u8> = (0..4001).map(|_| u8::from(stream.gen_bool(0.6))).collect();
        let flipped: Vec<u8> = bits.iter().map(|b| 1 - b).collect();
        let a = von_neumann_extract(&bs(&bits));
        let b = von_neumann_extract(&bs(&flipped));
        assert_eq!(a.len(), b.len(), "flip preserves which pairs are kept");
        for (x, y) in a.bits().iter().zip(b.bits()) {
            assert_eq!(*x, 1 - *y, "each kept bit is complemented");
        }
    }

    #[test]
    fn biased_input_yields_unbiased_output() {
        // detector-rate bias: p(1) = 0.447, one million input bits
        let p = 0.447;
        let mut stream = crate::rng::substream(9, "vn-bias", 0);
        let bits: Vec<u8> = (0..1_000_000)
            .map(|_| u8::from(stream.gen_bool(p)))
            .collect();
        let out = von_neumann_extract(&bs(&bits));
        let m = out.len() as f64;
        // kept-pair rate is 2 p (1-p) ~ 0.494, so m ~ 247k
        assert!(m > 200_000.0, "kept {m} bits, expected about 247k");
        let ones = out.ones() as f64;
        let sigma = 0.5 * m.sqrt();
        assert!(
            (ones - 0.5 * m).abs() < 3.0 * sigma,
            "ones fraction {} deviates more than 3 sigma from 1/2",
            ones / m
        );
    }

    #[test]
    fn extraction_is_deterministic() {
        let bits: Vec<u8> = (0..1000).map(|i| u8::from(i % 3 == 0)).collect();
        let a = von_neumann_extract(&bs(&bits));
        let b = von_neumann_extract(&bs(&bits));
        assert_eq!(a.bits(), b.bits());
    }
}
