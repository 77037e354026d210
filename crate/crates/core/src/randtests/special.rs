//! The two special functions every p-value in this module reduces to: the
//! complementary error function and the regularized upper incomplete gamma
//! `Q(a, x)`.
//!
//! Q is computed by the classic split: a power series for the lower
//! function when `x < a + 1` (where the series converges fast and the
//! complement is well-conditioned), and a modified-Lentz continued
//! fraction for the upper function otherwise. `erfc(x)` for `x >= 0` is
//! exactly `Q(1/2, x^2)`, so both functions share one code path. Accuracy
//! against an arbitrary-precision oracle is ~1e-14 absolute at the pinned
//! reference points, comfortably under the 1e-10 requirement.

/// Lanczos coefficients, g = 7, 9 terms.
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

const LN_SQRT_TWO_PI: f64 = 0.918938533204672741780329736406; // ln(2*pi)/2

/// Natural log of the gamma function for positive arguments (reflection
/// handles 0 < z < 1/2).
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0 && z.is_finite(), "ln_gamma needs z > 0, got {z}");
    if z < 0.5 {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return (std::f64::consts::PI / (std::f64::consts::PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    LN_SQRT_TWO_PI + (z + 0.5) * t.ln() - t + x.ln()
}

// Lower regularized incomplete gamma P(a, x) by series; valid for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut total = term;
    let mut ap = a;
    for _ in 0..1000 {
        ap += 1.0;
        term *= x / ap;
        total += term;
        if term.abs() < total.abs() * 1e-17 {
            break;
        }
    }
    total * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Upper regularized incomplete gamma Q(a, x) by modified-Lentz continued
// fraction; valid for x >= a + 1.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = if b.abs() >= TINY { 1.0 / b } else { 1.0 / TINY };
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
///
/// `Q(a, 0) = 1` and `Q(a, x) -> 0` as `x -> inf`; a chi-squared upper tail
/// with `k` degrees of freedom at value `t` is `Q(k/2, t/2)`.
pub fn igamc(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && a.is_finite(), "igamc needs a > 0, got {a}");
    assert!(x >= 0.0, "igamc needs x >= 0, got {x}");
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        // series regime: Q >= Q(a, a+1) > 0.27, so 1 - P is well-conditioned
        (1.0 - lower_series(a, x)).clamp(0.0, 1.0)
    } else {
        upper_continued_fraction(a, x).clamp(0.0, 1.0)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x == 0.0 {
        return 1.0;
    }
    igamc(0.5, x * x)
}

/// Standard normal CDF, used by the cumulative-sums p-value.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
