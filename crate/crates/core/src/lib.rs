//! Simulator and certification toolkit for contextuality-based randomness
//! generation on a single qutrit.
//!
//! The library models the five-observable KCBS pentagon experiment end to
//! end:
//!
//! * [`qutrit`] — exact pentagon geometry (states, projectors, contexts,
//!   joint outcome distributions, the KCBS witness value).
//! * [`sim`] — seeded trial-by-trial device simulation (ideal, depolarized,
//!   lossy, and deterministic noncontextual hidden-variable models) with
//!   input-distribution handling and no-disturbance audits.
//! * [`estimation`] — the inverse-probability-weighted violation estimator,
//!   counts/probability tables, streaming estimates, and standard errors.
//! * [`bounds`] — certified randomness-rate curves: the analytic
//!   no-signalling bound, an in-repo dense-simplex LP cross-check, and a
//!   multi-start quantum (dimension-3) reference curve.
//! * [`certify`] — finite-statistics certification: the concentration
//!   half-width, threshold selection, min-entropy bounds, input-entropy
//!   accounting, and coverage experiments.
//! * [`randtests`] — von Neumann extraction and a NIST-SP-800-22-style
//!   statistical battery with in-repo special functions.
//! * [`rng`] — the single-seed policy and deterministic sub-stream
//!   derivation used everywhere randomness is consumed.
//!
//! All file formats (trial logs, probability tables, curve tables, bit
//! streams, reports) are versioned and round-trip exactly; see [`fileio`].

pub mod bounds;
pub mod certify;
pub mod estimation;
pub mod fileio;
pub mod qutrit;
pub mod randtests;
pub mod rng;
pub mod sim;

/// Maximal quantum value of the KCBS witness, `4*sqrt(5) - 5`.
///
/// This literal is the nearest `f64` to the exact algebraic value; tests
/// check it against `4.0 * 5f64.sqrt() - 5.0`.
pub const L_Q: f64 = 3.9442719099991588;

/// Noncontextual (classical) ceiling of the KCBS witness.
pub const L_CLASSICAL: f64 = 3.0;

/// Current on-disk format version shared by every reader/writer.
pub const FORMAT_VERSION: u32 = 1;
