//! Finite-statistics certification: how many min-entropy bits does a
//! `k`-trial log certify, after paying for finite-sample fluctuations and
//! input randomness?
//!
//! The chain is: estimate the witness value L̂, pick the largest configured
//! threshold `L_m <= L̂`, subtract the concentration allowance
//! `epsilon(k, r, eps')` (an Azuma-Hoeffding bound on how far a weighted
//! estimator can stray in `k` trials), evaluate the adversary curve at
//! `L_m - epsilon`, and scale by `k` minus the `log2(1/delta)` confidence
//! tax. The result holds unless a probability-`<= delta` event occurred, up
//! to `eps'` of distribution distance, assuming fair sampling and a
//! classical adversary.
//!
//! Input accounting is reported two ways, because the two are genuinely
//! different quantities: `net_bits` subtracts the Shannon entropy of the
//! context-choice inputs, while `net_min_entropy_bits` subtracts their
//! min-entropy (worst-case) cost. An empirical coverage harness
//! ([`azuma_coverage_test`]) checks the concentration bound against
//! simulated devices with known witness expectations.

use crate::bounds::{BoundsError, EntropyCurve};
use crate::estimation::{self, EstimationError};
use crate::fileio::{self, IoFormatError};
use crate::rng;
use crate::sim::{
    no_disturbance_report, run_experiment, DeviceModel, InputDistribution, NoDisturbanceReport,
    SimError, TrialLog,
};
use crate::{FORMAT_VERSION, L_CLASSICAL, L_Q};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("model has no fixed per-trial witness expectation: {0}")]
    UnknownTruth(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Io(#[from] IoFormatError),
}

/// Concentration allowance `epsilon = (L_q + 1/r) * sqrt(-2 ln(eps') / k)`.
///
/// `r` is the smallest context weight of the input distribution; the witness
/// estimator divides by context weights, so its per-trial increments span an
/// interval of width `2 (L_q + 1/r)`, which is where `r` enters.
pub fn epsilon(k: u64, r: f64, eps_prime: f64) -> Result<f64, CertifyError> {
    validate_epsilon_inputs(k, r, eps_prime)?;
    Ok((L_Q + 1.0 / r) * (-2.0 * eps_prime.ln() / k as f64).sqrt())
}

/// The same allowance in its expanded printed form
/// `sqrt(-2 [1 + (4 sqrt(5) - 5) r]^2 ln(eps') / (k r^2))`; agrees with
/// [`epsilon`] to floating-point accuracy and exists so tests can pin the
/// identity.
pub fn epsilon_expanded(k: u64, r: f64, eps_prime: f64) -> Result<f64, CertifyError> {
    validate_epsilon_inputs(k, r, eps_prime)?;
    let scale = 1.0 + L_Q * r;
    Ok((-2.0 * scale * scale * eps_prime.ln() / (k as f64 * r * r)).sqrt())
}

fn validate_epsilon_inputs(k: u64, r: f64, eps_prime: f64) -> Result<(), CertifyError> {
    if k < 1 {
        return Err(CertifyError::BadParameter(
            "trial count k must be at least 1".into(),
        ));
    }
    if !(r > 0.0 && r <= 0.2) {
        return Err(CertifyError::BadParameter(format!(
            "context weight floor r must lie in (0, 0.2], got {r}"
        )));
    }
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(CertifyError::BadParameter(format!(
            "eps' must lie in (0, 1), got {eps_prime}"
        )));
    }
    Ok(())
}

/// Certification configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificationParams {
    /// Confidence floor: the bound holds unless an event of probability
    /// `<= delta` occurred.
    pub delta: f64,
    /// Distribution-distance slack fed to the concentration bound.
    pub eps_prime: f64,
    /// Violation thresholds, strictly increasing from 3 to the quantum
    /// maximum.
    pub thresholds: Vec<f64>,
}

/// The standard threshold ladder `{3.0, 3.1, ..., 3.9, 4 sqrt(5) - 5}`.
pub fn default_thresholds() -> Vec<f64> {
    let mut t: Vec<f64> = (0..10).map(|i| 3.0 + 0.1 * f64::from(i)).collect();
    t.push(L_Q);
    t
}

impl Default for CertificationParams {
    fn default() -> Self {
        CertificationParams {
            delta: 1e-3,
            eps_prime: 0.01,
            thresholds: default_thresholds(),
        }
    }
}

impl CertificationParams {
    pub fn validate(&self) -> Result<(), CertifyError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CertifyError::BadParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < 1.0) {
            return Err(CertifyError::BadParameter(format!(
                "eps' must lie in (0, 1), got {}",
                self.eps_prime
            )));
        }
        let t = &self.thresholds;
        if t.is_empty() {
            return Err(CertifyError::BadParameter("empty threshold list".into()));
        }
        for pair in t.windows(2) {
            // NaN must fail this check, so test the negation of "strictly greater"
            // rather than `pair[1] <= pair[0]`
            if pair[1].partial_cmp(&pair[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(CertifyError::BadParameter(format!(
                    "thresholds must be strictly increasing, saw {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if (t[0] - L_CLASSICAL).abs() > 1e-12 {
            return Err(CertifyError::BadParameter(format!(
                "first threshold must be the noncontextual bound 3, got {}",
                t[0]
            )));
        }
        if (t[t.len() - 1] - L_Q).abs() > 1e-9 {
            return Err(CertifyError::BadParameter(format!(
                "last threshold must be the quantum maximum 4*sqrt(5)-5, got {}",
                t[t.len() - 1]
            )));
        }
        Ok(())
    }
}

/// Condensed no-disturbance audit carried inside a report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NoDisturbanceAudit {
    /// Largest `|marginal difference|` across the five observables, when
    /// every needed context has data.
    pub max_discrepancy: Option<f64>,
    /// Observables whose marginal comparison is undefined (a host context
    /// was never sampled).
    pub undefined_observables: Vec<u8>,
}

impl From<&NoDisturbanceReport> for NoDisturbanceAudit {
    fn from(report: &NoDisturbanceReport) -> Self {
        NoDisturbanceAudit {
            max_discrepancy: report.max_discrepancy(),
            undefined_observables: report
                .entries
                .iter()
                .filter(|e| e.discrepancy.is_none())
                .map(|e| e.observable)
                .collect(),
        }
    }
}

/// Everything a certification run concluded, with inputs echoed for audit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificationReport {
    pub format_version: u32,
    /// Witness estimate the certification was based on.
    pub l_hat: f64,
    /// Standard error of the estimate, when the log had enough trials.
    pub stderr: Option<f64>,
    pub k: u64,
    /// Smallest context weight of the input distribution.
    pub r: f64,
    /// Index of the chosen threshold and its value.
    pub m: usize,
    pub l_m: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub eps_prime: f64,
    pub thresholds: Vec<f64>,
    /// Provenance label of the adversary curve used.
    pub curve: String,
    pub input_distribution: InputDistribution,
    /// Certified min-entropy of the outcome string, clamped at 0.
    pub entropy_bound_bits: f64,
    /// True when the clamped bound is strictly positive.
    pub certified: bool,
    /// Witness estimate implausibly above the quantum maximum.
    pub suspicious_estimate: bool,
    /// Shannon entropy of the consumed context inputs.
    pub input_entropy_bits: f64,
    /// `entropy_bound_bits - input_entropy_bits` (may be negative).
    pub net_bits: f64,
    /// Min-entropy of the consumed context inputs.
    pub input_min_entropy_bits: f64,
    /// `entropy_bound_bits - input_min_entropy_bits` (may be negative).
    pub net_min_entropy_bits: f64,
    pub accounting_note: String,
    pub assumptions: Vec<String>,
    pub no_disturbance: Option<NoDisturbanceAudit>,
    pub notes: Vec<String>,
}

/// Certified min-entropy of the outcome string given a witness estimate.
///
/// The threshold is the largest configured `L_m <= l_hat`; the bound is
/// `k * f(L_m - epsilon) - log2(1/delta)`, clamped at 0. When
/// `L_m - epsilon` does not exceed the noncontextual bound the report says
/// so explicitly instead of certifying silence. An estimate more than three
/// standard errors above the quantum maximum is flagged as suspicious but
/// still produces a (quantum-maximum-capped) bound.
pub fn min_entropy_bound(
    l_hat: f64,
    stderr: Option<f64>,
    k: u64,
    dist: &InputDistribution,
    params: &CertificationParams,
    curve: &EntropyCurve,
    audit: Option<NoDisturbanceAudit>,
) -> Result<CertificationReport, CertifyError> {
    params.validate()?;
    if !l_hat.is_finite() {
        return Err(CertifyError::BadParameter(format!(
            "witness estimate must be finite, got {l_hat}"
        )));
    }
    let r = dist.r();
    if r <= 0.0 {
        return Err(CertifyError::BadParameter(
            "input distribution must give every context positive weight".into(),
        ));
    }
    let eps = epsilon(k, r, params.eps_prime)?;
    let mut notes = Vec::new();

    let suspicious = l_hat > L_Q + 3.0 * stderr.unwrap_or(0.0).max(0.0);
    if suspicious {
        notes.push(
            "witness estimate exceeds the quantum maximum by more than three standard \
             errors; data are statistically implausible and the threshold is capped at \
             the quantum maximum"
                .to_string(),
        );
    }

    let m = match params.thresholds.iter().rposition(|t| *t <= l_hat) {
        Some(m) => m,
        None => {
            notes.push("witness estimate below every threshold; no certification".to_string());
            0
        }
    };
    let l_m = params.thresholds[m].min(L_Q);
    let arg = l_m - eps;
    let rate = curve.eval(arg)?;
    if arg <= L_CLASSICAL {
        notes.push(format!(
            "no certification at this k: threshold {l_m} minus allowance {eps:.6} \
             falls at or below the noncontextual bound 3"
        ));
    }
    let raw = k as f64 * rate - (1.0 / params.delta).log2();
    if raw < 0.0 && arg > L_CLASSICAL {
        notes.push("positive rate, but the confidence tax exceeds it; bound clamped to 0".into());
    }
    let entropy_bound_bits = raw.max(0.0);

    let input_entropy_bits = input_entropy(dist, k);
    let input_min_entropy_bits = input_min_entropy(dist, k);
    Ok(CertificationReport {
        format_version: FORMAT_VERSION,
        l_hat,
        stderr,
        k,
        r,
        m,
        l_m,
        epsilon: eps,
        delta: params.delta,
        eps_prime: params.eps_prime,
        thresholds: params.thresholds.clone(),
        curve: curve.provenance().label().to_string(),
        input_distribution: dist.clone(),
        entropy_bound_bits,
        certified: entropy_bound_bits > 0.0,
        suspicious_estimate: suspicious,
        input_entropy_bits,
        net_bits: net_randomness(entropy_bound_bits, input_entropy_bits),
        input_min_entropy_bits,
        net_min_entropy_bits: net_randomness(entropy_bound_bits, input_min_entropy_bits),
        accounting_note: "net_bits subtracts the Shannon entropy of the context inputs; \
                          net_min_entropy_bits subtracts their min-entropy (worst-case) \
                          cost; the two differ for biased inputs"
            .to_string(),
        assumptions: vec![
            "fair sampling: discarded no-click trials are independent of the outcomes".to_string(),
            "the adversary holds classical side information only".to_string(),
        ],
        no_disturbance: audit,
        notes,
    })
}

/// Full pipeline step: estimate from a log, audit no-disturbance, certify.
pub fn certify_log(
    log: &TrialLog,
    params: &CertificationParams,
    curve: &EntropyCurve,
) -> Result<CertificationReport, CertifyError> {
    let l_hat = estimation::violation_from_log(log)?;
    let stderr = estimation::stderr_estimate(log).ok();
    let audit = NoDisturbanceAudit::from(&no_disturbance_report(log));
    min_entropy_bound(
        l_hat,
        stderr,
        log.k(),
        &log.distribution,
        params,
        curve,
        Some(audit),
    )
}

/// Shannon entropy (bits) of the `k` context choices.
pub fn input_entropy(dist: &InputDistribution, k: u64) -> f64 {
    k as f64 * dist.shannon_entropy_per_trial()
}

/// Min-entropy (bits) of the `k` context choices.
pub fn input_min_entropy(dist: &InputDistribution, k: u64) -> f64 {
    k as f64 * dist.min_entropy_per_trial()
}

/// Output bits certified minus input bits consumed; negative means the run
/// consumed more randomness than it certified.
pub fn net_randomness(entropy_bound_bits: f64, input_entropy_bits: f64) -> f64 {
    entropy_bound_bits - input_entropy_bits
}

/// Empirical check of the concentration allowance: simulates `replicas`
/// independent `k`-trial experiments on a device with a known witness
/// expectation and returns the fraction whose estimate exceeded
/// `truth + epsilon(k, r, eps')`. The bound promises this fraction is at
/// most `eps'` (one-sided).
///
/// Replicas run concurrently, each on its own derived seed, and the
/// reduction is a deterministic count.
pub fn azuma_coverage_test(
    model: &DeviceModel,
    dist: &InputDistribution,
    k: u64,
    eps_prime: f64,
    replicas: u32,
    seed: u64,
) -> Result<f64, CertifyError> {
    if replicas == 0 {
        return Err(CertifyError::BadParameter(
            "at least one replica is required".into(),
        ));
    }
    let l_true = model.true_witness_value()?.ok_or_else(|| {
        CertifyError::UnknownTruth(
            "memoryful strategies have history-dependent expectations".into(),
        )
    })?;
    let eps = epsilon(k, dist.r(), eps_prime)?;
    let exceedances = (0..replicas)
        .into_par_iter()
        .map(|replica| -> Result<u32, CertifyError> {
            let replica_seed = rng::derive_seed(seed, "coverage-replica", u64::from(replica));
            let log = run_experiment(model.clone(), dist.clone(), k, replica_seed)?;
            let l_hat = estimation::violation_from_log(&log)?;
            Ok(u32::from(l_hat >= l_true + eps))
        })
        .collect::<Result<Vec<u32>, CertifyError>>()?
        .into_iter()
        .sum::<u32>();
    Ok(f64::from(exceedances) / f64::from(replicas))
}

/// Writes a report as pretty-printed JSON (atomically).
pub fn write_report(report: &CertificationReport, path: &Path) -> Result<(), CertifyError> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CertifyError::BadParameter(format!("report serialization: {e}")))?;
    fileio::atomic_write(path, json.as_bytes())?;
    Ok(())
}

/// Reads a report written by [`write_report`], checking the format version.
pub fn read_report(path: &Path) -> Result<CertificationReport, CertifyError> {
    let text = fileio::read_text(path)?;
    let report: CertificationReport = serde_json::from_str(&text)
        .map_err(|e| IoFormatError::parse(path, e.line(), e.to_string()))?;
    if report.format_version != FORMAT_VERSION {
        return Err(IoFormatError::Version {
            path: path.display().to_string(),
            found: report.format_version.to_string(),
            supported: FORMAT_VERSION,
        }
        .into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::ns_analytic_curve;
    use crate::sim::MemoryPolicy;
    use approx::assert_abs_diff_eq;
    use rand::Rng as _;
    use tempfile::tempdir;

    fn ns_curve() -> EntropyCurve {
        ns_analytic_curve(&crate::bounds::default_curve_grid()).unwrap()
    }

    #[test]
    fn epsilon_matches_frozen_references() {
        // mpmath, 40 significant digits
        assert_abs_diff_eq!(
            epsilon(100_000, 0.2, 0.01).unwrap(),
            0.0858386410515738896,
            epsilon = 1e-15
        );
        let r_biased = 6.0 / (100_000f64).sqrt();
        assert_abs_diff_eq!(
            epsilon(100_000, r_biased, 0.01).unwrap(),
            0.543662425058075194,
            epsilon = 1e-14
        );
    }

    #[test]
    fn epsilon_two_printed_forms_agree() {
        let mut stream = crate::rng::substream(5, "epsilon-forms", 0);
        for _ in 0..1000 {
            let k = stream.gen_range(1u64..10_000_000);
            let r = stream.gen_range(1e-4..0.2f64);
            let ep = stream.gen_range(1e-6..0.999f64);
            let a = epsilon(k, r, ep).unwrap();
            let b = epsilon_expanded(k, r, ep).unwrap();
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                "forms disagree at k={k}, r={r}, eps'={ep}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn epsilon_scales_inversely_with_sqrt_k() {
        let e1 = epsilon(50_000, 0.1, 0.05).unwrap();
        let e2 = epsilon(200_000, 0.1, 0.05).unwrap();
        assert_abs_diff_eq!(e1 / e2, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_rejects_domain_violations() {
        assert!(epsilon(0, 0.2, 0.01).is_err());
        assert!(epsilon(100, 0.0, 0.01).is_err());
        assert!(epsilon(100, 0.21, 0.01).is_err());
        assert!(epsilon(100, 0.2, 0.0).is_err());
        assert!(epsilon(100, 0.2, 1.0).is_err());
        assert!(epsilon(100, -0.1, 0.01).is_err());
    }

    #[test]
    fn uniform_worked_example_bound_is_reproduced() {
        // frozen: 1e5 * f_ns(3.9 - 0.08583864...) - log2(1000)
        let report = min_entropy_bound(
            3.924,
            Some(0.01),
            100_000,
            &InputDistribution::uniform(),
            &CertificationParams::default(),
            &ns_curve(),
            None,
        )
        .unwrap();
        assert_eq!(report.m, 9);
        assert_abs_diff_eq!(report.l_m, 3.9, epsilon = 1e-12);
        assert_abs_diff_eq!(report.epsilon, 0.0858386410515738896, epsilon = 1e-14);
        assert_abs_diff_eq!(
            report.entropy_bound_bits,
            32822.714423615002,
            epsilon = 1e-6
        );
        assert!(report.certified);
        assert!(!report.suspicious_estimate);
        // uniform inputs consume far more than they certify at this k
        assert_abs_diff_eq!(
            report.input_entropy_bits,
            232192.809488736235,
            epsilon = 1e-6
        );
        assert!(report.net_bits < 0.0);
        assert_abs_diff_eq!(
            report.net_bits,
            report.entropy_bound_bits - report.input_entropy_bits,
            epsilon = 1e-9
        );
    }

    #[test]
    fn biased_worked_example_bound_is_reproduced() {
        let dist = InputDistribution::biased(6.0, 100_000).unwrap();
        let report = min_entropy_bound(
            3.905,
            Some(0.01),
            100_000,
            &dist,
            &CertificationParams::default(),
            &ns_curve(),
            None,
        )
        .unwrap();
        // frozen: r = 6e-5/2, eps = 0.5436624..., f_ns(3.3563375749...)
        assert_abs_diff_eq!(report.r, 0.018973665961010276, epsilon = 1e-15);
        assert_abs_diff_eq!(report.epsilon, 0.543662425058075194, epsilon = 1e-13);
        assert_abs_diff_eq!(
            report.entropy_bound_bits,
            13451.103841080865,
            epsilon = 1e-5
        );
        // Shannon accounting nets negative here; min-entropy accounting nets
        // positive, and both invariants tie the fields together
        assert_abs_diff_eq!(
            report.input_entropy_bits,
            53933.5280329010209,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            report.input_min_entropy_bits,
            11387.0785141808166,
            epsilon = 1e-6
        );
        assert!(report.net_bits < 0.0);
        assert!(report.net_min_entropy_bits > 0.0);
        assert_abs_diff_eq!(
            report.net_min_entropy_bits,
            report.entropy_bound_bits - report.input_min_entropy_bits,
            epsilon = 1e-9
        );
    }

    #[test]
    fn threshold_rule_picks_the_largest_dominated_threshold() {
        let dist = InputDistribution::uniform();
        let params = CertificationParams::default();
        let curve = ns_curve();
        let at = |l_hat: f64| {
            min_entropy_bound(l_hat, None, 100_000, &dist, &params, &curve, None).unwrap()
        };
        assert_abs_diff_eq!(at(3.899_999).l_m, 3.8, epsilon = 1e-12);
        assert_abs_diff_eq!(at(3.9).l_m, 3.9, epsilon = 1e-12);
        assert_abs_diff_eq!(at(3.95).l_m, L_Q, epsilon = 1e-12);
    }

    #[test]
    fn no_violation_certifies_exactly_zero_bits() {
        let dist = InputDistribution::uniform();
        let params = CertificationParams::default();
        let curve = ns_curve();
        for l_hat in [3.0, 2.5, -1.0] {
            let report =
                min_entropy_bound(l_hat, None, 1_000_000, &dist, &params, &curve, None).unwrap();
            assert_eq!(report.entropy_bound_bits, 0.0);
            assert!(!report.certified);
            assert!(!report.notes.is_empty(), "zero bound must be explained");
        }
    }

    #[test]
    fn small_k_yields_an_explicit_no_certification_note() {
        // eps(500, 0.2, 0.01) ~ 1.21, so L_m - eps < 3 for every threshold
        let report = min_entropy_bound(
            3.9,
            None,
            500,
            &InputDistribution::uniform(),
            &CertificationParams::default(),
            &ns_curve(),
            None,
        )
        .unwrap();
        assert_eq!(report.entropy_bound_bits, 0.0);
        assert!(!report.certified);
        assert!(
            report
                .notes
                .iter()
                .any(|n| n.contains("no certification at this k")),
            "notes: {:?}",
            report.notes
        );
    }

    #[test]
    fn superquantum_estimates_are_flagged_but_still_bounded() {
        let report = min_entropy_bound(
            3.99,
            Some(0.005),
            100_000,
            &InputDistribution::uniform(),
            &CertificationParams::default(),
            &ns_curve(),
            None,
        )
        .unwrap();
        assert!(report.suspicious_estimate);
        assert_abs_diff_eq!(report.l_m, L_Q, epsilon = 1e-12);
        assert!(report.certified);
        // a plausible estimate just above L_q is not flagged
        let ok = min_entropy_bound(
            3.947,
            Some(0.01),
            100_000,
            &InputDistribution::uniform(),
            &CertificationParams::default(),
            &ns_curve(),
            None,
        )
        .unwrap();
        assert!(!ok.suspicious_estimate);
    }

    #[test]
    fn bound_is_monotone_in_the_estimate_and_in_k() {
        let dist = InputDistribution::uniform();
        let params = CertificationParams::default();
        let curve = ns_curve();
        let mut last = -1.0;
        for l_hat in [3.0, 3.2, 3.5, 3.7, 3.85, 3.91, 3.94] {
            let b = min_entropy_bound(l_hat, None, 100_000, &dist, &params, &curve, None)
                .unwrap()
                .entropy_bound_bits;
            assert!(b >= last, "bound decreased at l_hat = {l_hat}");
            last = b;
        }
        let mut last = -1.0;
        for k in [50_000u64, 100_000, 200_000, 400_000, 800_000] {
            let b = min_entropy_bound(3.93, None, k, &dist, &params, &curve, None)
                .unwrap()
                .entropy_bound_bits;
            assert!(b >= last, "bound decreased at k = {k}");
            last = b;
        }
    }

    #[test]
    fn input_entropy_closed_forms() {
        let uniform = InputDistribution::uniform();
        assert_abs_diff_eq!(
            input_entropy(&uniform, 100_000),
            232192.809488736235,
            epsilon = 1e-6
        );
        let point_mass = InputDistribution::custom([1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(input_entropy(&point_mass, 1_000), 0.0);
        assert_eq!(input_min_entropy(&point_mass, 1_000), 0.0);
        assert_eq!(net_randomness(5.0, 5.0), 0.0);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let dist = InputDistribution::uniform();
        let curve = ns_curve();
        let bad = CertificationParams {
            delta: 0.0,
            ..Default::default()
        };
        assert!(min_entropy_bound(3.9, None, 1000, &dist, &bad, &curve, None).is_err());
        let bad = CertificationParams {
            thresholds: vec![3.0, 3.5, 3.2, L_Q],
            ..Default::default()
        };
        assert!(min_entropy_bound(3.9, None, 1000, &dist, &bad, &curve, None).is_err());
        let bad = CertificationParams {
            thresholds: vec![3.1, 3.5, L_Q],
            ..Default::default()
        };
        assert!(min_entropy_bound(3.9, None, 1000, &dist, &bad, &curve, None).is_err());
        let bad = CertificationParams {
            thresholds: vec![3.0, 3.5, 3.9],
            ..Default::default()
        };
        assert!(min_entropy_bound(3.9, None, 1000, &dist, &bad, &curve, None).is_err());
        let zero_weight = InputDistribution::custom([0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(min_entropy_bound(
            3.9,
            None,
            1000,
            &zero_weight,
            &CertificationParams::default(),
            &curve,
            None
        )
        .is_err());
    }

    #[test]
    fn certify_log_attaches_estimate_and_audit() {
        let log = run_experiment(
            DeviceModel::ideal(),
            InputDistribution::uniform(),
            20_000,
            11,
        )
        .unwrap();
        let report = certify_log(&log, &CertificationParams::default(), &ns_curve()).unwrap();
        assert!(report.stderr.is_some());
        let audit = report.no_disturbance.as_ref().unwrap();
        assert!(audit.undefined_observables.is_empty());
        assert!(audit.max_discrepancy.unwrap() < 0.05);
        assert!((report.l_hat - L_Q).abs() < 0.12);
    }

    #[test]
    fn coverage_stays_within_the_promised_exceedance() {
        // eps(2000, 0.2, 0.05) ~ 0.49, an enormous margin for the ideal
        // device, so the observed exceedance should be far below 5%
        let rate = azuma_coverage_test(
            &DeviceModel::ideal(),
            &InputDistribution::uniform(),
            2_000,
            0.05,
            500,
            7,
        )
        .unwrap();
        assert!(rate <= 0.05, "exceedance {rate} breaks the guarantee");

        let nchv = DeviceModel::DeterministicNchv {
            strategy: [1, 0, 0, 1, 0],
            policy: MemoryPolicy::Memoryless,
        };
        let rate =
            azuma_coverage_test(&nchv, &InputDistribution::uniform(), 2_000, 0.05, 500, 7).unwrap();
        assert!(rate <= 0.05);
    }

    #[test]
    fn coverage_rejects_degenerate_requests() {
        let model = DeviceModel::ideal();
        let dist = InputDistribution::uniform();
        assert!(matches!(
            azuma_coverage_test(&model, &dist, 1000, 0.05, 0, 1),
            Err(CertifyError::BadParameter(_))
        ));
        let memoryful = DeviceModel::DeterministicNchv {
            strategy: [1, 0, 0, 1, 0],
            policy: MemoryPolicy::RotateOnRepeat,
        };
        assert!(matches!(
            azuma_coverage_test(&memoryful, &dist, 1000, 0.05, 10, 1),
            Err(CertifyError::UnknownTruth(_))
        ));
    }

    #[test]
    fn report_json_round_trips_with_version_check() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("report.json");
        let report = min_entropy_bound(
            3.924,
            Some(0.008),
            100_000,
            &InputDistribution::uniform(),
            &CertificationParams::default(),
            &ns_curve(),
            Some(NoDisturbanceAudit {
                max_discrepancy: Some(0.003),
                undefined_observables: vec![],
            }),
        )
        .unwrap();
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back.l_hat, report.l_hat);
        assert_eq!(back.entropy_bound_bits, report.entropy_bound_bits);
        assert_eq!(back.no_disturbance, report.no_disturbance);
        assert_eq!(back.curve, "ns_analytic");

        // wrong version must be rejected with a version error
        let mut tampered: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        tampered["format_version"] = serde_json::json!(99);
        std::fs::write(&path, serde_json::to_string(&tampered).unwrap()).unwrap();
        assert!(matches!(
            read_report(&path),
            Err(CertifyError::Io(IoFormatError::Version { .. }))
        ));
    }
}
