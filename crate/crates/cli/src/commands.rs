//! The five commands, as library functions.
//!
//! Each command is a pure function of a [`RunConfig`] plus its input files:
//! it validates, computes, writes its artifacts atomically under
//! `config.out_dir`, and returns a typed outcome. Presentation (stdout
//! rendering, warning routing) lives in the binary layer, so tests drive
//! the commands directly and assert on files and outcomes.

use crate::config::{CurveSpec, RunConfig};
use crate::error::CliError;
use kcbs_core::bounds::{self, EntropyCurve};
use kcbs_core::certify::{self, CertificationReport, NoDisturbanceAudit};
use kcbs_core::estimation::{self, violation_from_log, violation_from_probs};
use kcbs_core::randtests::{
    battery, streams_from_log, von_neumann_extract, write_bits_ascii, TestReport, TestResult,
    DEFAULT_THETA,
};
use kcbs_core::sim::{self, read_trial_log, run_experiment, write_trial_log};
use kcbs_core::{fileio, FORMAT_VERSION};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub k: u64,
    pub discarded: u64,
    /// Witness estimate of the freshly simulated log.
    pub l_hat: f64,
}

/// Runs the configured experiment and writes `trials.csv` + `trials.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutcome, CliError> {
    cfg.validate()?;
    let model = cfg.build_device()?;
    let dist = cfg.build_distribution()?;
    let log = run_experiment(model, dist, cfg.k, cfg.seed)?;
    let csv = cfg.out_path("trials.csv")?;
    let sidecar = sim::sidecar_path(&csv);
    write_trial_log(&log, &csv, &sidecar)?;
    let l_hat = violation_from_log(&log)?;
    Ok(SimulateOutcome {
        csv,
        sidecar,
        k: log.k(),
        discarded: log.discarded_count,
        l_hat,
    })
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CurveOutcome {
    pub tsv: PathBuf,
    /// One line per curve node the optimizer failed to converge on.
    pub warnings: Vec<String>,
}

/// Tabulates the no-signaling rate (and, unless `ns_only`, the quantum
/// reference rate) on the configured grid and writes `curve.tsv`.
pub fn cmd_curve(cfg: &RunConfig, ns_only: bool) -> Result<CurveOutcome, CliError> {
    cfg.validate()?;
    let grid = cfg.curve_grid()?;
    let ns = bounds::ns_analytic_curve(&grid)?;
    let mut warnings = Vec::new();
    let quantum = if ns_only {
        None
    } else {
        let quantum_cfg = RunConfig {
            curve: CurveSpec::QuantumReference,
            ..cfg.clone()
        };
        Some(quantum_cfg.build_curve(&mut warnings)?)
    };
    let tsv = cfg.out_path("curve.tsv")?;
    bounds::write_curve_tsv(&tsv, &grid, &ns, quantum.as_ref())?;
    Ok(CurveOutcome { tsv, warnings })
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

/// Where the witness estimate comes from.
#[derive(Clone, Copy, Debug)]
pub enum CertifySource<'a> {
    /// A trial log CSV (sidecar derived by extension).
    Log(&'a Path),
    /// A per-context probability table CSV.
    Probs(&'a Path),
}

#[derive(Clone, Debug)]
pub struct CertifyOutcome {
    pub report_path: PathBuf,
    pub report: CertificationReport,
    pub warnings: Vec<String>,
}

/// Estimates the violation from the source, applies the certification
/// chain with the configured curve, and writes `report.json`.
pub fn cmd_certify(cfg: &RunConfig, source: CertifySource<'_>) -> Result<CertifyOutcome, CliError> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let curve = cfg.build_curve(&mut warnings)?;
    certify_with_curve(cfg, source, &curve, warnings)
}

/// Certification with an already materialized curve (the pipeline builds
/// the curve once and shares it).
fn certify_with_curve(
    cfg: &RunConfig,
    source: CertifySource<'_>,
    curve: &EntropyCurve,
    warnings: Vec<String>,
) -> Result<CertifyOutcome, CliError> {
    let params = cfg.certification_params()?;
    let report = match source {
        CertifySource::Log(csv) => {
            let log = read_trial_log(csv, &sim::sidecar_path(csv))?;
            certify::certify_log(&log, &params, curve)?
        }
        CertifySource::Probs(path) => {
            let table = estimation::read_prob_table(path)?;
            let l_hat = violation_from_probs(&table)?;
            let dist = cfg.build_distribution()?;
            // the table has no trial-resolved data, so the only
            // no-disturbance evidence is the marginal mismatch across rows
            let audit = NoDisturbanceAudit {
                max_discrepancy: Some(table.max_row_deviation()),
                undefined_observables: Vec::new(),
            };
            certify::min_entropy_bound(l_hat, None, cfg.k, &dist, &params, curve, Some(audit))?
        }
    };
    let report_path = cfg.out_path("report.json")?;
    certify::write_report(&report, &report_path)?;
    Ok(CertifyOutcome {
        report_path,
        report,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// extract-test
// ---------------------------------------------------------------------------

/// `tests.json`: the battery verdicts for the three strings of one log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestsDocument {
    pub format_version: u32,
    pub theta: f64,
    /// The trial log the strings were built from.
    pub source: String,
    /// Display name of each string, aligned with `reports`.
    pub labels: Vec<String>,
    /// Reports for extracted S1, extracted S2, and the raw interleaved
    /// stream, in that order.
    pub reports: Vec<TestReport>,
}

#[derive(Clone, Debug)]
pub struct ExtractTestOutcome {
    pub bit_files: Vec<PathBuf>,
    pub report_path: PathBuf,
    pub document: TestsDocument,
}

/// Splits a log into its detector streams, extracts, runs the battery, and
/// writes the bit files plus `tests.json`.
pub fn cmd_extract_test(
    cfg: &RunConfig,
    log_path: &Path,
    theta: f64,
) -> Result<ExtractTestOutcome, CliError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(CliError::Config(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    let log = read_trial_log(log_path, &sim::sidecar_path(log_path))?;
    let streams = streams_from_log(&log);
    let s1x = von_neumann_extract(&streams.s1);
    let s2x = von_neumann_extract(&streams.s2);

    let files = [
        ("s1_extracted.txt", &s1x),
        ("s2_extracted.txt", &s2x),
        ("st_raw.txt", &streams.interleaved),
    ];
    let mut bit_files = Vec::with_capacity(files.len());
    for (name, bits) in files {
        let path = cfg.out_path(name)?;
        write_bits_ascii(&path, bits)?;
        bit_files.push(path);
    }

    let document = TestsDocument {
        format_version: FORMAT_VERSION,
        theta,
        source: log_path.display().to_string(),
        labels: ["S1 extracted", "S2 extracted", "St raw"]
            .map(String::from)
            .to_vec(),
        reports: vec![
            battery(&s1x, theta),
            battery(&s2x, theta),
            battery(&streams.interleaved, theta),
        ],
    };
    let report_path = cfg.out_path("tests.json")?;
    let json = serde_json::to_string_pretty(&document).expect("document serializes");
    fileio::atomic_write(&report_path, json.as_bytes())?;
    Ok(ExtractTestOutcome {
        bit_files,
        report_path,
        document,
    })
}

/// Renders the battery verdicts as a fixed-width table: one row per test,
/// one column per string.
pub fn render_test_table(doc: &TestsDocument) -> String {
    let mut out = String::new();
    let name_width = doc
        .reports
        .iter()
        .flat_map(|r| r.entries.iter())
        .map(|e| e.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    out.push_str(&format!("{:<name_width$}", "test"));
    for label in &doc.labels {
        out.push_str(&format!("  {label:>12}"));
    }
    out.push('\n');
    let rows = doc.reports.first().map(|r| r.entries.len()).unwrap_or(0);
    for row in 0..rows {
        out.push_str(&format!(
            "{:<name_width$}",
            doc.reports[0].entries[row].name
        ));
        for report in &doc.reports {
            let cell = match &report.entries[row].result {
                TestResult::Computed { p_value, .. } => format!("{p_value:.4}"),
                TestResult::InsufficientData { .. } => "n/a".to_string(),
            };
            out.push_str(&format!("  {cell:>12}"));
        }
        out.push('\n');
    }
    for (label, report) in doc.labels.iter().zip(&doc.reports) {
        let verdict = if report.all_pass {
            "passes every test".to_string()
        } else if report.failures.is_empty() {
            format!("insufficient data for {}", report.insufficient.join(", "))
        } else {
            format!("fails {}", report.failures.join(", "))
        };
        out.push_str(&format!("{label}: {verdict}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

/// `summary.json`: the full configuration plus every stage's headline
/// numbers, so a run is auditable from one file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub format_version: u32,
    pub config: RunConfig,
    pub l_hat: f64,
    pub entropy_bound_bits: f64,
    pub certified: bool,
    pub net_bits: f64,
    pub net_min_entropy_bits: f64,
    pub battery: Vec<BatterySummary>,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatterySummary {
    pub origin: String,
    pub all_pass: bool,
    pub failures: Vec<String>,
    pub insufficient: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub simulate: SimulateOutcome,
    pub curve_tsv: Option<PathBuf>,
    pub certify: CertifyOutcome,
    pub extract: ExtractTestOutcome,
    pub summary_path: PathBuf,
    pub summary: PipelineSummary,
}

/// simulate -> certify -> extract/test, sharing one curve; writes
/// `summary.json` last. With `dry_run` only validation runs and `None` is
/// returned.
pub fn cmd_pipeline(
    cfg: &RunConfig,
    theta: f64,
    dry_run: bool,
) -> Result<Option<PipelineOutcome>, CliError> {
    cfg.validate()?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(CliError::Config(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    if dry_run {
        return Ok(None);
    }

    let simulate = cmd_simulate(cfg)?;

    let mut warnings = Vec::new();
    let curve = cfg.build_curve(&mut warnings)?;
    // tabulate the curve artifact unless it was read from a file anyway
    let curve_tsv = match &cfg.curve {
        CurveSpec::File { .. } => None,
        CurveSpec::Ns => {
            let grid = cfg.curve_grid()?;
            let tsv = cfg.out_path("curve.tsv")?;
            bounds::write_curve_tsv(&tsv, &grid, &curve, None)?;
            Some(tsv)
        }
        CurveSpec::QuantumReference => {
            let grid = cfg.curve_grid()?;
            let ns = bounds::ns_analytic_curve(&grid)?;
            let tsv = cfg.out_path("curve.tsv")?;
            bounds::write_curve_tsv(&tsv, &grid, &ns, Some(&curve))?;
            Some(tsv)
        }
    };

    // certify from the file just written, so the report reflects exactly
    // what a later reader of the artifacts would recompute
    let certify = certify_with_curve(cfg, CertifySource::Log(&simulate.csv), &curve, warnings)?;
    let extract = cmd_extract_test(cfg, &simulate.csv, theta)?;

    let mut artifacts: Vec<String> = vec![
        simulate.csv.display().to_string(),
        simulate.sidecar.display().to_string(),
    ];
    if let Some(tsv) = &curve_tsv {
        artifacts.push(tsv.display().to_string());
    }
    artifacts.push(certify.report_path.display().to_string());
    artifacts.extend(extract.bit_files.iter().map(|p| p.display().to_string()));
    artifacts.push(extract.report_path.display().to_string());

    let summary = PipelineSummary {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        l_hat: certify.report.l_hat,
        entropy_bound_bits: certify.report.entropy_bound_bits,
        certified: certify.report.certified,
        net_bits: certify.report.net_bits,
        net_min_entropy_bits: certify.report.net_min_entropy_bits,
        battery: extract
            .document
            .reports
            .iter()
            .map(|r| BatterySummary {
                origin: r.origin.clone(),
                all_pass: r.all_pass,
                failures: r.failures.clone(),
                insufficient: r.insufficient.clone(),
            })
            .collect(),
        artifacts,
    };
    let summary_path = cfg.out_path("summary.json")?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fileio::atomic_write(&summary_path, json.as_bytes())?;

    Ok(Some(PipelineOutcome {
        simulate,
        curve_tsv,
        certify,
        extract,
        summary_path,
        summary,
    }))
}

/// Default battery threshold, re-exported for the binary layer.
pub const DEFAULT_TEST_THETA: f64 = DEFAULT_THETA;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DeviceSpec;
    use kcbs_core::randtests::{BitString, StreamOrigin};

    fn tmp_config(dir: &Path) -> RunConfig {
        RunConfig {
            k: 4_000,
            out_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn simulate_writes_both_log_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_simulate(&tmp_config(dir.path())).unwrap();
        assert!(out.csv.exists(), "trial CSV must exist");
        assert!(out.sidecar.exists(), "sidecar must exist");
        assert_eq!(out.k, 4_000);
        assert!(
            out.l_hat > 3.0,
            "ideal device must violate, got {}",
            out.l_hat
        );
    }

    #[test]
    fn certify_runs_on_a_fresh_log_with_the_ns_curve() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tmp_config(dir.path());
        let sim = cmd_simulate(&cfg).unwrap();
        let out = cmd_certify(&cfg, CertifySource::Log(&sim.csv)).unwrap();
        assert!(out.report_path.exists());
        assert_eq!(out.report.k, 4_000);
        assert!(
            (out.report.l_hat - sim.l_hat).abs() < 1e-12,
            "round-trip estimate"
        );
    }

    #[test]
    fn extract_test_writes_three_bit_files_and_a_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tmp_config(dir.path());
        let sim = cmd_simulate(&cfg).unwrap();
        let out = cmd_extract_test(&cfg, &sim.csv, DEFAULT_TEST_THETA).unwrap();
        assert_eq!(out.bit_files.len(), 3);
        for f in &out.bit_files {
            assert!(f.exists(), "{} must exist", f.display());
        }
        let origins: Vec<&str> = out
            .document
            .reports
            .iter()
            .map(|r| r.origin.as_str())
            .collect();
        assert_eq!(origins, vec!["extracted", "extracted", "St"]);
    }

    #[test]
    fn pipeline_dry_run_does_no_work() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tmp_config(dir.path());
        let out = cmd_pipeline(&cfg, DEFAULT_TEST_THETA, true).unwrap();
        assert!(out.is_none());
        assert!(
            std::fs::read_dir(dir.path()).unwrap().next().is_none(),
            "dry run must not create artifacts"
        );
    }

    #[test]
    fn pipeline_aborts_with_the_first_stage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            device: DeviceSpec::Depolarized { v: 2.0 },
            ..tmp_config(dir.path())
        };
        let err = cmd_pipeline(&cfg, DEFAULT_TEST_THETA, false).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn test_table_renders_one_row_per_test() {
        let bits = BitString::new(vec![0, 1, 0, 1, 1, 0], StreamOrigin::Extracted).unwrap();
        let doc = TestsDocument {
            format_version: FORMAT_VERSION,
            theta: 0.001,
            source: "log.csv".into(),
            labels: vec!["extracted".into()],
            reports: vec![battery(&bits, 0.001)],
        };
        let table = render_test_table(&doc);
        for name in kcbs_core::randtests::BATTERY_TESTS {
            assert!(table.contains(name), "table must list {name}");
        }
        assert!(table.contains("n/a"), "short strings render as n/a");
    }
}
