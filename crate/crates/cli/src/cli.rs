//! Argument parsing and the command dispatcher.
//!
//! Configuration can come from a JSON file (`--config`), from flags, or
//! both; flags override the file field by field. Sub-parameter flags such
//! as `--v` or `--alpha` modify the currently selected device or
//! distribution and are rejected when they do not apply to it.

use crate::commands::{
    cmd_certify, cmd_curve, cmd_extract_test, cmd_pipeline, cmd_simulate, render_test_table,
    CertifySource, DEFAULT_TEST_THETA,
};
use crate::config::{
    CurveSpec, DeviceSpec, DistSpec, PolicySpec, RunConfig, DEFAULT_NCHV_STRATEGY,
};
use crate::error::CliError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kcbs_core::certify::CertificationReport;
use std::path::PathBuf;

/// Simulator and certification toolkit for contextuality-based randomness
/// generation on a single qutrit.
#[derive(Debug, Parser)]
#[command(name = "kcbs", version, about, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured experiment and write the trial log
    /// (trials.csv + trials.csv.json).
    Simulate {
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Tabulate the certified-rate curves on the configured grid
    /// (curve.tsv).
    Curve {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Only the closed-form no-signaling column (skips the slow
        /// quantum reference optimization).
        #[arg(long)]
        ns_only: bool,
    },
    /// Compute the certified min-entropy bound and write report.json.
    Certify {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Trial log CSV to certify (its .json sidecar must sit next to it).
        #[arg(
            long,
            value_name = "CSV",
            conflicts_with = "from_probs",
            required_unless_present = "from_probs"
        )]
        log: Option<PathBuf>,
        /// Certify a per-context probability table instead of a trial log
        /// (k and the input distribution are then taken from the config).
        #[arg(long, value_name = "CSV")]
        from_probs: Option<PathBuf>,
    },
    /// Split a trial log into its detector streams, extract, and run the
    /// statistical battery (bit files + tests.json).
    ExtractTest {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Trial log CSV to test.
        #[arg(long, value_name = "CSV")]
        log: PathBuf,
        /// Battery significance threshold (pass means p >= theta).
        #[arg(long)]
        theta: Option<f64>,
    },
    /// simulate, certify, and extract-test in one run, ending with
    /// summary.json.
    Pipeline {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Validate the configuration and exit without running anything.
        #[arg(long)]
        dry_run: bool,
        /// Battery significance threshold (pass means p >= theta).
        #[arg(long)]
        theta: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DeviceKind {
    Ideal,
    Depolarized,
    Lossy,
    Nchv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolicyKind {
    Memoryless,
    RotateOnRepeat,
    FlipEqualPair,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DistKind {
    Uniform,
    Biased,
    Custom,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CurveKind {
    Ns,
    QuantumReference,
    File,
}

/// Every config field as an optional flag; set flags override the config
/// file (or the built-in defaults when no file is given).
#[derive(Clone, Debug, Args)]
pub struct ConfigFlags {
    /// JSON configuration file; explicit flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root seed for every random stream of the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trials.
    #[arg(long)]
    pub k: Option<u64>,
    /// Device model.
    #[arg(long, value_enum)]
    pub device: Option<DeviceKind>,
    /// Visibility of the depolarized device.
    #[arg(long)]
    pub v: Option<f64>,
    /// Detector efficiency of the lossy device.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Five-bit deterministic assignment for the nchv device, e.g. 10100.
    #[arg(long, value_name = "BITS")]
    pub strategy: Option<String>,
    /// Assignment-update policy of the nchv device.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// Input (context) distribution.
    #[arg(long, value_enum)]
    pub dist: Option<DistKind>,
    /// Bias strength of the biased distribution.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Five context weights for the custom distribution, comma separated.
    #[arg(long, value_name = "W1,..,W5", value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Certification confidence parameter.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Concentration-bound failure probability.
    #[arg(long)]
    pub eps_prime: Option<f64>,
    /// Violation thresholds, comma separated (replaces the standard grid).
    #[arg(long, value_name = "L1,..", value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Certified-rate curve used for certification.
    #[arg(long, value_enum)]
    pub curve: Option<CurveKind>,
    /// Curve TSV to read (selects or requires --curve file).
    #[arg(long, value_name = "TSV")]
    pub curve_file: Option<PathBuf>,
    /// Grid size for curve tabulation.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Random restarts per quantum-curve node.
    #[arg(long)]
    pub restarts: Option<u32>,
    /// Directory all artifacts are written into.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

fn device_name(spec: &DeviceSpec) -> &'static str {
    match spec {
        DeviceSpec::Ideal => "ideal",
        DeviceSpec::Depolarized { .. } => "depolarized",
        DeviceSpec::Lossy { .. } => "lossy",
        DeviceSpec::Nchv { .. } => "nchv",
    }
}

fn dist_name(spec: &DistSpec) -> &'static str {
    match spec {
        DistSpec::Uniform => "uniform",
        DistSpec::Biased { .. } => "biased",
        DistSpec::Custom { .. } => "custom",
    }
}

fn parse_strategy(text: &str) -> Result<[u8; 5], CliError> {
    let bits: Vec<u8> = text
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(CliError::Config(format!(
                "--strategy must be five characters of 0/1, got {other:?} in {text:?}"
            ))),
        })
        .collect::<Result<_, _>>()?;
    <[u8; 5]>::try_from(bits).map_err(|_| {
        CliError::Config(format!(
            "--strategy must be exactly five bits, got {} in {text:?}",
            text.chars().count()
        ))
    })
}

impl ConfigFlags {
    /// Merges file, defaults, and flags into one validated-shape config
    /// (full validation happens in the commands).
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };

        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(eps_prime) = self.eps_prime {
            cfg.eps_prime = eps_prime;
        }
        if let Some(thresholds) = self.thresholds {
            cfg.thresholds = Some(thresholds);
        }
        if let Some(grid) = self.grid {
            cfg.grid = grid;
        }
        if let Some(restarts) = self.restarts {
            cfg.restarts = restarts;
        }
        if let Some(out_dir) = self.out_dir {
            cfg.out_dir = out_dir;
        }

        if let Some(kind) = self.device {
            cfg.device = match kind {
                DeviceKind::Ideal => DeviceSpec::Ideal,
                DeviceKind::Depolarized => DeviceSpec::Depolarized { v: 1.0 },
                DeviceKind::Lossy => DeviceSpec::Lossy { eta: 1.0 },
                DeviceKind::Nchv => DeviceSpec::Nchv {
                    strategy: DEFAULT_NCHV_STRATEGY,
                    policy: PolicySpec::default(),
                },
            };
        }
        if let Some(v) = self.v {
            match &mut cfg.device {
                DeviceSpec::Depolarized { v: slot } => *slot = v,
                other => {
                    return Err(CliError::Config(format!(
                        "--v applies to the depolarized device, but the device is {}",
                        device_name(other)
                    )))
                }
            }
        }
        if let Some(eta) = self.eta {
            match &mut cfg.device {
                DeviceSpec::Lossy { eta: slot } => *slot = eta,
                other => {
                    return Err(CliError::Config(format!(
                        "--eta applies to the lossy device, but the device is {}",
                        device_name(other)
                    )))
                }
            }
        }
        if let Some(text) = &self.strategy {
            let bits = parse_strategy(text)?;
            match &mut cfg.device {
                DeviceSpec::Nchv { strategy, .. } => *strategy = bits,
                other => {
                    return Err(CliError::Config(format!(
                        "--strategy applies to the nchv device, but the device is {}",
                        device_name(other)
                    )))
                }
            }
        }
        if let Some(kind) = self.policy {
            let policy = match kind {
                PolicyKind::Memoryless => PolicySpec::Memoryless,
                PolicyKind::RotateOnRepeat => PolicySpec::RotateOnRepeat,
                PolicyKind::FlipEqualPair => PolicySpec::FlipEqualPair,
            };
            match &mut cfg.device {
                DeviceSpec::Nchv { policy: slot, .. } => *slot = policy,
                other => {
                    return Err(CliError::Config(format!(
                        "--policy applies to the nchv device, but the device is {}",
                        device_name(other)
                    )))
                }
            }
        }

        if let Some(kind) = self.dist {
            cfg.distribution = match kind {
                DistKind::Uniform => DistSpec::Uniform,
                DistKind::Biased => DistSpec::Biased { alpha: 1.0 },
                DistKind::Custom => DistSpec::Custom { weights: [0.2; 5] },
            };
        }
        if let Some(alpha) = self.alpha {
            match &mut cfg.distribution {
                DistSpec::Biased { alpha: slot } => *slot = alpha,
                other => {
                    return Err(CliError::Config(format!(
                        "--alpha applies to the biased distribution, but the distribution is {}",
                        dist_name(other)
                    )))
                }
            }
        }
        if let Some(weights) = self.weights {
            let weights: [f64; 5] = weights.clone().try_into().map_err(|_| {
                CliError::Config(format!(
                    "--weights needs exactly five values, got {}",
                    weights.len()
                ))
            })?;
            match &mut cfg.distribution {
                DistSpec::Custom { weights: slot } => *slot = weights,
                other => {
                    return Err(CliError::Config(format!(
                        "--weights applies to the custom distribution, but the distribution is {}",
                        dist_name(other)
                    )))
                }
            }
        }

        match (self.curve, self.curve_file) {
            (Some(CurveKind::Ns), None) => cfg.curve = CurveSpec::Ns,
            (Some(CurveKind::QuantumReference), None) => cfg.curve = CurveSpec::QuantumReference,
            (Some(CurveKind::File), Some(path)) | (None, Some(path)) => {
                cfg.curve = CurveSpec::File { path };
            }
            (Some(CurveKind::File), None) => {
                return Err(CliError::Config(
                    "--curve file needs --curve-file <TSV>".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "--curve-file is only meaningful with --curve file".into(),
                ))
            }
            (None, None) => {}
        }

        Ok(cfg)
    }
}

/// Runs one parsed invocation, printing results to stdout and warnings to
/// stderr. The binary maps the error to its exit code.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { flags } => {
            let cfg = flags.into_config()?;
            let out = cmd_simulate(&cfg)?;
            println!(
                "simulated k = {} trials (discarded {} no-click trials), L-hat = {:.6}",
                out.k, out.discarded, out.l_hat
            );
            println!("wrote {}", out.csv.display());
            println!("wrote {}", out.sidecar.display());
        }
        Command::Curve { flags, ns_only } => {
            let cfg = flags.into_config()?;
            let out = cmd_curve(&cfg, ns_only)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", out.tsv.display());
        }
        Command::Certify {
            flags,
            log,
            from_probs,
        } => {
            let cfg = flags.into_config()?;
            let source = match (&log, &from_probs) {
                (Some(path), None) => CertifySource::Log(path),
                (None, Some(path)) => CertifySource::Probs(path),
                _ => unreachable!("the parser enforces exactly one source"),
            };
            let out = cmd_certify(&cfg, source)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print_report(&out.report);
            println!("wrote {}", out.report_path.display());
        }
        Command::ExtractTest { flags, log, theta } => {
            let cfg = flags.into_config()?;
            let out = cmd_extract_test(&cfg, &log, theta.unwrap_or(DEFAULT_TEST_THETA))?;
            print!("{}", render_test_table(&out.document));
            println!("wrote {}", out.report_path.display());
        }
        Command::Pipeline {
            flags,
            dry_run,
            theta,
        } => {
            let cfg = flags.into_config()?;
            match cmd_pipeline(&cfg, theta.unwrap_or(DEFAULT_TEST_THETA), dry_run)? {
                None => println!("configuration valid; dry run, nothing executed"),
                Some(out) => {
                    for w in &out.certify.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!(
                        "simulated k = {} trials (discarded {} no-click trials)",
                        out.simulate.k, out.simulate.discarded
                    );
                    print_report(&out.certify.report);
                    print!("{}", render_test_table(&out.extract.document));
                    println!("wrote {}", out.summary_path.display());
                }
            }
        }
    }
    Ok(())
}

fn print_report(report: &CertificationReport) {
    match report.stderr {
        Some(se) => println!(
            "L-hat = {:.6} +/- {:.6} from k = {} trials",
            report.l_hat, se, report.k
        ),
        None => println!("L-hat = {:.6} from k = {} trials", report.l_hat, report.k),
    }
    println!(
        "threshold L_m = {:.4}, epsilon = {:.6}, curve: {}",
        report.l_m, report.epsilon, report.curve
    );
    println!(
        "certified min-entropy: {:.1} bits (delta = {:.1e}, eps' = {:.1e})",
        report.entropy_bound_bits, report.delta, report.eps_prime
    );
    println!(
        "input entropy consumed: {:.1} bits Shannon, {:.1} bits min-entropy",
        report.input_entropy_bits, report.input_min_entropy_bits
    );
    println!(
        "net output: {:.1} bits (Shannon accounting), {:.1} bits (min-entropy accounting)",
        report.net_bits, report.net_min_entropy_bits
    );
    if !report.accounting_note.is_empty() {
        println!("note: {}", report.accounting_note);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    if report.suspicious_estimate {
        println!("warning: the estimate is implausibly far above the quantum maximum");
    }
    if let Some(audit) = &report.no_disturbance {
        if let Some(d) = audit.max_discrepancy {
            println!("no-disturbance audit: max marginal discrepancy {d:.4}");
        }
        if !audit.undefined_observables.is_empty() {
            println!(
                "no-disturbance audit: no data for observables {:?}",
                audit.undefined_observables
            );
        }
    }
    println!(
        "verdict: {}",
        if report.certified {
            "certified"
        } else {
            "no certification at this configuration"
        }
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EXIT_CONFIG;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).expect("arguments must parse")
    }

    fn flags_of(cli: Cli) -> ConfigFlags {
        match cli.command {
            Command::Simulate { flags } => flags,
            Command::Curve { flags, .. } => flags,
            Command::Certify { flags, .. } => flags,
            Command::ExtractTest { flags, .. } => flags,
            Command::Pipeline { flags, .. } => flags,
        }
    }

    #[test]
    fn flags_override_defaults_field_by_field() {
        let cli = parse(&[
            "kcbs", "simulate", "--k", "500", "--seed", "7", "--device", "lossy", "--eta", "0.8",
            "--dist", "biased", "--alpha", "2.5",
        ]);
        let cfg = flags_of(cli).into_config().unwrap();
        assert_eq!(cfg.k, 500);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.device, DeviceSpec::Lossy { eta: 0.8 });
        assert_eq!(cfg.distribution, DistSpec::Biased { alpha: 2.5 });
        assert_eq!(cfg.delta, 1e-3, "untouched fields keep their defaults");
    }

    #[test]
    fn sub_parameter_flags_must_match_the_selected_kind() {
        let cli = parse(&["kcbs", "simulate", "--device", "lossy", "--v", "0.9"]);
        let err = flags_of(cli).into_config().unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(
            err.to_string().contains("--v"),
            "message names the flag: {err}"
        );

        let cli = parse(&["kcbs", "simulate", "--dist", "uniform", "--alpha", "2.0"]);
        assert_eq!(
            flags_of(cli).into_config().unwrap_err().exit_code(),
            EXIT_CONFIG
        );
    }

    #[test]
    fn strategy_strings_parse_to_five_bits() {
        let cli = parse(&[
            "kcbs",
            "simulate",
            "--device",
            "nchv",
            "--strategy",
            "01011",
        ]);
        let cfg = flags_of(cli).into_config().unwrap();
        assert_eq!(
            cfg.device,
            DeviceSpec::Nchv {
                strategy: [0, 1, 0, 1, 1],
                policy: PolicySpec::Memoryless,
            }
        );
        for bad in ["0101", "010112", "01a01"] {
            let cli = parse(&["kcbs", "simulate", "--device", "nchv", "--strategy", bad]);
            assert!(
                flags_of(cli).into_config().is_err(),
                "{bad:?} must be rejected"
            );
        }
    }

    #[test]
    fn curve_file_flag_selects_the_file_curve() {
        let cli = parse(&["kcbs", "certify", "--log", "t.csv", "--curve-file", "c.tsv"]);
        let cfg = flags_of(cli).into_config().unwrap();
        assert_eq!(
            cfg.curve,
            CurveSpec::File {
                path: PathBuf::from("c.tsv")
            }
        );

        let cli = parse(&["kcbs", "certify", "--log", "t.csv", "--curve", "file"]);
        assert!(
            flags_of(cli).into_config().is_err(),
            "file curve needs a path"
        );

        let cli = parse(&[
            "kcbs",
            "certify",
            "--log",
            "t.csv",
            "--curve",
            "ns",
            "--curve-file",
            "c.tsv",
        ]);
        assert!(
            flags_of(cli).into_config().is_err(),
            "path plus ns curve conflicts"
        );
    }

    #[test]
    fn certify_needs_exactly_one_source() {
        assert!(Cli::try_parse_from(["kcbs", "certify"]).is_err());
        assert!(Cli::try_parse_from([
            "kcbs",
            "certify",
            "--log",
            "a.csv",
            "--from-probs",
            "b.csv"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["kcbs", "certify", "--from-probs", "b.csv"]).is_ok());
    }

    #[test]
    fn weights_and_thresholds_split_on_commas() {
        let cli = parse(&[
            "kcbs",
            "simulate",
            "--dist",
            "custom",
            "--weights",
            "0.3,0.2,0.2,0.2,0.1",
            "--thresholds",
            "3.0,3.5,3.9",
        ]);
        let cfg = flags_of(cli).into_config().unwrap();
        assert_eq!(
            cfg.distribution,
            DistSpec::Custom {
                weights: [0.3, 0.2, 0.2, 0.2, 0.1]
            }
        );
        assert_eq!(cfg.thresholds, Some(vec![3.0, 3.5, 3.9]));
    }

    #[test]
    fn subcommand_names_are_kebab_case() {
        assert!(Cli::try_parse_from(["kcbs", "extract-test", "--log", "t.csv"]).is_ok());
        assert!(Cli::try_parse_from(["kcbs", "pipeline", "--dry-run"]).is_ok());
    }
}
