//! Run configuration: JSON schema, flag overrides, and validation.
//!
//! A run is fully described by one [`RunConfig`]: every command is a pure
//! function of it (plus its input files), and all randomness derives from
//! the single `seed`. The config can be given as a JSON file, as command
//! line flags, or both — flags win field by field.

use crate::error::CliError;
use kcbs_core::bounds::quantum::QuantumCurveOptions;
use kcbs_core::bounds::{self, EntropyCurve};
use kcbs_core::certify::CertificationParams;
use kcbs_core::sim::{DeviceModel, InputDistribution, MemoryPolicy};
use kcbs_core::{fileio, rng};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Named device models reachable from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DeviceSpec {
    /// Pentagon directions measured on the reference state.
    Ideal,
    /// Ideal geometry with isotropic noise at visibility `v`.
    Depolarized { v: f64 },
    /// Ideal geometry with detector efficiency `eta` and post-selection.
    Lossy { eta: f64 },
    /// Deterministic value assignment with an update policy.
    Nchv {
        strategy: [u8; 5],
        #[serde(default)]
        policy: PolicySpec,
    },
}

/// Serializable twin of the simulator's assignment-update policies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    #[default]
    Memoryless,
    RotateOnRepeat,
    FlipEqualPair,
}

impl From<PolicySpec> for MemoryPolicy {
    fn from(p: PolicySpec) -> Self {
        match p {
            PolicySpec::Memoryless => MemoryPolicy::Memoryless,
            PolicySpec::RotateOnRepeat => MemoryPolicy::RotateOnRepeat,
            PolicySpec::FlipEqualPair => MemoryPolicy::FlipEqualPair,
        }
    }
}

/// A classically optimal assignment: four of the five pentagon contexts
/// anti-correlated, witness value exactly 3.
pub const DEFAULT_NCHV_STRATEGY: [u8; 5] = [1, 0, 1, 0, 0];

/// How the context of each trial is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistSpec {
    Uniform,
    /// Weight `alpha/sqrt(k)` on four contexts, the rest on `(A1, A2)`.
    Biased {
        alpha: f64,
    },
    Custom {
        weights: [f64; 5],
    },
}

/// Which certified-rate curve to use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "snake_case")]
pub enum CurveSpec {
    /// Closed-form no-signaling curve (instant).
    Ns,
    /// Numerically optimized quantum reference curve (slow, seeded).
    QuantumReference,
    /// A previously tabulated curve file.
    File { path: PathBuf },
}

/// Complete description of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub format_version: u32,
    /// Root seed; every random stream in the toolkit derives from it.
    pub seed: u64,
    /// Number of trials.
    pub k: u64,
    pub device: DeviceSpec,
    pub distribution: DistSpec,
    /// Certification confidence parameter (log2(1/delta) bits are paid).
    pub delta: f64,
    /// Concentration-bound failure probability.
    pub eps_prime: f64,
    /// Violation threshold grid; `None` means the standard grid.
    pub thresholds: Option<Vec<f64>>,
    pub curve: CurveSpec,
    /// Grid size for curve tabulation.
    pub grid: usize,
    /// Random restarts per quantum-curve node.
    pub restarts: u32,
    /// Directory all artifacts are written into.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: kcbs_core::FORMAT_VERSION,
            seed: rng::DEFAULT_SEED,
            k: 100_000,
            device: DeviceSpec::Ideal,
            distribution: DistSpec::Uniform,
            delta: 1e-3,
            eps_prime: 0.01,
            thresholds: None,
            curve: CurveSpec::Ns,
            grid: 20,
            restarts: 100,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Loads a config file, failing with the validation exit code on
    /// unknown shapes and the parse exit code on unreadable files.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fileio::read_text(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.format_version != kcbs_core::FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "{}: unsupported format_version {} (this build reads {})",
                path.display(),
                cfg.format_version,
                kcbs_core::FORMAT_VERSION
            )));
        }
        Ok(cfg)
    }

    /// Checks every module's preconditions without doing any work or I/O.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(CliError::Config("trial count k must be at least 1".into()));
        }
        self.build_device()?;
        self.build_distribution()?;
        self.certification_params()?
            .validate()
            .map_err(CliError::from)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        bounds::curve_grid(self.grid).map_err(CliError::from)?;
        if self.restarts < 1 {
            return Err(CliError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn build_device(&self) -> Result<DeviceModel, CliError> {
        let model = match &self.device {
            DeviceSpec::Ideal => DeviceModel::ideal(),
            DeviceSpec::Depolarized { v } => {
                if !(0.0..=1.0).contains(v) {
                    return Err(CliError::Config(format!(
                        "visibility v must lie in [0, 1], got {v}"
                    )));
                }
                DeviceModel::Depolarized { v: *v }
            }
            DeviceSpec::Lossy { eta } => {
                if !(*eta > 0.0 && *eta <= 1.0) {
                    return Err(CliError::Config(format!(
                        "efficiency eta must lie in (0, 1], got {eta}"
                    )));
                }
                DeviceModel::LossyQuantum { eta: *eta }
            }
            DeviceSpec::Nchv { strategy, policy } => {
                if strategy.iter().any(|b| *b > 1) {
                    return Err(CliError::Config(format!(
                        "assignment must be five bits, got {strategy:?}"
                    )));
                }
                DeviceModel::DeterministicNchv {
                    strategy: *strategy,
                    policy: (*policy).into(),
                }
            }
        };
        Ok(model)
    }

    pub fn build_distribution(&self) -> Result<InputDistribution, CliError> {
        let dist = match &self.distribution {
            DistSpec::Uniform => InputDistribution::uniform(),
            DistSpec::Biased { alpha } => InputDistribution::biased(*alpha, self.k)?,
            DistSpec::Custom { weights } => InputDistribution::custom(*weights)?,
        };
        Ok(dist)
    }

    pub fn certification_params(&self) -> Result<CertificationParams, CliError> {
        let params = CertificationParams {
            delta: self.delta,
            eps_prime: self.eps_prime,
            thresholds: self
                .thresholds
                .clone()
                .unwrap_or_else(kcbs_core::certify::default_thresholds),
        };
        params.validate()?;
        Ok(params)
    }

    /// The witness grid used for curve tabulation.
    pub fn curve_grid(&self) -> Result<Vec<f64>, CliError> {
        bounds::curve_grid(self.grid).map_err(CliError::from)
    }

    /// Materializes the configured certified-rate curve. The quantum
    /// reference choice runs the seeded multi-start search and is by far
    /// the slowest path; `warnings` receives one line per unconverged node.
    pub fn build_curve(&self, warnings: &mut Vec<String>) -> Result<EntropyCurve, CliError> {
        match &self.curve {
            CurveSpec::Ns => {
                let grid = self.curve_grid()?;
                Ok(bounds::ns_analytic_curve(&grid)?)
            }
            CurveSpec::QuantumReference => {
                let grid = self.curve_grid()?;
                let opts = QuantumCurveOptions {
                    restarts: self.restarts,
                    seed: self.seed,
                    ..QuantumCurveOptions::default()
                };
                let result = bounds::quantum::quantum_curve(&grid, &opts)?;
                for node in &result.nodes {
                    if !node.converged {
                        warnings.push(format!(
                            "curve node L = {:.6} did not converge (best residual {:.2e})",
                            node.l_target, node.residual
                        ));
                    }
                }
                Ok(result.curve)
            }
            CurveSpec::File { path } => {
                let file = bounds::read_curve_tsv(path)?;
                Ok(file.into_curve()?)
            }
        }
    }

    /// `out_dir/name`, creating the directory on first use.
    pub fn out_path(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| {
            CliError::Parse(format!(
                "cannot create output directory {}: {e}",
                self.out_dir.display()
            ))
        })?;
        Ok(self.out_dir.join(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        RunConfig::default()
            .validate()
            .expect("defaults must be valid");
    }

    #[test]
    fn zero_trials_is_rejected() {
        let cfg = RunConfig {
            k: 0,
            ..RunConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn device_parameter_ranges_are_enforced() {
        for device in [
            DeviceSpec::Depolarized { v: 1.5 },
            DeviceSpec::Lossy { eta: 0.0 },
            DeviceSpec::Nchv {
                strategy: [2, 0, 0, 0, 0],
                policy: PolicySpec::Memoryless,
            },
        ] {
            let cfg = RunConfig {
                device,
                ..RunConfig::default()
            };
            assert!(cfg.validate().is_err(), "{:?} must be rejected", cfg.device);
        }
    }

    #[test]
    fn biased_distribution_validation_uses_the_configured_k() {
        let cfg = RunConfig {
            k: 100,
            distribution: DistSpec::Biased { alpha: 6.0 },
            ..RunConfig::default()
        };
        // k = 100 <= (4*6)^2 = 576: the biased family does not exist
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            k: 100_000,
            distribution: DistSpec::Biased { alpha: 6.0 },
            ..RunConfig::default()
        };
        cfg.validate().expect("k = 10^5 supports alpha = 6");
    }

    #[test]
    fn config_json_round_trips() {
        let cfg = RunConfig {
            device: DeviceSpec::Nchv {
                strategy: [1, 0, 1, 0, 0],
                policy: PolicySpec::RotateOnRepeat,
            },
            distribution: DistSpec::Biased { alpha: 6.0 },
            thresholds: Some(vec![3.0, 3.5, kcbs_core::L_Q]),
            curve: CurveSpec::File {
                path: PathBuf::from("curve.tsv"),
            },
            ..RunConfig::default()
        };
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_files_fall_back_to_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"k": 500, "seed": 9}"#).unwrap();
        assert_eq!(cfg.k, 500);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.device, DeviceSpec::Ideal);
        assert_eq!(cfg.curve, CurveSpec::Ns);
    }

    #[test]
    fn default_nchv_strategy_saturates_the_classical_bound() {
        let value = kcbs_core::bounds::assignment_value(&DEFAULT_NCHV_STRATEGY);
        assert_eq!(
            value, 3,
            "default assignment must achieve the classical maximum"
        );
    }
}
