//! Seeded trial-by-trial simulation of the pentagon experiment.
//!
//! A run draws `k` measurement contexts from an [`InputDistribution`],
//! queries a [`DeviceModel`] for each outcome pair, and records everything
//! in a [`TrialLog`]. Device models cover the ideal qutrit, isotropic
//! depolarization, detector loss with post-selection, and deterministic
//! noncontextual hidden-variable boxes with optional memory. The full trial
//! history is threaded through every response so memory models receive
//! exactly what a physical adversarial box would have.
//!
//! Logs serialize to a CSV file (`trial,i,j,a_i,a_j`) plus a JSON sidecar
//! carrying `k`, the seed, the input distribution, and the post-selection
//! discard counter.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fileio::{self, IoFormatError};
use crate::qutrit::{
    contexts_of, depolarize, joint_probs, kcbs_value, kcbs_vectors, reference_state, Context,
    Density3, JointDist, Ket3, QutritError, Slot, CONTEXTS,
};
use crate::rng;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Qutrit(#[from] QutritError),
    #[error(transparent)]
    Io(#[from] IoFormatError),
    #[error("trial log and sidecar disagree: {0}")]
    LogMismatch(String),
}

// ---------------------------------------------------------------------------
// Input distributions
// ---------------------------------------------------------------------------

/// How the five contexts are drawn each trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum DistributionKind {
    Uniform,
    Biased { alpha: f64 },
    Custom,
}

/// A probability distribution over the five measurement contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct InputDistribution {
    weights: [f64; 5],
    kind: DistributionKind,
}

/// On-disk shape of an [`InputDistribution`].
#[derive(Serialize, Deserialize)]
struct DistributionSpec {
    #[serde(flatten)]
    kind: DistributionKind,
    weights: [f64; 5],
}

impl From<InputDistribution> for DistributionSpec {
    fn from(d: InputDistribution) -> Self {
        Self {
            kind: d.kind,
            weights: d.weights,
        }
    }
}

impl TryFrom<DistributionSpec> for InputDistribution {
    type Error = String;

    fn try_from(spec: DistributionSpec) -> Result<Self, String> {
        // validate, but keep the stored weights bit-for-bit: a serialized
        // distribution must round-trip exactly, not renormalized anew
        InputDistribution::custom(spec.weights).map_err(|e| e.to_string())?;
        Ok(InputDistribution {
            weights: spec.weights,
            kind: spec.kind,
        })
    }
}

impl InputDistribution {
    /// Equal weight 1/5 on every context.
    pub fn uniform() -> Self {
        Self {
            weights: [0.2; 5],
            kind: DistributionKind::Uniform,
        }
    }

    /// The biased family: context `(A1,A2)` gets weight `1 - 4*alpha/sqrt(k)`
    /// and the other four get `alpha/sqrt(k)` each.
    ///
    /// Requires `alpha > 0` and `k > (4*alpha)^2` so all five weights stay in
    /// `(0, 1)`.
    pub fn biased(alpha: f64, k: u64) -> Result<Self, SimError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(SimError::InvalidParameter(format!(
                "biased alpha must be positive and finite, got {alpha}"
            )));
        }
        if (k as f64) <= (4.0 * alpha).powi(2) {
            return Err(SimError::InvalidParameter(format!(
                "biased distribution needs k > (4*alpha)^2 = {}, got k = {k}",
                (4.0 * alpha).powi(2)
            )));
        }
        let small = alpha / (k as f64).sqrt();
        Ok(Self {
            weights: [1.0 - 4.0 * small, small, small, small, small],
            kind: DistributionKind::Biased { alpha },
        })
    }

    /// Arbitrary nonnegative weights summing to 1 (within 1e-9; the stored
    /// weights are renormalized exactly).
    pub fn custom(weights: [f64; 5]) -> Result<Self, SimError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "weights must be finite and nonnegative, got {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidParameter(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        let mut w = weights;
        for x in &mut w {
            *x /= sum;
        }
        Ok(Self {
            weights: w,
            kind: DistributionKind::Custom,
        })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64; 5] {
        &self.weights
    }

    pub fn weight(&self, ctx: Context) -> f64 {
        self.weights[ctx.index()]
    }

    /// The smallest context weight — the `r` entering the concentration
    /// half-width. For the biased family this equals `alpha/sqrt(k)`
    /// whenever `k >= 25*alpha^2` (all certification-scale uses); closer to
    /// the existence boundary the complement `1 - 4*alpha/sqrt(k)` is the
    /// minimum and is returned instead.
    pub fn r(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Shannon entropy of one context draw, in bits.
    pub fn shannon_entropy_per_trial(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| w * w.log2())
            .sum::<f64>()
    }

    /// Min-entropy of one context draw, in bits.
    pub fn min_entropy_per_trial(&self) -> f64 {
        -self.weights.iter().copied().fold(0.0_f64, f64::max).log2()
    }

    /// Draws one context.
    pub fn sample(&self, rng: &mut rng::Rng) -> Context {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (idx, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return CONTEXTS[idx];
            }
        }
        CONTEXTS[4] // u landed in the round-off sliver at the top
    }
}

// ---------------------------------------------------------------------------
// Trial logs
// ---------------------------------------------------------------------------

/// One recorded trial: a 1-based trial index, the measured context, and the
/// two binary outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    pub ctx: Context,
    pub a_i: u8,
    pub a_j: u8,
}

/// A complete experiment record.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialLog {
    pub records: Vec<TrialRecord>,
    pub distribution: InputDistribution,
    pub seed: u64,
    /// Trials redrawn by post-selection (no surviving detector click).
    pub discarded_count: u64,
}

impl TrialLog {
    /// Number of retained trials.
    pub fn k(&self) -> u64 {
        self.records.len() as u64
    }

    /// How many retained trials used each context.
    pub fn context_counts(&self) -> [u64; 5] {
        let mut counts = [0u64; 5];
        for rec in &self.records {
            counts[rec.ctx.index()] += 1;
        }
        counts
    }

    /// Same log with the distribution metadata replaced (used to re-weight
    /// the estimator by observed frequencies).
    pub fn with_distribution(&self, distribution: InputDistribution) -> TrialLog {
        TrialLog {
            records: self.records.clone(),
            distribution,
            seed: self.seed,
            discarded_count: self.discarded_count,
        }
    }
}

// ---------------------------------------------------------------------------
// Device models
// ---------------------------------------------------------------------------

/// Memory policies for the deterministic noncontextual box. The policy may
/// rewrite the value assignment between trials using the full history, but
/// each trial is still answered by a deterministic assignment — which is why
/// no policy can push the witness estimate above the classical ceiling in
/// expectation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryPolicy {
    /// Never change the assignment.
    Memoryless,
    /// Rotate the assignment one step around the pentagon whenever the
    /// upcoming context repeats the previous trial's context.
    RotateOnRepeat,
    /// After any trial that produced equal outcomes, rewrite the assignment
    /// of that context's pair to (1, 0), chasing anti-correlation.
    FlipEqualPair,
}

/// The device under test.
#[derive(Clone, Debug)]
pub enum DeviceModel {
    /// A qutrit state measured with arbitrary projector directions.
    IdealQuantum {
        rho: Density3,
        vectors: Box<[Ket3; 5]>,
    },
    /// Ideal pentagon geometry with isotropically depolarized state
    /// (visibility `v`).
    Depolarized { v: f64 },
    /// Ideal pentagon geometry with detector efficiency `eta`; trials with
    /// no surviving click are redrawn and counted.
    LossyQuantum { eta: f64 },
    /// Deterministic value assignment `a_1..a_5` with a memory policy.
    DeterministicNchv {
        strategy: [u8; 5],
        policy: MemoryPolicy,
    },
}

impl DeviceModel {
    /// The ideal pentagon device.
    pub fn ideal() -> Self {
        DeviceModel::IdealQuantum {
            rho: reference_state(),
            vectors: Box::new(kcbs_vectors()),
        }
    }

    /// Per-context joint outcome tables, for models with a quantum state.
    pub fn joint_table(&self) -> Result<Option<[JointDist; 5]>, SimError> {
        let (rho, vectors) = match self {
            DeviceModel::IdealQuantum { rho, vectors } => (*rho, *vectors.clone()),
            DeviceModel::Depolarized { v } => (depolarize(&reference_state(), *v)?, kcbs_vectors()),
            DeviceModel::LossyQuantum { .. } => (reference_state(), kcbs_vectors()),
            DeviceModel::DeterministicNchv { .. } => return Ok(None),
        };
        let mut table = [JointDist {
            p11: 0.0,
            p10: 0.0,
            p01: 0.0,
            p00: 0.0,
        }; 5];
        for ctx in CONTEXTS {
            table[ctx.index()] = joint_probs(&rho, ctx, &vectors)?;
        }
        Ok(Some(table))
    }

    /// The witness value whose per-trial conditional expectation this model
    /// realizes, when that is defined (all models except the memoryful
    /// noncontextual boxes, whose assignment drifts with history).
    pub fn true_witness_value(&self) -> Result<Option<f64>, SimError> {
        match self {
            DeviceModel::IdealQuantum { rho, vectors } => Ok(Some(kcbs_value(rho, vectors)?)),
            DeviceModel::Depolarized { v } => Ok(Some(kcbs_value(
                &depolarize(&reference_state(), *v)?,
                &kcbs_vectors(),
            )?)),
            // post-selection leaves the ideal joint distribution intact
            DeviceModel::LossyQuantum { .. } => {
                Ok(Some(kcbs_value(&reference_state(), &kcbs_vectors())?))
            }
            DeviceModel::DeterministicNchv { strategy, policy } => match policy {
                MemoryPolicy::Memoryless => {
                    Ok(Some(crate::bounds::assignment_value(strategy) as f64))
                }
                _ => Ok(None),
            },
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        match self {
            DeviceModel::Depolarized { v } => {
                if !(0.0..=1.0).contains(v) {
                    return Err(SimError::InvalidParameter(format!(
                        "visibility v = {v} outside [0, 1]"
                    )));
                }
            }
            DeviceModel::LossyQuantum { eta } => {
                if !(*eta > 0.0 && *eta <= 1.0) {
                    return Err(SimError::InvalidParameter(format!(
                        "efficiency eta = {eta} outside (0, 1]"
                    )));
                }
            }
            DeviceModel::DeterministicNchv { strategy, .. } => {
                if strategy.iter().any(|a| *a > 1) {
                    return Err(SimError::InvalidParameter(format!(
                        "assignment entries must be 0/1, got {strategy:?}"
                    )));
                }
            }
            DeviceModel::IdealQuantum { .. } => {}
        }
        Ok(())
    }
}

/// Runtime state of a device across one experiment.
pub struct DeviceState {
    model: DeviceModel,
    table: Option<[JointDist; 5]>,
    strategy: [u8; 5],
    policy: MemoryPolicy,
    /// Post-selection redraws so far.
    pub discarded: u64,
}

impl DeviceState {
    pub fn new(model: DeviceModel) -> Result<Self, SimError> {
        model.validate()?;
        let table = model.joint_table()?;
        let (strategy, policy) = match &model {
            DeviceModel::DeterministicNchv { strategy, policy } => (*strategy, *policy),
            _ => ([0; 5], MemoryPolicy::Memoryless),
        };
        Ok(Self {
            model,
            table,
            strategy,
            policy,
            discarded: 0,
        })
    }

    fn sample_outcome(table: &JointDist, rng: &mut rng::Rng) -> (u8, u8) {
        let u: f64 = rng.gen();
        if u < table.p11 {
            (1, 1)
        } else if u < table.p11 + table.p10 {
            (1, 0)
        } else if u < table.p11 + table.p10 + table.p01 {
            (0, 1)
        } else {
            (0, 0)
        }
    }

    /// Produces the outcome pair for `ctx`, given the full prior history.
    pub fn respond(
        &mut self,
        ctx: Context,
        history: &[TrialRecord],
        rng: &mut rng::Rng,
    ) -> (u8, u8) {
        match &self.model {
            DeviceModel::IdealQuantum { .. } | DeviceModel::Depolarized { .. } => {
                let table = &self.table.as_ref().expect("quantum model has table")[ctx.index()];
                Self::sample_outcome(table, rng)
            }
            DeviceModel::LossyQuantum { eta } => {
                let eta = *eta;
                let table = self.table.as_ref().expect("quantum model has table")[ctx.index()];
                loop {
                    let (a, b) = Self::sample_outcome(&table, rng);
                    if eta >= 1.0 {
                        return (a, b);
                    }
                    // every click (including the third-port click behind an
                    // explicit (0,0) outcome) survives independently with
                    // probability eta; a trial with no surviving click is
                    // discarded and redrawn
                    let survived = match (a, b) {
                        (0, 0) => {
                            if rng.gen::<f64>() < eta {
                                Some((0, 0))
                            } else {
                                None
                            }
                        }
                        (a, b) => {
                            let keep_i = a == 1 && rng.gen::<f64>() < eta;
                            let keep_j = b == 1 && rng.gen::<f64>() < eta;
                            if keep_i || keep_j {
                                Some((u8::from(keep_i), u8::from(keep_j)))
                            } else {
                                None
                            }
                        }
                    };
                    match survived {
                        Some(pair) => return pair,
                        None => self.discarded += 1,
                    }
                }
            }
            DeviceModel::DeterministicNchv { .. } => {
                self.apply_policy(ctx, history);
                (
                    self.strategy[(ctx.i() - 1) as usize],
                    self.strategy[(ctx.j() - 1) as usize],
                )
            }
        }
    }

    fn apply_policy(&mut self, upcoming: Context, history: &[TrialRecord]) {
        match self.policy {
            MemoryPolicy::Memoryless => {}
            MemoryPolicy::RotateOnRepeat => {
                if history.last().map(|r| r.ctx) == Some(upcoming) {
                    self.strategy.rotate_left(1);
                }
            }
            MemoryPolicy::FlipEqualPair => {
                if let Some(last) = history.last() {
                    if last.a_i == last.a_j {
                        self.strategy[(last.ctx.i() - 1) as usize] = 1;
                        self.strategy[(last.ctx.j() - 1) as usize] = 0;
                    }
                }
            }
        }
    }
}

/// Convenience wrapper over [`DeviceState::respond`] for one-shot queries.
pub fn device_respond(
    state: &mut DeviceState,
    ctx: Context,
    history: &[TrialRecord],
    rng: &mut rng::Rng,
) -> (u8, u8) {
    state.respond(ctx, history, rng)
}

/// Runs a `k`-trial experiment.
///
/// Contexts are drawn from the `"inputs"` sub-stream of `seed` and device
/// outcomes from the `"device"` sub-stream, so input and device randomness
/// never alias. The history passed to the device at trial `l` is exactly the
/// `l-1` previously recorded trials, in order.
pub fn run_experiment(
    model: DeviceModel,
    distribution: InputDistribution,
    k: u64,
    seed: u64,
) -> Result<TrialLog, SimError> {
    if k == 0 {
        return Err(SimError::InvalidParameter(
            "trial count k must be at least 1".to_string(),
        ));
    }
    let mut state = DeviceState::new(model)?;
    let mut input_rng = rng::substream(seed, "inputs", 0);
    let mut device_rng = rng::substream(seed, "device", 0);
    let mut records: Vec<TrialRecord> = Vec::with_capacity(k as usize);
    for trial in 1..=k {
        let ctx = distribution.sample(&mut input_rng);
        let (a_i, a_j) = state.respond(ctx, &records, &mut device_rng);
        records.push(TrialRecord {
            trial,
            ctx,
            a_i,
            a_j,
        });
    }
    Ok(TrialLog {
        records,
        distribution,
        seed,
        discarded_count: state.discarded,
    })
}

// ---------------------------------------------------------------------------
// No-disturbance audit
// ---------------------------------------------------------------------------

/// Marginal of one observable within one context.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContextMarginal {
    pub context: Context,
    pub trials: u64,
    /// `P(a = 1)` estimate; `None` when the context was never observed.
    pub p_one: Option<f64>,
}

/// No-disturbance audit row for one observable: its marginal must agree
/// between the two contexts that contain it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NoDisturbanceEntry {
    pub observable: u8,
    pub first: ContextMarginal,
    pub second: ContextMarginal,
    /// `|p_first - p_second|`; `None` if either side lacks data.
    pub discrepancy: Option<f64>,
}

/// Per-observable no-disturbance audit.
#[derive(Clone, Debug, Serialize)]
pub struct NoDisturbanceReport {
    pub entries: [NoDisturbanceEntry; 5],
}

impl NoDisturbanceReport {
    /// Largest defined discrepancy, if any entry has one.
    pub fn max_discrepancy(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter_map(|e| e.discrepancy)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }
}

/// Compares each observable's outcome marginal across its two host
/// contexts. Contexts without data yield explicit undefined entries rather
/// than zeros.
pub fn no_disturbance_report(log: &TrialLog) -> NoDisturbanceReport {
    let mut ones = [[0u64; 2]; 5]; // [observable][slot-home]
    let mut totals = [[0u64; 2]; 5];
    // which home (0 or 1) a context is for an observable
    let home = |obs: u8, ctx: Context| -> Option<usize> {
        contexts_of(obs)
            .expect("observable in 1..=5")
            .iter()
            .position(|(c, _)| *c == ctx)
    };
    for rec in &log.records {
        for (slot, obs) in [(Slot::First, rec.ctx.i()), (Slot::Second, rec.ctx.j())] {
            let h = home(obs, rec.ctx).expect("context hosts its own observables");
            let bit = match slot {
                Slot::First => rec.a_i,
                Slot::Second => rec.a_j,
            };
            totals[(obs - 1) as usize][h] += 1;
            ones[(obs - 1) as usize][h] += u64::from(bit);
        }
    }
    let entries = std::array::from_fn(|idx| {
        let obs = (idx + 1) as u8;
        let homes = contexts_of(obs).expect("observable in 1..=5");
        let marginal = |h: usize| -> ContextMarginal {
            let trials = totals[idx][h];
            ContextMarginal {
                context: homes[h].0,
                trials,
                p_one: (trials > 0).then(|| ones[idx][h] as f64 / trials as f64),
            }
        };
        let first = marginal(0);
        let second = marginal(1);
        let discrepancy = match (first.p_one, second.p_one) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        NoDisturbanceEntry {
            observable: obs,
            first,
            second,
            discrepancy,
        }
    });
    NoDisturbanceReport { entries }
}

// ---------------------------------------------------------------------------
// On-disk format
// ---------------------------------------------------------------------------

const TRIAL_HEADER: &str = "trial,i,j,a_i,a_j";

/// Sidecar metadata stored next to the trial CSV.
#[derive(Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    k: u64,
    seed: u64,
    distribution: InputDistribution,
    discarded_count: u64,
}

/// Conventional sidecar path for a trial CSV: `<path>.json`.
pub fn sidecar_path(csv_path: &std::path::Path) -> std::path::PathBuf {
    let mut os = csv_path.as_os_str().to_owned();
    os.push(".json");
    std::path::PathBuf::from(os)
}

/// Writes the log as CSV plus JSON sidecar (both atomically).
pub fn write_trial_log(
    log: &TrialLog,
    csv_path: &std::path::Path,
    sidecar_path: &std::path::Path,
) -> Result<(), SimError> {
    let mut text = String::with_capacity(16 + log.records.len() * 12);
    text.push_str(&fileio::version_comment());
    text.push_str(TRIAL_HEADER);
    text.push('\n');
    for rec in &log.records {
        use std::fmt::Write as _;
        writeln!(
            text,
            "{},{},{},{},{}",
            rec.trial,
            rec.ctx.i(),
            rec.ctx.j(),
            rec.a_i,
            rec.a_j
        )
        .expect("string write");
    }
    fileio::atomic_write(csv_path, text.as_bytes())?;

    let sidecar = Sidecar {
        format_version: crate::FORMAT_VERSION,
        k: log.k(),
        seed: log.seed,
        distribution: log.distribution.clone(),
        discarded_count: log.discarded_count,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fileio::atomic_write(sidecar_path, json.as_bytes())?;
    Ok(())
}

/// Reads a log back from CSV + sidecar, validating structure (header, field
/// count, bit values, context validity, strictly increasing trial numbers,
/// and agreement with the sidecar's `k`).
pub fn read_trial_log(
    csv_path: &std::path::Path,
    sidecar_path: &std::path::Path,
) -> Result<TrialLog, SimError> {
    let text = fileio::read_text(csv_path)?;
    let lines = fileio::strip_version_comment(csv_path, &text)?;
    let mut iter = lines.into_iter();
    match iter.next() {
        Some((_, header)) if header.trim() == TRIAL_HEADER => {}
        Some((lineno, header)) => {
            return Err(IoFormatError::parse(
                csv_path,
                lineno,
                format!("expected header '{TRIAL_HEADER}', found '{header}'"),
            )
            .into())
        }
        None => return Err(IoFormatError::parse(csv_path, 1, "empty trial file").into()),
    }
    let mut records = Vec::new();
    let mut last_trial = 0u64;
    for (lineno, line) in iter {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(IoFormatError::parse(
                csv_path,
                lineno,
                format!("expected 5 comma-separated fields, found {}", fields.len()),
            )
            .into());
        }
        let parse_u64 = |s: &str, what: &str| -> Result<u64, SimError> {
            s.trim().parse::<u64>().map_err(|_| {
                IoFormatError::parse(csv_path, lineno, format!("bad {what} '{s}'")).into()
            })
        };
        let trial = parse_u64(fields[0], "trial number")?;
        let i = parse_u64(fields[1], "observable index i")? as u8;
        let j = parse_u64(fields[2], "observable index j")? as u8;
        let a_i = parse_u64(fields[3], "outcome a_i")?;
        let a_j = parse_u64(fields[4], "outcome a_j")?;
        if trial <= last_trial {
            return Err(IoFormatError::parse(
                csv_path,
                lineno,
                format!("trial numbers must strictly increase ({last_trial} then {trial})"),
            )
            .into());
        }
        last_trial = trial;
        if a_i > 1 || a_j > 1 {
            return Err(IoFormatError::parse(
                csv_path,
                lineno,
                format!("outcomes must be 0 or 1, got ({a_i},{a_j})"),
            )
            .into());
        }
        let ctx = Context::new(i, j).map_err(|_| -> SimError {
            IoFormatError::parse(
                csv_path,
                lineno,
                format!("({i},{j}) is not a valid context"),
            )
            .into()
        })?;
        records.push(TrialRecord {
            trial,
            ctx,
            a_i: a_i as u8,
            a_j: a_j as u8,
        });
    }

    let sidecar_text = fileio::read_text(sidecar_path)?;
    let sidecar: Sidecar = serde_json::from_str(&sidecar_text).map_err(|e| {
        IoFormatError::parse(sidecar_path, e.line(), format!("bad sidecar JSON: {e}"))
    })?;
    if sidecar.format_version != crate::FORMAT_VERSION {
        return Err(IoFormatError::Version {
            path: sidecar_path.display().to_string(),
            found: sidecar.format_version.to_string(),
            supported: crate::FORMAT_VERSION,
        }
        .into());
    }
    if sidecar.k != records.len() as u64 {
        return Err(SimError::LogMismatch(format!(
            "sidecar says k = {} but CSV holds {} trials",
            sidecar.k,
            records.len()
        )));
    }
    Ok(TrialLog {
        records,
        distribution: sidecar.distribution,
        seed: sidecar.seed,
        discarded_count: sidecar.discarded_count,
    })
}
