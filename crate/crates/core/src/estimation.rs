//! Estimating the pentagon witness from recorded data.
//!
//! The witness estimator weights each trial by the inverse probability of
//! its context,
//!
//! ```text
//! L_hat = (1/k) * sum_l tau(a_i, a_j) / P(ctx_l),   tau = +1 if a_i != a_j, else -1
//! ```
//!
//! which is unbiased for the true witness value trial-by-trial even against
//! devices with memory (the per-trial conditional expectation telescopes).
//! Equivalently, aggregated counts give `L_hat = sum over contexts of
//! [P_hat(neq|ctx) - P_hat(eq|ctx)]` when the weights are the observed
//! context frequencies; both routes are implemented and agree to round-off.
//!
//! Probability tables (`i,j,p10,p01,p00[,p11]` CSV) interoperate with
//! externally published summaries; a missing `p11` column is read as zero.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::fileio::{self, IoFormatError};
use crate::qutrit::{Context, JointDist, CONTEXTS};
use crate::sim::{InputDistribution, TrialLog};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("trial log is empty")]
    EmptyLog,
    #[error("context {0} was never observed")]
    UnobservedContext(Context),
    #[error("context {0} was observed but has input weight 0")]
    ZeroWeightObserved(Context),
    #[error("probability row for ({i},{j}) sums to {sum}, off by more than 0.01")]
    RowUnnormalized { i: u8, j: u8, sum: f64 },
    #[error("probability table must contain each context exactly once; {0}")]
    BadTableShape(String),
    #[error(transparent)]
    Io(#[from] IoFormatError),
}

/// The per-trial witness contribution `tau/P(ctx)`.
fn weighted_term(a_i: u8, a_j: u8, weight: f64) -> f64 {
    let tau = if a_i != a_j { 1.0 } else { -1.0 };
    tau / weight
}

// ---------------------------------------------------------------------------
// Counts
// ---------------------------------------------------------------------------

/// Outcome counts per context, in `(n11, n10, n01, n00)` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountsTable {
    pub counts: [[u64; 4]; 5],
}

impl CountsTable {
    pub fn total(&self, ctx: Context) -> u64 {
        self.counts[ctx.index()].iter().sum()
    }

    /// Empirical joint distributions; errors if any context has no data.
    pub fn to_prob_table(&self) -> Result<ProbTable, EstimationError> {
        let mut rows = [JointDist {
            p11: 0.0,
            p10: 0.0,
            p01: 0.0,
            p00: 0.0,
        }; 5];
        for ctx in CONTEXTS {
            let n = self.total(ctx);
            if n == 0 {
                return Err(EstimationError::UnobservedContext(ctx));
            }
            let c = self.counts[ctx.index()];
            rows[ctx.index()] = JointDist {
                p11: c[0] as f64 / n as f64,
                p10: c[1] as f64 / n as f64,
                p01: c[2] as f64 / n as f64,
                p00: c[3] as f64 / n as f64,
            };
        }
        ProbTable::new(rows)
    }
}

/// Tallies a log into per-context outcome counts.
pub fn counts_table(log: &TrialLog) -> CountsTable {
    let mut counts = [[0u64; 4]; 5];
    for rec in &log.records {
        let slot = match (rec.a_i, rec.a_j) {
            (1, 1) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            _ => 3,
        };
        counts[rec.ctx.index()][slot] += 1;
    }
    CountsTable { counts }
}

// ---------------------------------------------------------------------------
// Probability tables
// ---------------------------------------------------------------------------

/// Joint outcome probabilities for all five contexts.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbTable {
    rows: [JointDist; 5],
}

impl ProbTable {
    /// Validates row normalization: each row must sum to 1 within 0.01.
    /// (Tables produced by this toolkit sum to 1 within 2e-3; the looser
    /// gate only exists to reject grossly corrupted external data.)
    pub fn new(rows: [JointDist; 5]) -> Result<Self, EstimationError> {
        for (ctx, row) in CONTEXTS.iter().zip(rows.iter()) {
            let sum = row.sum();
            if (sum - 1.0).abs() > 0.01 {
                return Err(EstimationError::RowUnnormalized {
                    i: ctx.i(),
                    j: ctx.j(),
                    sum,
                });
            }
        }
        Ok(Self { rows })
    }

    /// Empirical table of a log; errors if any context lacks data.
    pub fn from_log(log: &TrialLog) -> Result<Self, EstimationError> {
        counts_table(log).to_prob_table()
    }

    pub fn rows(&self) -> &[JointDist; 5] {
        &self.rows
    }

    pub fn row(&self, ctx: Context) -> &JointDist {
        &self.rows[ctx.index()]
    }

    /// Largest `|row sum - 1|` across contexts.
    pub fn max_row_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Inverse-probability-weighted witness estimate from a trial log.
pub fn violation_from_log(log: &TrialLog) -> Result<f64, EstimationError> {
    per_trial_values(log).map(|vals| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// The per-trial contributions `tau_l / P(ctx_l)` in trial order.
pub fn per_trial_values(log: &TrialLog) -> Result<Vec<f64>, EstimationError> {
    if log.records.is_empty() {
        return Err(EstimationError::EmptyLog);
    }
    log.records
        .iter()
        .map(|rec| {
            let w = log.distribution.weight(rec.ctx);
            if w <= 0.0 {
                return Err(EstimationError::ZeroWeightObserved(rec.ctx));
            }
            Ok(weighted_term(rec.a_i, rec.a_j, w))
        })
        .collect()
}

/// Running witness estimate after each trial (prefix means of the per-trial
/// contributions).
pub fn streaming_estimator(log: &TrialLog) -> Result<Vec<f64>, EstimationError> {
    let vals = per_trial_values(log)?;
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    for (n, v) in vals.iter().enumerate() {
        acc += v;
        out.push(acc / (n + 1) as f64);
    }
    Ok(out)
}

/// Standard error of the witness estimate: the sample standard deviation of
/// the per-trial contributions divided by `sqrt(k)`. Requires `k >= 2`.
pub fn stderr_estimate(log: &TrialLog) -> Result<f64, EstimationError> {
    let vals = per_trial_values(log)?;
    if vals.len() < 2 {
        return Err(EstimationError::BadTableShape(
            "standard error needs at least 2 trials".to_string(),
        ));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((var / n).sqrt())
}

/// Witness value of a probability table: `sum over contexts of
/// [p10 + p01 - p11 - p00]`.
pub fn violation_from_probs(table: &ProbTable) -> Result<f64, EstimationError> {
    // rows were validated on construction; re-check cheaply in case the
    // table was built from a deserialized JointDist array elsewhere
    for (ctx, row) in CONTEXTS.iter().zip(table.rows().iter()) {
        let sum = row.sum();
        if (sum - 1.0).abs() > 0.01 {
            return Err(EstimationError::RowUnnormalized {
                i: ctx.i(),
                j: ctx.j(),
                sum,
            });
        }
    }
    Ok(table.rows().iter().map(|r| r.neq_minus_eq()).sum())
}

/// Re-weights a log by its observed context frequencies (the distribution
/// under which the streaming and aggregated estimators coincide exactly).
pub fn observed_frequency_distribution(
    log: &TrialLog,
) -> Result<InputDistribution, EstimationError> {
    if log.records.is_empty() {
        return Err(EstimationError::EmptyLog);
    }
    let counts = log.context_counts();
    let k = log.k() as f64;
    let weights = std::array::from_fn(|idx| counts[idx] as f64 / k);
    InputDistribution::custom(weights).map_err(|e| EstimationError::BadTableShape(e.to_string()))
}

// ---------------------------------------------------------------------------
// On-disk format
// ---------------------------------------------------------------------------

/// Writes a probability table as CSV (`i,j,p10,p01,p00,p11`).
pub fn write_prob_table(table: &ProbTable, path: &Path) -> Result<(), EstimationError> {
    let mut text = String::new();
    text.push_str(&fileio::version_comment());
    text.push_str("i,j,p10,p01,p00,p11\n");
    for (ctx, row) in CONTEXTS.iter().zip(table.rows().iter()) {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            ctx.i(),
            ctx.j(),
            row.p10,
            row.p01,
            row.p00,
            row.p11
        )
        .expect("string write");
    }
    fileio::atomic_write(path, text.as_bytes())?;
    Ok(())
}

/// Reads a probability table CSV. The `p11` column is optional and defaults
/// to zero; each context must appear exactly once.
pub fn read_prob_table(path: &Path) -> Result<ProbTable, EstimationError> {
    let text = fileio::read_text(path)?;
    let lines = fileio::strip_version_comment(path, &text)?;
    let mut iter = lines.into_iter();
    let with_p11 = match iter.next() {
        Some((_, h)) if h.trim() == "i,j,p10,p01,p00,p11" => true,
        Some((_, h)) if h.trim() == "i,j,p10,p01,p00" => false,
        Some((lineno, h)) => {
            return Err(IoFormatError::parse(
                path,
                lineno,
                format!("unrecognized probability-table header '{h}'"),
            )
            .into())
        }
        None => return Err(IoFormatError::parse(path, 1, "empty probability table").into()),
    };
    let mut rows: [Option<JointDist>; 5] = [None; 5];
    for (lineno, line) in iter {
        let fields: Vec<&str> = line.trim().split(',').collect();
        let expected = if with_p11 { 6 } else { 5 };
        if fields.len() != expected {
            return Err(IoFormatError::parse(
                path,
                lineno,
                format!("expected {expected} fields, found {}", fields.len()),
            )
            .into());
        }
        let parse = |s: &str, what: &str| -> Result<f64, EstimationError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| IoFormatError::parse(path, lineno, format!("bad {what} '{s}'")).into())
        };
        let i = parse(fields[0], "observable index i")? as u8;
        let j = parse(fields[1], "observable index j")? as u8;
        let ctx = Context::new(i, j).map_err(|_| -> EstimationError {
            IoFormatError::parse(path, lineno, format!("({i},{j}) is not a valid context")).into()
        })?;
        let p10 = parse(fields[2], "p10")?;
        let p01 = parse(fields[3], "p01")?;
        let p00 = parse(fields[4], "p00")?;
        let p11 = if with_p11 {
            parse(fields[5], "p11")?
        } else {
            0.0
        };
        if rows[ctx.index()].is_some() {
            return Err(IoFormatError::parse(
                path,
                lineno,
                format!("duplicate row for context ({i},{j})"),
            )
            .into());
        }
        rows[ctx.index()] = Some(JointDist { p11, p10, p01, p00 });
    }
    let mut filled = [JointDist {
        p11: 0.0,
        p10: 0.0,
        p01: 0.0,
        p00: 0.0,
    }; 5];
    for (idx, row) in rows.into_iter().enumerate() {
        match row {
            Some(r) => filled[idx] = r,
            None => {
                return Err(EstimationError::BadTableShape(format!(
                    "missing row for context {}",
                    CONTEXTS[idx]
                )))
            }
        }
    }
    ProbTable::new(filled)
}
