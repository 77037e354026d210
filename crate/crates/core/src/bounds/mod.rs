//! Adversarial bounds: how well can an eavesdropper predict outcomes, given
//! an observed witness value L?
//!
//! Three nested models are covered, from weakest to strongest assumption:
//!
//! * **Deterministic noncontextual assignments** — brute force over all 32
//!   strategies shows the witness cannot exceed 3
//!   ([`classical_bound_bruteforce`]).
//! * **No-signaling adversary** — the closed form [`f_ns`], cross-checked by
//!   the linear program in [`nslp`].
//! * **Quantum (projective, three dimensions)** — a numerical search over
//!   rank-one realizations in [`quantum`], post-processed into a concave,
//!   monotone envelope so interpolation between nodes stays sound.
//!
//! Both adversary models produce an [`EntropyCurve`]: min-entropy rate `f(L)`
//! (bits per trial) as a function of the witness value, evaluated through
//! [`EntropyCurve::eval`] and serialized as tab-separated text.

pub mod nslp;
pub mod quantum;
pub mod simplex;

use crate::fileio::{self, IoFormatError};
use crate::qutrit::CONTEXTS;
use crate::{L_CLASSICAL, L_Q};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("witness value {l} exceeds the quantum maximum 4*sqrt(5)-5")]
    OutOfRange { l: f64 },
    #[error("no-signaling LP infeasible: {constraint} violated by {residual:.3e}")]
    Infeasible { constraint: String, residual: f64 },
    #[error("LP solver failed: {0}")]
    Simplex(#[from] simplex::SimplexError),
    #[error(transparent)]
    Qutrit(#[from] crate::qutrit::QutritError),
    #[error("optimizer did not converge: {0}")]
    SearchFailed(String),
    #[error("bad entropy curve: {0}")]
    BadCurve(String),
    #[error(transparent)]
    Io(#[from] IoFormatError),
}

/// Slack allowed above the quantum maximum before a witness value is
/// rejected as unphysical.
pub const L_RANGE_TOL: f64 = 1e-9;

/// Witness value of one deterministic assignment: +1 per context whose two
/// observables differ, -1 per context where they agree.
pub fn assignment_value(strategy: &[u8; 5]) -> i32 {
    CONTEXTS
        .iter()
        .map(|ctx| {
            let a = strategy[usize::from(ctx.i()) - 1];
            let b = strategy[usize::from(ctx.j()) - 1];
            if a != b {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// Enumerates all 32 deterministic assignments and returns the maximum
/// witness value together with every maximizing strategy.
///
/// On a five-cycle no 0/1 assignment alternates everywhere, so the maximum
/// is 3 (four unequal pairs, one forced equal pair), attained by exactly ten
/// strategies.
pub fn classical_bound_bruteforce() -> (i32, Vec<[u8; 5]>) {
    let mut best = i32::MIN;
    let mut maximizers = Vec::new();
    for bits in 0u8..32 {
        let strategy = [
            bits & 1,
            (bits >> 1) & 1,
            (bits >> 2) & 1,
            (bits >> 3) & 1,
            (bits >> 4) & 1,
        ];
        let value = assignment_value(&strategy);
        if value > best {
            best = value;
            maximizers.clear();
        }
        if value == best {
            maximizers.push(strategy);
        }
    }
    (best, maximizers)
}

/// Min-entropy rate certified against a no-signaling adversary:
/// `f_ns(L) = -log2(1.75 - L/4)`.
///
/// Values below the classical bound certify nothing and clamp to 0; values
/// above the quantum maximum (beyond [`L_RANGE_TOL`]) are rejected as
/// unphysical rather than extrapolated.
pub fn f_ns(l: f64) -> Result<f64, BoundsError> {
    if !l.is_finite() {
        return Err(BoundsError::BadParameter(format!(
            "witness value must be finite, got {l}"
        )));
    }
    if l > L_Q + L_RANGE_TOL {
        return Err(BoundsError::OutOfRange { l });
    }
    if l < L_CLASSICAL {
        return Ok(0.0);
    }
    let l = l.min(L_Q);
    let f = -(1.75 - l / 4.0).log2();
    // normalize the l = 3 endpoint to +0.0 so tabulated files print "0"
    Ok(if f == 0.0 { 0.0 } else { f })
}

/// How an entropy curve's values were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveProvenance {
    /// Closed-form no-signaling bound; evaluation bypasses the stored nodes.
    NsAnalytic,
    /// No-signaling bound recomputed through the linear program.
    NsLp,
    /// Numerical search over three-dimensional quantum realizations.
    QuantumReference,
}

impl CurveProvenance {
    pub fn label(self) -> &'static str {
        match self {
            CurveProvenance::NsAnalytic => "ns_analytic",
            CurveProvenance::NsLp => "ns_lp",
            CurveProvenance::QuantumReference => "quantum_reference",
        }
    }
}

/// One node of an entropy curve.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    /// Witness value.
    pub l: f64,
    /// Certified min-entropy rate in bits per trial.
    pub f: f64,
    /// Whether the optimizer met its residual tolerance at this node.
    /// Unconverged nodes are kept for reporting but skipped by evaluation.
    pub converged: bool,
}

/// Search metadata carried alongside a curve.
#[derive(Clone, Debug, Default)]
pub struct CurveMeta {
    pub restarts: u32,
    pub seed: Option<u64>,
    pub residual_tolerance: f64,
    pub note: String,
}

/// Min-entropy rate as a function of the witness value, on a fixed grid.
#[derive(Clone, Debug)]
pub struct EntropyCurve {
    provenance: CurveProvenance,
    points: Vec<CurvePoint>,
    meta: CurveMeta,
}

impl EntropyCurve {
    /// Builds a curve after validating the grid: strictly ascending witness
    /// values inside `[3 - tol, L_q + tol]`, finite rates, and at least one
    /// converged node.
    pub fn new(
        provenance: CurveProvenance,
        points: Vec<CurvePoint>,
        meta: CurveMeta,
    ) -> Result<Self, BoundsError> {
        if points.is_empty() {
            return Err(BoundsError::BadCurve("curve has no points".into()));
        }
        for pair in points.windows(2) {
            if pair[1].l <= pair[0].l {
                return Err(BoundsError::BadCurve(format!(
                    "grid must be strictly ascending, saw {} then {}",
                    pair[0].l, pair[1].l
                )));
            }
        }
        for p in &points {
            if p.l < L_CLASSICAL - L_RANGE_TOL || p.l > L_Q + L_RANGE_TOL {
                return Err(BoundsError::BadCurve(format!(
                    "grid point {} outside [3, 4*sqrt(5)-5]",
                    p.l
                )));
            }
            if p.converged && !(p.f.is_finite() && p.f >= -1e-12) {
                return Err(BoundsError::BadCurve(format!(
                    "rate at L = {} is not a nonnegative finite value: {}",
                    p.l, p.f
                )));
            }
        }
        if !points.iter().any(|p| p.converged) {
            return Err(BoundsError::BadCurve("no converged points".into()));
        }
        Ok(EntropyCurve {
            provenance,
            points,
            meta,
        })
    }

    pub fn provenance(&self) -> CurveProvenance {
        self.provenance
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    /// Certified rate at witness value `l`.
    ///
    /// Below the classical bound the rate clamps to zero; above the quantum
    /// maximum evaluation fails. Analytic curves evaluate in closed form;
    /// grid curves interpolate linearly between converged nodes, anchored at
    /// `(3, 0)` on the left and extended flat past the last node (the flat
    /// extension can only understate the rate, which is safe).
    pub fn eval(&self, l: f64) -> Result<f64, BoundsError> {
        if !l.is_finite() {
            return Err(BoundsError::BadParameter(format!(
                "witness value must be finite, got {l}"
            )));
        }
        if l > L_Q + L_RANGE_TOL {
            return Err(BoundsError::OutOfRange { l });
        }
        if l < L_CLASSICAL {
            return Ok(0.0);
        }
        let l = l.min(L_Q);
        if self.provenance == CurveProvenance::NsAnalytic {
            return f_ns(l);
        }
        let usable: Vec<&CurvePoint> = self.points.iter().filter(|p| p.converged).collect();
        let first = usable[0];
        if l <= first.l {
            if (first.l - L_CLASSICAL).abs() < 1e-12 {
                return Ok(first.f);
            }
            // implicit anchor: the rate is exactly zero at the classical bound
            let t = (l - L_CLASSICAL) / (first.l - L_CLASSICAL);
            return Ok(t * first.f);
        }
        for pair in usable.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if l <= b.l {
                // exact node hits return the stored value bit-for-bit
                if l == a.l {
                    return Ok(a.f);
                }
                if l == b.l {
                    return Ok(b.f);
                }
                let t = (l - a.l) / (b.l - a.l);
                return Ok(a.f + t * (b.f - a.f));
            }
        }
        Ok(usable.last().expect("non-empty").f)
    }
}

/// Default evaluation grid: `n` equally spaced witness values from the
/// classical bound to the quantum maximum (endpoints included).
pub fn curve_grid(n: usize) -> Result<Vec<f64>, BoundsError> {
    if n < 2 {
        return Err(BoundsError::BadParameter(format!(
            "grid needs at least 2 points, got {n}"
        )));
    }
    let step = (L_Q - L_CLASSICAL) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| L_CLASSICAL + step * i as f64).collect();
    grid[n - 1] = L_Q;
    Ok(grid)
}

/// The standard 20-point grid.
pub fn default_curve_grid() -> Vec<f64> {
    curve_grid(20).expect("20 >= 2")
}

/// No-signaling curve from the closed form.
pub fn ns_analytic_curve(grid: &[f64]) -> Result<EntropyCurve, BoundsError> {
    let points = grid
        .iter()
        .map(|&l| {
            Ok(CurvePoint {
                l,
                f: f_ns(l)?,
                converged: true,
            })
        })
        .collect::<Result<Vec<_>, BoundsError>>()?;
    EntropyCurve::new(
        CurveProvenance::NsAnalytic,
        points,
        CurveMeta {
            note: "closed form".into(),
            ..CurveMeta::default()
        },
    )
}

/// No-signaling curve recomputed through the linear program, as an
/// independent check on the closed form.
pub fn ns_lp_curve(grid: &[f64]) -> Result<EntropyCurve, BoundsError> {
    let points = grid
        .iter()
        .map(|&l| {
            if l > L_Q + L_RANGE_TOL {
                return Err(BoundsError::OutOfRange { l });
            }
            let g = nslp::ns_guessing_probability(l.min(L_Q))?;
            Ok(CurvePoint {
                l,
                f: -g.p_star.log2(),
                converged: true,
            })
        })
        .collect::<Result<Vec<_>, BoundsError>>()?;
    EntropyCurve::new(
        CurveProvenance::NsLp,
        points,
        CurveMeta {
            note: "linear program".into(),
            ..CurveMeta::default()
        },
    )
}

/// Replaces the rates of the converged points with their concave, monotone
/// envelope, computed in guessing-probability space (`F = 2^-f`):
/// the upper concave hull of `(L, F)` followed by a right-to-left running
/// maximum. Both steps can only raise `F`, i.e. lower the claimed rate, so
/// the envelope is a sound weakening that makes linear interpolation between
/// nodes valid.
pub fn apply_envelope(points: &mut [CurvePoint]) {
    let idx: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.converged)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 2 {
        return;
    }
    let ls: Vec<f64> = idx.iter().map(|&i| points[i].l).collect();
    let mut fs: Vec<f64> = idx.iter().map(|&i| (-points[i].f).exp2()).collect();

    // upper concave hull (monotone chain keeping clockwise turns)
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(ls.len());
    for i in 0..ls.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            if cross((ls[o], fs[o]), (ls[a], fs[a]), (ls[i], fs[i])) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    // evaluate the hull at every node (hull keeps >= 2 points when idx >= 2)
    let mut seg = 0;
    for i in 0..ls.len() {
        while seg + 2 < hull.len() && ls[hull[seg + 1]] < ls[i] {
            seg += 1;
        }
        let (a, b) = (hull[seg], hull[seg + 1]);
        let t = (ls[i] - ls[a]) / (ls[b] - ls[a]);
        fs[i] = fs[i].max(fs[a] + t * (fs[b] - fs[a]));
    }
    // right-to-left running maximum makes F non-increasing in L
    for i in (0..fs.len() - 1).rev() {
        fs[i] = fs[i].max(fs[i + 1]);
    }
    for (&i, &f_prob) in idx.iter().zip(fs.iter()) {
        points[i].f = (-f_prob.log2()).max(0.0);
    }
}

/// Writes curves as tab-separated text: a format comment, a header, then one
/// row per grid point. The `f_q` column is present only when a quantum curve
/// is supplied; both curves are evaluated at the given grid.
pub fn write_curve_tsv(
    path: &Path,
    grid: &[f64],
    ns: &EntropyCurve,
    quantum: Option<&EntropyCurve>,
) -> Result<(), BoundsError> {
    let mut out = String::new();
    out.push_str(&fileio::version_comment());
    out.push_str(if quantum.is_some() {
        "L\tf_ns\tf_q\n"
    } else {
        "L\tf_ns\n"
    });
    for &l in grid {
        let f_ns_val = ns.eval(l)?;
        match quantum {
            Some(q) => {
                let f_q_val = q.eval(l)?;
                out.push_str(&format!("{l}\t{f_ns_val}\t{f_q_val}\n"));
            }
            None => out.push_str(&format!("{l}\t{f_ns_val}\n")),
        }
    }
    fileio::atomic_write(path, out.as_bytes())?;
    Ok(())
}

/// Parsed contents of a curve file.
#[derive(Clone, Debug)]
pub struct CurveFile {
    pub grid: Vec<f64>,
    pub f_ns: Vec<f64>,
    pub f_q: Option<Vec<f64>>,
}

impl CurveFile {
    /// Converts the file into the curve certification should use: the
    /// quantum column when present (grid-interpolated), otherwise the
    /// no-signaling column, which is checked against the closed form before
    /// being trusted.
    pub fn into_curve(self) -> Result<EntropyCurve, BoundsError> {
        match self.f_q {
            Some(f_q) => {
                let points = self
                    .grid
                    .iter()
                    .zip(f_q.iter())
                    .map(|(&l, &f)| CurvePoint {
                        l,
                        f,
                        converged: true,
                    })
                    .collect();
                EntropyCurve::new(
                    CurveProvenance::QuantumReference,
                    points,
                    CurveMeta {
                        note: "imported from file".into(),
                        ..CurveMeta::default()
                    },
                )
            }
            None => {
                for (&l, &f) in self.grid.iter().zip(self.f_ns.iter()) {
                    let expected = f_ns(l)?;
                    if (f - expected).abs() > 1e-6 {
                        return Err(BoundsError::BadCurve(format!(
                            "no-signaling column disagrees with the closed form at L = {l}: \
                             file has {f}, expected {expected}"
                        )));
                    }
                }
                ns_analytic_curve(&self.grid)
            }
        }
    }
}

/// Reads a curve file written by [`write_curve_tsv`].
pub fn read_curve_tsv(path: &Path) -> Result<CurveFile, BoundsError> {
    let text = fileio::read_text(path)?;
    let lines = fileio::strip_version_comment(path, &text)?;
    let mut iter = lines.into_iter();
    let (header_line, header) = iter
        .next()
        .ok_or_else(|| IoFormatError::parse(path, 0, "empty curve file"))?;
    let has_quantum = match header.trim() {
        "L\tf_ns\tf_q" => true,
        "L\tf_ns" => false,
        other => {
            return Err(IoFormatError::parse(
                path,
                header_line,
                format!("unrecognized header {other:?}"),
            )
            .into())
        }
    };
    let mut grid = Vec::new();
    let mut f_ns_col = Vec::new();
    let mut f_q_col = Vec::new();
    for (lineno, line) in iter {
        let fields: Vec<&str> = line.split('\t').collect();
        let expected = if has_quantum { 3 } else { 2 };
        if fields.len() != expected {
            return Err(IoFormatError::parse(
                path,
                lineno,
                format!(
                    "expected {expected} tab-separated fields, got {}",
                    fields.len()
                ),
            )
            .into());
        }
        let parse = |field: &str, name: &str| -> Result<f64, BoundsError> {
            field.trim().parse::<f64>().map_err(|_| {
                IoFormatError::parse(path, lineno, format!("bad {name} value {field:?}")).into()
            })
        };
        grid.push(parse(fields[0], "L")?);
        f_ns_col.push(parse(fields[1], "f_ns")?);
        if has_quantum {
            f_q_col.push(parse(fields[2], "f_q")?);
        }
    }
    if grid.is_empty() {
        return Err(IoFormatError::parse(path, header_line, "curve file has no data rows").into());
    }
    Ok(CurveFile {
        grid,
        f_ns: f_ns_col,
        f_q: has_quantum.then_some(f_q_col),
    })
}
