//! Quantum reference curve: best guessing probability over explicit
//! three-dimensional realizations at a fixed witness value.
//!
//! A realization is five pentagon-orthogonal unit directions and a state.
//! Both the witness and the guessing probability are linear in the state, so
//! an extreme (pure) state is optimal and the search may fix the state to
//! `|0>` and move the directions instead. Directions are parametrized by a
//! five-angle chain that bakes in every orthogonality constraint, leaving the
//! witness target as the only equality — handled by a penalty schedule around
//! a derivative-free simplex descent with multiple starts per grid node.
//!
//! The resulting curve is a *feasible-point* (upper) bound on the adversary's
//! power, suitable for reproducing reference numbers; sound certification
//! should default to the no-signaling curve.

use crate::bounds::{
    apply_envelope, BoundsError, CurveMeta, CurvePoint, CurveProvenance, EntropyCurve,
};
use crate::qutrit::{joint_probs, Context, Density3, Ket3, CONTEXTS};
use crate::rng;
use crate::{L_CLASSICAL, L_Q};
use rand::Rng as _;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Adjacent pentagon pairs as zero-based index pairs.
const CTX_PAIRS: [(usize, usize); 5] = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)];

/// A concrete dimension-3 realization: five pentagon-orthogonal unit
/// directions and a state.
#[derive(Clone, Debug)]
pub struct Realization3 {
    pub vectors: [Ket3; 5],
    pub state: Density3,
    /// Chain angles that generated the directions, when built by the search.
    pub chain_params: Option<[f64; 5]>,
}

impl Realization3 {
    /// Validates pentagon orthogonality: adjacent directions must satisfy
    /// `|<psi_i|psi_j>| <= 1e-9`.
    pub fn new(vectors: [Ket3; 5], state: Density3) -> Result<Self, BoundsError> {
        for &(i, j) in &CTX_PAIRS {
            let overlap = vectors[i].inner(&vectors[j]).norm();
            if overlap > 1e-9 {
                return Err(BoundsError::BadParameter(format!(
                    "directions {} and {} are not orthogonal: |<i|j>| = {overlap:.3e}",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Realization3 {
            vectors,
            state,
            chain_params: None,
        })
    }

    /// Builds the realization for a chain-angle parameter vector, with the
    /// state fixed to the reference direction `|0>`.
    pub fn from_chain_params(params: &[f64; 5]) -> Result<Self, BoundsError> {
        let reals = chain_vectors(params).ok_or_else(|| {
            BoundsError::SearchFailed(format!(
                "degenerate chain: psi4 parallel to psi1 at params {params:?}"
            ))
        })?;
        let mut vectors = Vec::with_capacity(5);
        for v in reals {
            vectors.push(Ket3::from_real(v)?);
        }
        let vectors: [Ket3; 5] = vectors.try_into().expect("five directions");
        let mut realization = Realization3::new(vectors, Density3::pure(&Ket3::basis(0)))?;
        realization.chain_params = Some(*params);
        Ok(realization)
    }

    /// Witness value of this realization, recomputed from the full
    /// sequential-measurement distributions (independent of the fast path
    /// used inside the optimizer).
    pub fn witness_value(&self) -> Result<f64, BoundsError> {
        Ok(crate::qutrit::kcbs_value(&self.state, &self.vectors)?)
    }

    /// Maximum outcome probability over all five contexts and four outcome
    /// pairs, with its argmax. Ties within 1e-12 (outcomes that agree
    /// exactly in principle can differ by an ulp through the sequential
    /// computation) break toward the lowest context index, then the outcome
    /// order (11, 10, 01, 00).
    pub fn guessing_prob(&self) -> Result<(f64, Context, (u8, u8)), BoundsError> {
        const TIE_TOL: f64 = 1e-12;
        let mut candidates = Vec::with_capacity(20);
        for ctx in CONTEXTS {
            let dist = joint_probs(&self.state, ctx, &self.vectors)?;
            for outcome in [(1u8, 1u8), (1, 0), (0, 1), (0, 0)] {
                candidates.push((dist.prob(outcome.0, outcome.1), ctx, outcome));
            }
        }
        let max = candidates
            .iter()
            .map(|c| c.0)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(candidates
            .into_iter()
            .find(|c| c.0 >= max - TIE_TOL)
            .expect("five contexts scanned"))
    }
}

// ---- real 3-vector helpers for the search hot path ----

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: V3) -> Option<V3> {
    let n = dot(v, v).sqrt();
    if n < 1e-12 {
        return None;
    }
    Some([v[0] / n, v[1] / n, v[2] / n])
}

fn combine(a: V3, ca: f64, b: V3, cb: f64) -> V3 {
    [
        ca * a[0] + cb * b[0],
        ca * a[1] + cb * b[1],
        ca * a[2] + cb * b[2],
    ]
}

/// Five real unit vectors from chain angles `[theta, phi, a2, a3, a4]`.
/// Every cyclically adjacent pair is orthogonal by construction; the only
/// degenerate case (psi4 parallel to psi1, so psi5 is undefined) returns
/// `None`.
fn chain_vectors(params: &[f64; 5]) -> Option<[V3; 5]> {
    let [theta, phi, a2, a3, a4] = *params;
    let psi1 = [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ];
    // a perpendicular frame for psi1; the branch keeps the cross product
    // well-conditioned for every direction of psi1
    let reference = if psi1[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize(cross(psi1, reference))?;
    let v = cross(psi1, u);
    let psi2 = combine(u, a2.cos(), v, a2.sin());
    let w = cross(psi2, psi1);
    let psi3 = combine(psi1, a3.cos(), w, a3.sin());
    let c = cross(psi3, psi2);
    let psi4 = combine(psi2, a4.cos(), c, a4.sin());
    let psi5 = normalize(cross(psi4, psi1))?;
    Some([psi1, psi2, psi3, psi4, psi5])
}

/// Fast objective ingredients for a parameter vector: the guessing
/// probability and the witness value of the chain realization with state
/// `|0>`. Exploits `P(11) = 0` under exact orthogonality, which collapses the
/// witness to `4 * sum(p_i) - 5` with `p_i = <psi_i|0>^2`.
fn evaluate(params: &[f64; 5]) -> Option<(f64, f64)> {
    let vecs = chain_vectors(params)?;
    let p: Vec<f64> = vecs.iter().map(|v| v[0] * v[0]).collect();
    let l = 4.0 * p.iter().sum::<f64>() - 5.0;
    let mut guess: f64 = 0.0;
    for &(i, j) in &CTX_PAIRS {
        guess = guess.max(p[i]).max(p[j]).max((1.0 - p[i] - p[j]).max(0.0));
    }
    Some((guess, l))
}

/// Chain angles that reproduce the pentagram directions (so the search can
/// start from the known optimum at the quantum maximum).
pub fn pentagram_params() -> [f64; 5] {
    let kcbs = crate::qutrit::kcbs_vectors();
    let target: Vec<V3> = kcbs
        .iter()
        .map(|k| {
            let c = k.components();
            [c[0].re, c[1].re, c[2].re]
        })
        .collect();
    invert_chain([target[0], target[1], target[2], target[3], target[4]])
}

/// Chain angles of a folded configuration attaining the classical boundary
/// exactly: psi3 = psi1 = |0> gives L = 3 with a deterministic outcome.
pub fn folded_params() -> [f64; 5] {
    [FRAC_PI_2, 0.0, 0.0, 0.0, FRAC_PI_4]
}

/// Recovers chain angles from explicit directions by mirroring the chain
/// construction step by step.
fn invert_chain(target: [V3; 5]) -> [f64; 5] {
    let psi1 = target[0];
    let theta = psi1[2].clamp(-1.0, 1.0).acos();
    let phi = psi1[1].atan2(psi1[0]);
    let p1 = [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ];
    let reference = if p1[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize(cross(p1, reference)).expect("branch rule keeps the frame nondegenerate");
    let v = cross(p1, u);
    let a2 = dot(target[1], v).atan2(dot(target[1], u));
    let p2 = combine(u, a2.cos(), v, a2.sin());
    let w = cross(p2, p1);
    let a3 = dot(target[2], w).atan2(dot(target[2], p1));
    let p3 = combine(p1, a3.cos(), w, a3.sin());
    let c = cross(p3, p2);
    let a4 = dot(target[3], c).atan2(dot(target[3], p2));
    [theta, phi, a2, a3, a4]
}

// ---- derivative-free local search ----

/// Nelder-Mead simplex descent on a 5-dimensional objective. Returns the
/// best point found; standard coefficients (reflect 1, expand 2, contract
/// 0.5, shrink 0.5).
fn nelder_mead(
    f: &dyn Fn(&[f64; 5]) -> f64,
    start: [f64; 5],
    step: f64,
    max_iter: usize,
    ftol: f64,
) -> [f64; 5] {
    const DIM: usize = 5;
    let mut pts: Vec<[f64; 5]> = Vec::with_capacity(DIM + 1);
    pts.push(start);
    for d in 0..DIM {
        let mut p = start;
        p[d] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(f).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=DIM).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let sorted_pts: Vec<[f64; 5]> = order.iter().map(|&i| pts[i]).collect();
        let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        pts = sorted_pts;
        vals = sorted_vals;
        if vals[DIM] - vals[0] < ftol {
            break;
        }

        let mut centroid = [0.0; DIM];
        for p in &pts[..DIM] {
            for d in 0..DIM {
                centroid[d] += p[d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= DIM as f64;
        }
        let worst = pts[DIM];
        let towards = |coeff: f64| {
            let mut r = [0.0; DIM];
            for d in 0..DIM {
                r[d] = centroid[d] + coeff * (centroid[d] - worst[d]);
            }
            r
        };

        let xr = towards(1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = towards(2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[DIM] = xe;
                vals[DIM] = fe;
            } else {
                pts[DIM] = xr;
                vals[DIM] = fr;
            }
        } else if fr < vals[DIM - 1] {
            pts[DIM] = xr;
            vals[DIM] = fr;
        } else {
            // contract outside when the reflection helped, inside otherwise
            let xc = if fr < vals[DIM] {
                towards(0.5)
            } else {
                towards(-0.5)
            };
            let fc = f(&xc);
            if fc < fr.min(vals[DIM]) {
                pts[DIM] = xc;
                vals[DIM] = fc;
            } else {
                let best = pts[0];
                for i in 1..=DIM {
                    for d in 0..DIM {
                        pts[i][d] = best[d] + 0.5 * (pts[i][d] - best[d]);
                    }
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }

    let mut bi = 0;
    for i in 1..=DIM {
        if vals[i] < vals[bi] {
            bi = i;
        }
    }
    pts[bi]
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    params: [f64; 5],
    guess: f64,
    residual: f64,
}

/// One start: penalty-weight ladder around Nelder-Mead, keeping the best
/// parameter vector whose witness value lands within `tol` of the target.
fn optimize_start(target: f64, start: [f64; 5], tol: f64) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let mut consider = |params: [f64; 5]| {
        if let Some((guess, l)) = evaluate(&params) {
            let residual = (l - target).abs();
            if residual <= tol && best.as_ref().map_or(true, |b| guess > b.guess) {
                best = Some(Candidate {
                    params,
                    guess,
                    residual,
                });
            }
        }
    };

    consider(start);
    let mut x = start;
    let mut weight = 1e2;
    let mut step = 0.35;
    for _stage in 0..7 {
        let obj = move |p: &[f64; 5]| match evaluate(p) {
            Some((guess, l)) => -guess + weight * (l - target) * (l - target),
            None => 1e6,
        };
        x = nelder_mead(&obj, x, step, 600, 1e-13);
        consider(x);
        weight *= 10.0;
        step = (step * 0.5).max(2e-3);
    }
    best
}

/// Search configuration for [`quantum_curve`].
#[derive(Clone, Copy, Debug)]
pub struct QuantumCurveOptions {
    /// Random starts per grid node, on top of the built-in structured starts
    /// (previous node's optimum, folded boundary, pentagram). At least 1.
    pub restarts: u32,
    pub seed: u64,
    /// Acceptance threshold on `|L - target|` for a candidate realization.
    pub residual_tol: f64,
}

impl Default for QuantumCurveOptions {
    fn default() -> Self {
        QuantumCurveOptions {
            restarts: 100,
            seed: 1,
            residual_tol: 1e-6,
        }
    }
}

/// Raw search output at one grid node.
#[derive(Clone, Debug)]
pub struct QuantumNode {
    pub l_target: f64,
    /// Best guessing probability found (before envelope post-processing).
    pub p_star: f64,
    /// Witness residual `|L - target|` of the winning realization.
    pub residual: f64,
    pub converged: bool,
    pub realization: Option<Realization3>,
}

/// A quantum reference curve plus the per-node search evidence behind it.
#[derive(Clone, Debug)]
pub struct QuantumCurve {
    /// Envelope-processed rate curve (provenance `quantum_reference`).
    pub curve: EntropyCurve,
    pub nodes: Vec<QuantumNode>,
}

/// Searches the best guessing probability at every grid node and packages
/// the rates into an [`EntropyCurve`] after the concave monotone envelope.
///
/// Restarts run concurrently; every restart draws from its own RNG
/// sub-stream keyed by (node, restart), and the winner is picked by a
/// deterministic reduction, so results do not depend on thread scheduling.
/// Nodes failing to converge are flagged and skipped by the envelope.
pub fn quantum_curve(
    grid: &[f64],
    opts: &QuantumCurveOptions,
) -> Result<QuantumCurve, BoundsError> {
    if grid.is_empty() {
        return Err(BoundsError::BadParameter("empty grid".into()));
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(BoundsError::BadParameter(format!(
                "grid must be strictly ascending, saw {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    for &l in grid {
        if !(L_CLASSICAL - 1e-9..=L_Q + 1e-9).contains(&l) {
            return Err(BoundsError::BadParameter(format!(
                "grid point {l} outside [3, 4*sqrt(5)-5]"
            )));
        }
    }
    if opts.restarts < 1 {
        return Err(BoundsError::BadParameter(
            "at least one random restart per node is required".into(),
        ));
    }
    if !opts.residual_tol.is_finite() || opts.residual_tol <= 0.0 {
        return Err(BoundsError::BadParameter(
            "residual tolerance must be positive and finite".into(),
        ));
    }

    let mut nodes: Vec<QuantumNode> = Vec::with_capacity(grid.len());
    let mut warm: Option<[f64; 5]> = None;
    for (ni, &l) in grid.iter().enumerate() {
        let target = l.clamp(L_CLASSICAL, L_Q);
        let mut starts: Vec<[f64; 5]> = Vec::with_capacity(opts.restarts as usize + 3);
        if let Some(w) = warm {
            starts.push(w);
        }
        starts.push(folded_params());
        starts.push(pentagram_params());
        for r in 0..opts.restarts {
            let mut stream = rng::substream(
                opts.seed,
                "quantum-curve",
                ((ni as u64) << 32) | u64::from(r),
            );
            starts.push(random_params(&mut stream));
        }

        let candidates: Vec<Option<Candidate>> = starts
            .par_iter()
            .map(|s| optimize_start(target, *s, opts.residual_tol))
            .collect();
        // deterministic reduction: strictly-better wins, earliest start on ties
        let best = candidates
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<Candidate>, cur| match acc {
                None => Some(cur),
                Some(a) if cur.guess > a.guess => Some(cur),
                keep => keep,
            });

        match best {
            Some(c) => {
                warm = Some(c.params);
                nodes.push(QuantumNode {
                    l_target: l,
                    p_star: c.guess.min(1.0),
                    residual: c.residual,
                    converged: true,
                    realization: Some(Realization3::from_chain_params(&c.params)?),
                });
            }
            None => nodes.push(QuantumNode {
                l_target: l,
                p_star: f64::NAN,
                residual: f64::INFINITY,
                converged: false,
                realization: None,
            }),
        }
    }

    let mut points: Vec<CurvePoint> = nodes
        .iter()
        .map(|n| CurvePoint {
            l: n.l_target,
            f: if n.converged {
                (-n.p_star.log2()).max(0.0)
            } else {
                f64::NAN
            },
            converged: n.converged,
        })
        .collect();
    apply_envelope(&mut points);

    let curve = EntropyCurve::new(
        CurveProvenance::QuantumReference,
        points,
        CurveMeta {
            restarts: opts.restarts,
            seed: Some(opts.seed),
            residual_tolerance: opts.residual_tol,
            note: "rank-one qutrit chain search".into(),
        },
    )
    .map_err(|e| match e {
        BoundsError::BadCurve(msg) if msg.contains("no converged") => {
            BoundsError::SearchFailed("no grid node converged".into())
        }
        other => other,
    })?;
    Ok(QuantumCurve { curve, nodes })
}

fn random_params(stream: &mut rng::Rng) -> [f64; 5] {
    // psi1 uniform on the sphere; chain angles uniform on the circle
    let theta = (1.0 - 2.0 * stream.gen::<f64>()).clamp(-1.0, 1.0).acos();
    [
        theta,
        stream.gen_range(-PI..PI),
        stream.gen_range(-PI..PI),
        stream.gen_range(-PI..PI),
        stream.gen_range(-PI..PI),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::f_ns;
    use crate::qutrit::kcbs_vectors;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pentagram_parameters_rebuild_the_reference_directions() {
        let rebuilt = chain_vectors(&pentagram_params()).unwrap();
        let kcbs = kcbs_vectors();
        for (i, v) in rebuilt.iter().enumerate() {
            let ket = Ket3::from_real(*v).unwrap();
            // psi5 is determined only up to sign, so compare |<a|b>|
            assert_abs_diff_eq!(ket.inner(&kcbs[i]).norm(), 1.0, epsilon = 1e-12);
        }
        let (guess, l) = evaluate(&pentagram_params()).unwrap();
        assert_abs_diff_eq!(l, crate::L_Q, epsilon = 1e-12);
        assert_abs_diff_eq!(guess, 0.4472135954999579, epsilon = 1e-12);
    }

    #[test]
    fn folded_parameters_reach_the_classical_boundary_exactly() {
        let (guess, l) = evaluate(&folded_params()).unwrap();
        assert_abs_diff_eq!(l, 3.0, epsilon = 1e-15);
        assert_eq!(guess, 1.0, "psi3 = psi1 = |0> answers deterministically");
    }

    #[test]
    fn chain_vectors_are_cyclically_orthogonal_unit_vectors() {
        let mut stream = rng::substream(7, "chain-orthogonality", 0);
        for _ in 0..50 {
            let params = random_params(&mut stream);
            let vecs = chain_vectors(&params).unwrap();
            for v in &vecs {
                assert_abs_diff_eq!(dot(*v, *v), 1.0, epsilon = 1e-12);
            }
            for &(i, j) in &CTX_PAIRS {
                assert!(
                    dot(vecs[i], vecs[j]).abs() < 1e-12,
                    "pair ({i},{j}) not orthogonal for params {params:?}"
                );
            }
        }
    }

    #[test]
    fn witness_fast_path_agrees_with_the_density_matrix_route() {
        let mut stream = rng::substream(11, "witness-consistency", 0);
        for _ in 0..20 {
            let params = random_params(&mut stream);
            let (_, l_fast) = evaluate(&params).unwrap();
            let realization = Realization3::from_chain_params(&params).unwrap();
            let l_full = realization.witness_value().unwrap();
            assert_abs_diff_eq!(l_fast, l_full, epsilon = 1e-10);
        }
    }

    #[test]
    fn ideal_realization_guessing_probability_and_argmax() {
        let realization =
            Realization3::new(kcbs_vectors(), crate::qutrit::reference_state()).unwrap();
        let (p, ctx, outcome) = realization.guessing_prob().unwrap();
        assert_abs_diff_eq!(p, 0.4472135954999579, epsilon = 1e-12);
        // outcomes 10 and 01 tie; ties resolve to the earliest context and
        // the outcome order (11, 10, 01, 00)
        assert_eq!(ctx.index(), 0);
        assert_eq!(outcome, (1, 0));
    }

    #[test]
    fn mixed_state_guessing_probability_is_one_third() {
        let realization = Realization3::new(kcbs_vectors(), Density3::max_mixed()).unwrap();
        let (p, _, _) = realization.guessing_prob().unwrap();
        assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn non_orthogonal_directions_are_rejected() {
        let mut vectors = kcbs_vectors();
        vectors[1] = vectors[0];
        assert!(Realization3::new(vectors, Density3::max_mixed()).is_err());
    }

    #[test]
    fn small_curve_matches_frozen_reference_rates() {
        // frozen via an independent constrained-optimization run:
        // P*(3.944) = 0.456520 (f = 1.1312508); P*(L_q) = 1/sqrt(5)
        let grid = [3.0, 3.944, crate::L_Q];
        let opts = QuantumCurveOptions {
            restarts: 40,
            seed: 1,
            residual_tol: 1e-6,
        };
        let qc = quantum_curve(&grid, &opts).unwrap();
        assert!(qc.nodes.iter().all(|n| n.converged));
        let f0 = qc.curve.eval(3.0).unwrap();
        let f_near = qc.curve.eval(3.944).unwrap();
        let f_max = qc.curve.eval(crate::L_Q).unwrap();
        assert_abs_diff_eq!(f0, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f_near, 1.1312508, epsilon = 5e-3);
        assert_abs_diff_eq!(f_max, 1.16096404744, epsilon = 2e-3);
        // rates grow with the witness value and dominate the no-signaling rate
        assert!(f0 <= f_near && f_near <= f_max);
        for &l in &grid {
            assert!(f_ns(l).unwrap() <= qc.curve.eval(l).unwrap() + 1e-6);
        }
        // every winning realization reproduces its target witness value
        for node in &qc.nodes {
            let l = node.realization.as_ref().unwrap().witness_value().unwrap();
            assert!((l - node.l_target).abs() < 1e-6);
        }
    }

    #[test]
    fn curve_search_is_deterministic_for_a_fixed_seed() {
        let grid = [3.0, 3.9];
        let opts = QuantumCurveOptions {
            restarts: 6,
            seed: 42,
            residual_tol: 1e-6,
        };
        let a = quantum_curve(&grid, &opts).unwrap();
        let b = quantum_curve(&grid, &opts).unwrap();
        for (na, nb) in a.nodes.iter().zip(b.nodes.iter()) {
            assert_eq!(na.p_star.to_bits(), nb.p_star.to_bits());
        }
    }

    #[test]
    fn impossible_residual_tolerance_reports_search_failure() {
        let grid = [3.2, 3.5];
        let opts = QuantumCurveOptions {
            restarts: 1,
            seed: 1,
            residual_tol: 1e-300,
        };
        assert!(matches!(
            quantum_curve(&grid, &opts),
            Err(BoundsError::SearchFailed(_))
        ));
    }

    #[test]
    fn invalid_grids_and_options_are_rejected() {
        let opts = QuantumCurveOptions::default();
        assert!(quantum_curve(&[], &opts).is_err());
        assert!(quantum_curve(&[3.5, 3.2], &opts).is_err());
        assert!(quantum_curve(&[2.0, 3.5], &opts).is_err());
        let no_restarts = QuantumCurveOptions {
            restarts: 0,
            ..QuantumCurveOptions::default()
        };
        assert!(quantum_curve(&[3.0, 3.5], &no_restarts).is_err());
    }
}
