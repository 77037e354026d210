//! Exact qutrit geometry for the five-observable pentagon experiment.
//!
//! The five measurement directions `|psi_i>` form a pentagram in real
//! 3-space: adjacent pairs (cyclically, 1-2-3-4-5-1) are exactly orthogonal,
//! so the projectors `P_i = |psi_i><psi_i|` of adjacent pairs commute and
//! can be measured jointly. With the reference state `|0>` every direction
//! has overlap `|<psi_i|0>|^2 = 1/sqrt(5)`, which maximizes the pentagon
//! witness at `4*sqrt(5) - 5`.
//!
//! Everything here is plain dense 3-dimensional linear algebra over
//! `Complex64`; the dimension never changes, so the types are fixed-size
//! arrays rather than a general matrix library.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Tolerance for state/operator validation (normalization, hermiticity,
/// unit trace).
pub const VALIDATION_TOL: f64 = 1e-9;

/// Errors from constructing or combining qutrit objects.
#[derive(Debug, Error)]
pub enum QutritError {
    #[error("vector is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { norm_sq: f64 },
    #[error("cannot normalize a (near-)zero vector (norm^2 = {norm_sq})")]
    ZeroVector { norm_sq: f64 },
    #[error("matrix is not Hermitian (max |M - M^dag| entry = {residual})")]
    NotHermitian { residual: f64 },
    #[error("density matrix trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("density matrix has negative eigenvalue {min_eigenvalue}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("({i},{j}) is not a compatible measurement context")]
    InvalidContext { i: u8, j: u8 },
    #[error("parameter {name} = {value} outside {expected}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

// ---------------------------------------------------------------------------
// Kets
// ---------------------------------------------------------------------------

/// A normalized complex 3-vector (pure qutrit state or measurement
/// direction).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ket3 {
    amp: [C64; 3],
}

impl Ket3 {
    /// Wraps components that are already normalized; errors if the squared
    /// norm deviates from 1 by more than [`VALIDATION_TOL`].
    pub fn new(amp: [C64; 3]) -> Result<Self, QutritError> {
        let norm_sq: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > VALIDATION_TOL {
            return Err(QutritError::NotNormalized { norm_sq });
        }
        Ok(Self { amp })
    }

    /// Rescales arbitrary components to unit norm; errors on a (near-)zero
    /// vector.
    pub fn normalized(amp: [C64; 3]) -> Result<Self, QutritError> {
        let norm_sq: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq < 1e-24 {
            return Err(QutritError::ZeroVector { norm_sq });
        }
        let inv = norm_sq.sqrt().recip();
        Ok(Self {
            amp: [amp[0] * inv, amp[1] * inv, amp[2] * inv],
        })
    }

    /// Builds a ket from real components (normalizing them).
    pub fn from_real(v: [f64; 3]) -> Result<Self, QutritError> {
        Self::normalized([
            C64::new(v[0], 0.0),
            C64::new(v[1], 0.0),
            C64::new(v[2], 0.0),
        ])
    }

    /// Computational basis state `|n>`, n in 0..3.
    pub fn basis(n: usize) -> Self {
        let mut amp = [C64::new(0.0, 0.0); 3];
        amp[n] = C64::new(1.0, 0.0);
        Self { amp }
    }

    pub fn components(&self) -> &[C64; 3] {
        &self.amp
    }

    /// Inner product `<self|other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &Ket3) -> C64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn overlap_sq(&self, other: &Ket3) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Rank-1 projector `|self><self|`.
    pub fn projector(&self) -> Mat3 {
        let mut m = Mat3::zero();
        for r in 0..3 {
            for c in 0..3 {
                m.m[r][c] = self.amp[r] * self.amp[c].conj();
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Dense 3x3 complex matrices
// ---------------------------------------------------------------------------

/// Dense 3x3 complex matrix. Only the handful of operations the toolkit
/// needs are implemented; the dimension is fixed so everything is
/// stack-allocated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub m: [[C64; 3]; 3],
}

impl Mat3 {
    pub fn zero() -> Self {
        Self {
            m: [[C64::new(0.0, 0.0); 3]; 3],
        }
    }

    pub fn identity() -> Self {
        let mut out = Self::zero();
        for d in 0..3 {
            out.m[d][d] = C64::new(1.0, 0.0);
        }
        out
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = self.m[r][c] + other.m[r][c];
            }
        }
        out
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = self.m[r][c] - other.m[r][c];
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += self.m[r][k] * other.m[k][c];
                }
                out.m[r][c] = acc;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = *self;
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] *= s;
            }
        }
        out
    }

    pub fn dagger(&self) -> Mat3 {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = self.m[c][r].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    /// Max entry of `M - M^dag`; zero for Hermitian matrices.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.dagger()).max_abs_entry()
    }

    /// Determinant (used for the characteristic polynomial of Hermitian
    /// matrices, where it is real up to round-off).
    pub fn det(&self) -> C64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Eigenvalues of a Hermitian matrix, ascending, by the closed-form
    /// (trigonometric) solution of the characteristic cubic.
    pub fn hermitian_eigenvalues(&self) -> [f64; 3] {
        // cyclic Jacobi: rotate each off-diagonal entry to zero in turn
        // until all vanish at machine precision. Unlike the closed-form
        // cubic, this stays accurate (absolute error ~1e-15 * scale) even
        // for repeated eigenvalues, which matters because the positivity
        // gate compares eigenvalues of rank-deficient states against 1e-10.
        let mut a = self.m;
        // fold any tiny anti-Hermitian noise away so diagonals stay real
        for i in 0..3 {
            for j in i..3 {
                let sym = (a[i][j] + a[j][i].conj()) * 0.5;
                a[i][j] = sym;
                a[j][i] = sym.conj();
            }
        }
        let scale = self.max_abs_entry().max(f64::MIN_POSITIVE);
        for _sweep in 0..50 {
            let off = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
            if off <= (scale * 1e-15) * (scale * 1e-15) {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let r = a[p][q].norm();
                if r <= scale * 1e-18 {
                    continue;
                }
                // make a[p][q] real by pushing its phase into row/column q
                let u = a[p][q] / r;
                for k in 0..3 {
                    a[k][q] *= u.conj();
                }
                for k in 0..3 {
                    a[q][k] *= u;
                }
                // classic real Jacobi rotation zeroing the (p, q) entry
                let tau = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = akp * c - akq * s;
                    a[k][q] = akp * s + akq * c;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = apk * c - aqk * s;
                    a[q][k] = apk * s + aqk * c;
                }
            }
        }
        let mut d = [a[0][0].re, a[1][1].re, a[2][2].re];
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        d
    }
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// A validated qutrit density matrix: Hermitian, unit trace, positive
/// semidefinite (eigenvalues above `-1e-10`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density3 {
    mat: Mat3,
}

impl Density3 {
    /// Validates and wraps an arbitrary matrix.
    pub fn from_matrix(mat: Mat3) -> Result<Self, QutritError> {
        let herm = mat.hermiticity_residual();
        if herm > VALIDATION_TOL {
            return Err(QutritError::NotHermitian { residual: herm });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > VALIDATION_TOL {
            return Err(QutritError::TraceNotOne { trace });
        }
        let eigs = mat.hermitian_eigenvalues();
        if eigs[0] < -1e-10 {
            return Err(QutritError::NotPositive {
                min_eigenvalue: eigs[0],
            });
        }
        Ok(Self { mat })
    }

    /// Pure state `|psi><psi|`.
    pub fn pure(psi: &Ket3) -> Self {
        Self {
            mat: psi.projector(),
        }
    }

    /// Maximally mixed state `I/3`.
    pub fn max_mixed() -> Self {
        Self {
            mat: Mat3::identity().scale(1.0 / 3.0),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.mat
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        self.mat.hermitian_eigenvalues()
    }
}

/// Isotropic depolarization `v*rho + (1-v)*I/3`; `v` must lie in [0, 1].
pub fn depolarize(rho: &Density3, v: f64) -> Result<Density3, QutritError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QutritError::ParamOutOfRange {
            name: "v",
            value: v,
            expected: "[0, 1]",
        });
    }
    let mat = rho
        .matrix()
        .scale(v)
        .add(&Mat3::identity().scale((1.0 - v) / 3.0));
    // construction preserves validity; bypassing re-validation would also be
    // fine, but the check is cheap and catches upstream corruption
    Density3::from_matrix(mat)
}

// ---------------------------------------------------------------------------
// Contexts
// ---------------------------------------------------------------------------

/// A compatible measurement pair `(A_i, A_j)`, one of the five cyclically
/// adjacent pentagon pairs `(1,2), (2,3), (3,4), (4,5), (1,5)`.
///
/// Observable labels are 1-based, matching the pentagon convention and the
/// `i,j` columns of the on-disk trial format. Pairs are canonically ordered:
/// `(2,1)` is rejected rather than silently swapped so that logs and tables
/// are unambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Context {
    i: u8,
    j: u8,
}

/// The five contexts in canonical order.
pub const CONTEXTS: [Context; 5] = [
    Context { i: 1, j: 2 },
    Context { i: 2, j: 3 },
    Context { i: 3, j: 4 },
    Context { i: 4, j: 5 },
    Context { i: 1, j: 5 },
];

impl Context {
    pub fn new(i: u8, j: u8) -> Result<Self, QutritError> {
        CONTEXTS
            .iter()
            .copied()
            .find(|c| c.i == i && c.j == j)
            .ok_or(QutritError::InvalidContext { i, j })
    }

    /// Position of this context in [`CONTEXTS`] (0..5).
    pub fn index(&self) -> usize {
        CONTEXTS
            .iter()
            .position(|c| c == self)
            .expect("constructed valid")
    }

    pub fn i(&self) -> u8 {
        self.i
    }

    pub fn j(&self) -> u8 {
        self.j
    }

    /// Which slot (if any) observable `obs` occupies in this context.
    pub fn slot_of(&self, obs: u8) -> Option<Slot> {
        if self.i == obs {
            Some(Slot::First)
        } else if self.j == obs {
            Some(Slot::Second)
        } else {
            None
        }
    }
}

impl std::fmt::Display for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(A{},A{})", self.i, self.j)
    }
}

/// Slot of an observable within a context (first = `i`, second = `j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    First,
    Second,
}

/// The two contexts containing observable `obs` (each observable appears in
/// exactly two pentagon contexts), with the slot it occupies in each.
pub fn contexts_of(obs: u8) -> Option<[(Context, Slot); 2]> {
    if !(1..=5).contains(&obs) {
        return None;
    }
    let mut found = Vec::with_capacity(2);
    for ctx in CONTEXTS {
        if let Some(slot) = ctx.slot_of(obs) {
            found.push((ctx, slot));
        }
    }
    debug_assert_eq!(found.len(), 2);
    Some([found[0], found[1]])
}

// ---------------------------------------------------------------------------
// Joint outcome distributions
// ---------------------------------------------------------------------------

/// Joint outcome distribution of one context: probabilities of the four
/// outcome pairs `(a_i, a_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl JointDist {
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self, QutritError> {
        let d = Self { p11, p10, p01, p00 };
        for (name, v) in [("p11", p11), ("p10", p10), ("p01", p01), ("p00", p00)] {
            if !(-(VALIDATION_TOL)..=1.0 + VALIDATION_TOL).contains(&v) || !v.is_finite() {
                return Err(QutritError::ParamOutOfRange {
                    name: match name {
                        "p11" => "p11",
                        "p10" => "p10",
                        "p01" => "p01",
                        _ => "p00",
                    },
                    value: v,
                    expected: "[0, 1]",
                });
            }
        }
        let sum = d.sum();
        if (sum - 1.0).abs() > VALIDATION_TOL {
            return Err(QutritError::TraceNotOne { trace: sum });
        }
        Ok(d)
    }

    pub fn sum(&self) -> f64 {
        self.p11 + self.p10 + self.p01 + self.p00
    }

    /// `P(a_i != a_j) - P(a_i = a_j)`, the per-context witness term.
    pub fn neq_minus_eq(&self) -> f64 {
        self.p10 + self.p01 - self.p11 - self.p00
    }

    /// Probability of outcome pair `(a, b)`.
    pub fn prob(&self, a: u8, b: u8) -> f64 {
        match (a, b) {
            (1, 1) => self.p11,
            (1, 0) => self.p10,
            (0, 1) => self.p01,
            _ => self.p00,
        }
    }
}

// ---------------------------------------------------------------------------
// The pentagon geometry
// ---------------------------------------------------------------------------

/// The five pentagram measurement directions.
///
/// All components are real. Adjacent directions are exactly orthogonal and
/// every direction has `|<psi_i|0>|^2 = 1/sqrt(5)`; both identities hold at
/// the level of the underlying trigonometric expressions, so in `f64` they
/// are satisfied to round-off.
pub fn kcbs_vectors() -> [Ket3; 5] {
    use std::f64::consts::PI;
    let alpha = (5f64.sqrt() / 5.0).sqrt(); // 5^(-1/4)
    let half_sqrt2 = std::f64::consts::SQRT_2 / 2.0;
    let beta1 = -half_sqrt2 / (PI / 10.0).cos(); // -(sqrt(2)/2) * sec(pi/10)
    let beta2 = -beta1 * (PI / 5.0).cos();
    let beta34 = -half_sqrt2 * (PI / 10.0).tan();
    let gamma2 = beta1 * (PI / 5.0).sin();
    let k = |b: f64, g: f64| {
        Ket3::new([C64::new(alpha, 0.0), C64::new(b, 0.0), C64::new(g, 0.0)])
            .expect("pentagram components are normalized by construction")
    };
    [
        k(beta1, 0.0),
        k(beta2, gamma2),
        k(beta34, half_sqrt2),
        k(beta34, -half_sqrt2),
        k(beta2, -gamma2),
    ]
}

/// The reference state `|0>` that maximizes the witness.
pub fn reference_state() -> Density3 {
    Density3::pure(&Ket3::basis(0))
}

/// Observable `A_i = 2|psi_i><psi_i| - I` for a measurement direction.
pub fn observable(direction: &Ket3) -> Mat3 {
    direction.projector().scale(2.0).sub(&Mat3::identity())
}

/// Joint outcome distribution of a sequential (projective) measurement of
/// the context's two directions on `rho`.
///
/// The two projectors commute exactly for the pentagram directions, so the
/// measurement order is immaterial; the sequential form below stays
/// well-defined even for slightly perturbed directions.
pub fn joint_probs(
    rho: &Density3,
    ctx: Context,
    vectors: &[Ket3; 5],
) -> Result<JointDist, QutritError> {
    let pi = vectors[(ctx.i() - 1) as usize].projector();
    let pj = vectors[(ctx.j() - 1) as usize].projector();
    let qi = Mat3::identity().sub(&pi);

    let e1 = pi.mul(rho.matrix()).mul(&pi); // branch a_i = 1
    let e0 = qi.mul(rho.matrix()).mul(&qi); // branch a_i = 0

    let t1 = e1.trace().re;
    let t0 = e0.trace().re;
    let p11 = e1.mul(&pj).trace().re;
    let p01 = e0.mul(&pj).trace().re;

    let clamp = |x: f64| if x.abs() < 1e-14 { 0.0 } else { x };
    JointDist::new(clamp(p11), clamp(t1 - p11), clamp(p01), clamp(t0 - p01))
}

/// The pentagon witness value `L = sum over contexts of
/// [P(a_i != a_j) - P(a_i = a_j)]` for a state and a set of directions.
pub fn kcbs_value(rho: &Density3, vectors: &[Ket3; 5]) -> Result<f64, QutritError> {
    let mut total = 0.0;
    for ctx in CONTEXTS {
        total += joint_probs(rho, ctx, vectors)?.neq_minus_eq();
    }
    Ok(total)
}

/// Max-entry residual of `[A_i, A_j]` for observables built from the given
/// directions; adjacent pentagon pairs give round-off-sized values.
pub fn commutation_residual(i: u8, j: u8, vectors: &[Ket3; 5]) -> Result<f64, QutritError> {
    for (name, v) in [("i", i), ("j", j)] {
        if !(1..=5).contains(&v) {
            return Err(QutritError::ParamOutOfRange {
                name,
                value: v as f64,
                expected: "1..=5",
            });
        }
    }
    let ai = observable(&vectors[(i - 1) as usize]);
    let aj = observable(&vectors[(j - 1) as usize]);
    Ok(ai.mul(&aj).sub(&aj.mul(&ai)).max_abs_entry())
}

/// Measurement directions realized by the three-wave-plate analyzer.
///
/// `theta1`, `theta2`, `theta3` are the physical plate angles in degrees.
/// The returned pair `(d1, d2)` is the projection direction of the first
/// and second detector; the construction makes them orthogonal for every
/// angle triple.
pub fn hwp_projectors(theta1: f64, theta2: f64, theta3: f64) -> (Ket3, Ket3) {
    let t1 = 2.0 * theta1.to_radians();
    let t2 = 2.0 * theta2.to_radians();
    let t3 = 2.0 * theta3.to_radians();
    let d1 = Ket3::from_real([t2.cos(), -t2.sin() * t1.cos(), -t2.sin() * t1.sin()])
        .expect("unit by construction");
    let d2 = Ket3::from_real([
        t3.cos() * t2.sin(),
        t3.cos() * t2.cos() * t1.cos() - t3.sin() * t1.sin(),
        t3.cos() * t2.cos() * t1.sin() + t3.sin() * t1.cos(),
    ])
    .expect("unit by construction");
    (d1, d2)
}

/// The five plate-angle triples `(theta1, theta2, theta3)` in degrees and
/// the observables `(first detector, second detector)` each row realizes.
pub const HWP_TABLE: [([f64; 3], (u8, u8)); 5] = [
    ([0.0, 24.0, -12.95], (1, 2)),
    ([144.0, 24.0, 12.95], (3, 2)),
    ([144.0, 24.0, -12.95], (3, 4)),
    ([108.0, 24.0, 12.95], (5, 4)),
    ([108.0, 24.0, -12.95], (5, 1)),
];
