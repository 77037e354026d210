//! Dense two-phase primal simplex for small equality-form LPs.
//!
//! Solves `max c.x  s.t.  A x = b, x >= 0` with Bland's anti-cycling rule.
//! The problems in this crate are tiny (tens of variables, about a dozen
//! rows), so the solver keeps a dense tableau and recomputes reduced costs
//! directly; the artificial-variable block of the tableau doubles as
//! `B^{-1}`, which yields the dual vector (and hence an optimality
//! certificate) for free.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error(
        "problem is infeasible: equality row {row} cannot be satisfied (residual {residual:.3e})"
    )]
    Infeasible { row: usize, residual: f64 },
    #[error("objective is unbounded along variable {var}")]
    Unbounded { var: usize },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("iteration limit reached (degenerate cycling?)")]
    IterationLimit,
}

/// Primal solution plus the dual certificate extracted from the final basis.
#[derive(Clone, Debug)]
pub struct SimplexSolution {
    /// Optimal primal point (length n).
    pub x: Vec<f64>,
    /// Optimal objective value `c.x`.
    pub objective: f64,
    /// Dual vector `y` (one multiplier per equality row, in the caller's
    /// original row orientation).
    pub duals: Vec<f64>,
    /// Reduced costs `c_j - y.A_j`; all `<= tol` at a maximum.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl SimplexSolution {
    /// Max primal equality violation `||A x - b||_inf`.
    pub fn primal_residual(&self, a: &[Vec<f64>], b: &[f64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(row, rhs)| {
                (row.iter()
                    .zip(self.x.iter())
                    .map(|(c, x)| c * x)
                    .sum::<f64>()
                    - rhs)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest positive reduced cost (dual infeasibility for a max problem).
    pub fn dual_infeasibility(&self) -> f64 {
        self.reduced_costs.iter().copied().fold(0.0, f64::max)
    }

    /// Duality gap `|c.x - y.b|`.
    pub fn duality_gap(&self, b: &[f64]) -> f64 {
        let yb: f64 = self.duals.iter().zip(b.iter()).map(|(y, b)| y * b).sum();
        (self.objective - yb).abs()
    }
}

const MAX_ITER: usize = 20_000;

/// Maximizes `c.x` subject to `A x = b`, `x >= 0`.
pub fn solve_max(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    tol: f64,
) -> Result<SimplexSolution, SimplexError> {
    let n = c.len();
    let m = b.len();
    if a.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(SimplexError::Dimensions(format!(
            "A must be {m} rows of length {n}"
        )));
    }

    // working tableau: n structural + m artificial columns, plus rhs;
    // rows are sign-flipped as needed so every rhs starts nonnegative
    let total = n + m;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    for (i, row) in a.iter().enumerate() {
        let sign = if b[i] < 0.0 {
            flipped[i] = true;
            -1.0
        } else {
            1.0
        };
        let mut trow = vec![0.0; total];
        for (j, v) in row.iter().enumerate() {
            trow[j] = sign * v;
        }
        trow[n + i] = 1.0;
        t.push(trow);
        rhs.push(sign * b[i]);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut iterations = 0usize;

    // cost vectors for the two phases
    let phase1_cost = |j: usize| if j >= n { -1.0 } else { 0.0 };
    let phase2_cost = |j: usize| if j < n { c[j] } else { 0.0 };

    // phase 1: drive artificials to zero
    run_phase(
        &mut t,
        &mut rhs,
        &mut basis,
        &mut iterations,
        tol,
        &phase1_cost,
        &|_| true,
    )?;
    let art_sum: f64 = basis
        .iter()
        .zip(rhs.iter())
        .filter(|(var, _)| **var >= n)
        .map(|(_, v)| v)
        .sum();
    if art_sum > tol.max(1e-9) {
        // the largest remaining artificial marks an unsatisfiable row
        let (row, residual) = basis
            .iter()
            .enumerate()
            .filter(|(_, var)| **var >= n)
            .map(|(i, var)| (var - n, rhs[i]))
            .fold(
                (0usize, 0.0f64),
                |acc, cur| if cur.1 > acc.1 { cur } else { acc },
            );
        return Err(SimplexError::Infeasible { row, residual });
    }
    // pivot lingering (zero-level) artificials out where a structural column
    // allows it; a row with no pivot candidate is redundant and harmless
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|j| !basis.contains(j) && t[i][*j].abs() > 1e-7) {
                pivot(&mut t, &mut rhs, i, j);
                basis[i] = j;
            }
        }
    }

    // phase 2: artificials are frozen out
    run_phase(
        &mut t,
        &mut rhs,
        &mut basis,
        &mut iterations,
        tol,
        &phase2_cost,
        &|j| j < n,
    )?;

    let mut x = vec![0.0; n];
    for (i, var) in basis.iter().enumerate() {
        if *var < n {
            x[*var] = rhs[i];
        }
    }
    let objective: f64 = c.iter().zip(x.iter()).map(|(c, x)| c * x).sum();
    // duals from the artificial block (y = c_B . B^{-1}), restored to the
    // caller's row orientation
    let mut duals = vec![0.0; m];
    for (col, dual) in duals.iter_mut().enumerate() {
        let y: f64 = (0..m).map(|i| phase2_cost(basis[i]) * t[i][n + col]).sum();
        *dual = if flipped[col] { -y } else { y };
    }
    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| {
            let ya: f64 = (0..m).map(|i| duals[i] * a[i][j]).sum();
            c[j] - ya
        })
        .collect();

    Ok(SimplexSolution {
        x,
        objective,
        duals,
        reduced_costs,
        iterations,
    })
}

/// One simplex phase: Bland's smallest-index entering rule, ratio test with
/// smallest-basic-index tie-break. `cost` prices every column (structural and
/// artificial); `allow` restricts which columns may enter.
fn run_phase(
    t: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    iterations: &mut usize,
    tol: f64,
    cost: &dyn Fn(usize) -> f64,
    allow: &dyn Fn(usize) -> bool,
) -> Result<(), SimplexError> {
    loop {
        *iterations += 1;
        if *iterations > MAX_ITER {
            return Err(SimplexError::IterationLimit);
        }
        // reduced cost r_j = c_j - c_B . T_j; Bland: first improving column
        let mut entering = None;
        for j in 0..t[0].len() {
            if !allow(j) || basis.contains(&j) {
                continue;
            }
            let zj: f64 = (0..t.len()).map(|i| cost(basis[i]) * t[i][j]).sum();
            if cost(j) - zj > tol {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else { return Ok(()) };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.len() {
            if t[i][e] > tol {
                let ratio = rhs[i] / t[i][e];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - 1e-12 || (ratio < lr + 1e-12 && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((l, _)) = leave else {
            return Err(SimplexError::Unbounded { var: e });
        };
        pivot(t, rhs, l, e);
        basis[l] = e;
    }
}

fn pivot(t: &mut [Vec<f64>], rhs: &mut [f64], l: usize, e: usize) {
    let scale = t[l][e];
    for v in t[l].iter_mut() {
        *v /= scale;
    }
    rhs[l] /= scale;
    let pivot_row = t[l].clone();
    for i in 0..t.len() {
        if i == l {
            continue;
        }
        let factor = t[i][e];
        if factor == 0.0 {
            continue;
        }
        for (v, pv) in t[i].iter_mut().zip(pivot_row.iter()) {
            *v -= factor * pv;
        }
        rhs[i] -= factor * rhs[l];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-10;

    #[test]
    fn solves_a_textbook_problem_with_certificate() {
        // max 3x1 + 2x2  s.t.  x1 + x2 + s1 = 4,  x1 + 3x2 + s2 = 6
        let c = vec![3.0, 2.0, 0.0, 0.0];
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let b = vec![4.0, 6.0];
        let sol = solve_max(&c, &a, &b, TOL).unwrap();
        assert_abs_diff_eq!(sol.objective, 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[0], 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], 0.0, epsilon = 1e-9);
        assert!(sol.primal_residual(&a, &b) < 1e-9);
        assert!(sol.dual_infeasibility() < 1e-9);
        assert!(sol.duality_gap(&b) < 1e-9);
    }

    #[test]
    fn detects_infeasibility_with_the_offending_row() {
        // x1 + x2 = 1 and x1 + x2 = 2 cannot both hold
        let c = vec![1.0, 1.0];
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 2.0];
        match solve_max(&c, &a, &b, TOL) {
            Err(SimplexError::Infeasible { residual, .. }) => {
                assert!(residual > 0.5, "residual should be about 1, got {residual}")
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility_from_negative_rhs() {
        // x1 + x2 = -1 has no nonnegative solution
        let c = vec![0.0, 0.0];
        let a = vec![vec![1.0, 1.0]];
        let b = vec![-1.0];
        assert!(matches!(
            solve_max(&c, &a, &b, TOL),
            Err(SimplexError::Infeasible { .. })
        ));
    }

    #[test]
    fn detects_unboundedness() {
        // x1 unconstrained above: max x1 s.t. x2 = 1
        let c = vec![1.0, 0.0];
        let a = vec![vec![0.0, 1.0]];
        let b = vec![1.0];
        assert!(matches!(
            solve_max(&c, &a, &b, TOL),
            Err(SimplexError::Unbounded { var: 0 })
        ));
    }

    #[test]
    fn handles_negative_rhs_by_row_flip() {
        // -x1 = -2  =>  x1 = 2
        let c = vec![-1.0, 0.0];
        let a = vec![vec![-1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![-2.0, 1.0];
        let sol = solve_max(&c, &a, &b, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 2.0, epsilon = 1e-9);
        assert!(
            sol.duality_gap(&b) < 1e-9,
            "duals must use original row signs"
        );
    }

    #[test]
    fn survives_a_degenerate_vertex() {
        // classic degeneracy: redundant constraint through the optimum
        let c = vec![1.0, 1.0, 0.0, 0.0, 0.0];
        let a = vec![
            vec![1.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0, 1.0],
        ];
        let b = vec![1.0, 1.0, 2.0];
        let sol = solve_max(&c, &a, &b, TOL).unwrap();
        assert_abs_diff_eq!(sol.objective, 2.0, epsilon = 1e-9);
        assert!(sol.dual_infeasibility() < 1e-9);
    }

    #[test]
    fn tolerates_redundant_equality_rows() {
        // second row is the first times 2
        let c = vec![1.0, 0.0];
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let b = vec![1.0, 2.0];
        let sol = solve_max(&c, &a, &b, TOL).unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-9);
        assert!(sol.primal_residual(&a, &b) < 1e-9);
    }
}
