//! No-signaling linear program for the five-context pentagon scenario.
//!
//! A behaviour is a joint distribution per measurement context (20 variables,
//! four outcomes in each of the five contexts) constrained by normalization,
//! equality of each observable's marginal across its two home contexts, and a
//! fixed witness value L. Maximizing any single outcome probability over this
//! polytope gives the adversary's guessing probability under no-signaling
//! alone; this module builds the LP, solves it with the in-crate simplex, and
//! returns the optimality certificate alongside the optimizer.

use crate::bounds::simplex::{self, SimplexError};
use crate::bounds::BoundsError;
use crate::qutrit::{contexts_of, Context, JointDist, Slot, CONTEXTS};

/// Number of LP variables: five contexts times four outcomes.
pub const NS_VARS: usize = 20;
/// Number of equality rows: 5 normalization + 5 marginal-consistency + 1 witness.
pub const NS_ROWS: usize = 11;

/// Column index of outcome `(a, b)` in context block `ctx_idx`.
///
/// Outcome order inside a block is (11, 10, 01, 00), matching [`JointDist`].
fn var_index(ctx_idx: usize, a: u8, b: u8) -> usize {
    let offset = match (a, b) {
        (1, 1) => 0,
        (1, 0) => 1,
        (0, 1) => 2,
        _ => 3,
    };
    4 * ctx_idx + offset
}

/// Equality-form LP `A x = b, x >= 0` describing all no-signaling behaviours
/// with witness value `l`.
pub struct NsLpProblem {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    row_names: Vec<String>,
}

/// Solution of one objective over the no-signaling polytope, with the
/// certificate quantities needed to check optimality independently.
#[derive(Clone, Debug)]
pub struct NsLpSolution {
    /// Optimal value of the objective (an outcome probability).
    pub p_star: f64,
    /// Optimizing behaviour as five per-context joint distributions.
    pub table: [JointDist; 5],
    /// Dual multipliers, one per equality row.
    pub duals: Vec<f64>,
    /// `c_j - y.A_j` per variable; all nonpositive (up to tolerance) at a max.
    pub reduced_costs: Vec<f64>,
    /// `||A x - b||_inf` at the reported optimizer.
    pub primal_residual: f64,
    /// Largest positive reduced cost.
    pub dual_infeasibility: f64,
    /// `|c.x - y.b|`.
    pub duality_gap: f64,
    pub iterations: usize,
}

/// Result of maximizing over all twenty outcome probabilities.
#[derive(Clone, Debug)]
pub struct NsGuessing {
    pub p_star: f64,
    pub context: Context,
    pub outcome: (u8, u8),
    pub solution: NsLpSolution,
}

const LP_TOL: f64 = 1e-10;

impl NsLpProblem {
    pub fn new(l: f64) -> Result<Self, BoundsError> {
        if !l.is_finite() {
            return Err(BoundsError::BadParameter(format!(
                "witness value must be finite, got {l}"
            )));
        }
        let mut a = vec![vec![0.0; NS_VARS]; NS_ROWS];
        let mut b = vec![0.0; NS_ROWS];
        let mut row_names = Vec::with_capacity(NS_ROWS);

        // rows 0..5: each context's outcome probabilities sum to one
        for (ci, ctx) in CONTEXTS.iter().enumerate() {
            for col in 0..4 {
                a[ci][4 * ci + col] = 1.0;
            }
            b[ci] = 1.0;
            row_names.push(format!("normalization for context {ctx}"));
        }
        // rows 5..10: an observable's marginal agrees across its two homes
        for obs in 1u8..=5 {
            let row = 4 + obs as usize;
            let homes = contexts_of(obs).expect("observable labels 1..=5 are valid");
            for (sign, (ctx, slot)) in [(1.0, homes[0]), (-1.0, homes[1])] {
                let ci = ctx.index();
                // P(outcome 1 in this slot) = p11 + p10 or p11 + p01
                a[row][var_index(ci, 1, 1)] += sign;
                match slot {
                    Slot::First => a[row][var_index(ci, 1, 0)] += sign,
                    Slot::Second => a[row][var_index(ci, 0, 1)] += sign,
                }
            }
            b[row] = 0.0;
            row_names.push(format!("no-disturbance for observable A{obs}"));
        }
        // row 10: the witness sum(P(! =) - P(=)) equals l
        for ci in 0..5 {
            a[10][var_index(ci, 1, 1)] = -1.0;
            a[10][var_index(ci, 1, 0)] = 1.0;
            a[10][var_index(ci, 0, 1)] = 1.0;
            a[10][var_index(ci, 0, 0)] = -1.0;
        }
        b[10] = l;
        row_names.push("witness value".to_string());

        Ok(NsLpProblem { a, b, row_names })
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn row_name(&self, row: usize) -> &str {
        &self.row_names[row]
    }

    /// Rank of the equality matrix via Gaussian elimination with partial
    /// pivoting. The pentagon scenario has full row rank (11): the five
    /// marginal-consistency rows form a cycle with a sign flip, so none is
    /// redundant.
    pub fn rank(&self) -> usize {
        let mut m = self.a.clone();
        let rows = m.len();
        let cols = m[0].len();
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let (pivot_row, pivot_val) =
                (rank..rows)
                    .map(|r| (r, m[r][col].abs()))
                    .fold(
                        (rank, 0.0f64),
                        |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                    );
            if pivot_val < 1e-9 {
                continue;
            }
            m.swap(rank, pivot_row);
            let scale = m[rank][col];
            for c in col..cols {
                m[rank][c] /= scale;
            }
            for r in 0..rows {
                if r != rank && m[r][col] != 0.0 {
                    let factor = m[r][col];
                    let pivot = m[rank].clone();
                    for c in col..cols {
                        m[r][c] -= factor * pivot[c];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Maximizes `P(outcome | context)` over the polytope.
    pub fn solve(&self, context: Context, outcome: (u8, u8)) -> Result<NsLpSolution, BoundsError> {
        let (a_bit, b_bit) = outcome;
        if a_bit > 1 || b_bit > 1 {
            return Err(BoundsError::BadParameter(format!(
                "outcome bits must be 0 or 1, got ({a_bit},{b_bit})"
            )));
        }
        let mut c = vec![0.0; NS_VARS];
        c[var_index(context.index(), a_bit, b_bit)] = 1.0;

        let sol = simplex::solve_max(&c, &self.a, &self.b, LP_TOL).map_err(|e| match e {
            SimplexError::Infeasible { row, residual } => BoundsError::Infeasible {
                constraint: self.row_names[row].clone(),
                residual,
            },
            other => BoundsError::Simplex(other),
        })?;

        let mut table = Vec::with_capacity(5);
        for ci in 0..5 {
            let block = &sol.x[4 * ci..4 * ci + 4];
            table.push(
                JointDist::new(block[0], block[1], block[2], block[3])
                    .map_err(|e| BoundsError::BadParameter(format!("LP optimizer block: {e}")))?,
            );
        }
        let table: [JointDist; 5] = table.try_into().expect("exactly five blocks");

        Ok(NsLpSolution {
            p_star: sol.objective,
            table,
            primal_residual: sol.primal_residual(&self.a, &self.b),
            dual_infeasibility: sol.dual_infeasibility(),
            duality_gap: sol.duality_gap(&self.b),
            duals: sol.duals,
            reduced_costs: sol.reduced_costs,
            iterations: sol.iterations,
        })
    }
}

/// The no-signaling adversary's guessing probability at witness value `l`:
/// the maximum of all twenty outcome probabilities over the polytope.
///
/// Ties are broken toward the earliest context and the outcome order
/// (11, 10, 01, 00), so the report is deterministic.
pub fn ns_guessing_probability(l: f64) -> Result<NsGuessing, BoundsError> {
    let problem = NsLpProblem::new(l)?;
    let mut best: Option<NsGuessing> = None;
    for ctx in CONTEXTS {
        for (a, b) in [(1u8, 1u8), (1, 0), (0, 1), (0, 0)] {
            let sol = problem.solve(ctx, (a, b))?;
            let better = match &best {
                None => true,
                Some(cur) => sol.p_star > cur.p_star + 1e-12,
            };
            if better {
                best = Some(NsGuessing {
                    p_star: sol.p_star,
                    context: ctx,
                    outcome: (a, b),
                    solution: sol,
                });
            }
        }
    }
    Ok(best.expect("twenty objectives were solved"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::L_Q;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equality_matrix_has_full_row_rank() {
        let p = NsLpProblem::new(3.5).unwrap();
        assert_eq!(p.rank(), NS_ROWS, "pentagon scenario rows are independent");
    }

    #[test]
    fn guessing_probability_matches_the_linear_law() {
        // max outcome probability = 1.75 - L/4 across the violating range
        for l in [3.0, 3.2, 3.5, 3.8141609, 3.9, L_Q] {
            let g = ns_guessing_probability(l).unwrap();
            assert_abs_diff_eq!(g.p_star, 1.75 - l / 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn optimizer_carries_a_tight_certificate() {
        let g = ns_guessing_probability(3.7).unwrap();
        let s = &g.solution;
        assert!(
            s.primal_residual <= 1e-9,
            "primal residual {}",
            s.primal_residual
        );
        assert!(
            s.dual_infeasibility <= 1e-9,
            "dual infeasibility {}",
            s.dual_infeasibility
        );
        assert!(s.duality_gap <= 1e-9, "duality gap {}", s.duality_gap);
    }

    #[test]
    fn optimizer_is_a_valid_no_disturbance_behaviour() {
        let g = ns_guessing_probability(3.85).unwrap();
        let table = &g.solution.table;
        // witness value reproduced
        let witness: f64 = table.iter().map(JointDist::neq_minus_eq).sum();
        assert_abs_diff_eq!(witness, 3.85, epsilon = 1e-9);
        // marginals agree across each observable's two home contexts
        for obs in 1u8..=5 {
            let homes = contexts_of(obs).unwrap();
            let marginal = |(ctx, slot): (Context, Slot)| {
                let d = &table[ctx.index()];
                match slot {
                    Slot::First => d.p11 + d.p10,
                    Slot::Second => d.p11 + d.p01,
                }
            };
            assert_abs_diff_eq!(marginal(homes[0]), marginal(homes[1]), epsilon = 1e-9);
        }
    }

    #[test]
    fn witness_values_beyond_the_polytope_are_infeasible() {
        for l in [5.2, -5.2, 6.0] {
            let problem = NsLpProblem::new(l).unwrap();
            let result = problem.solve(CONTEXTS[0], (0, 0));
            assert!(
                matches!(result, Err(BoundsError::Infeasible { .. })),
                "L = {l} lies outside the no-signaling range"
            );
        }
    }

    #[test]
    fn witness_extremes_are_exactly_feasible() {
        // L = 5: perfectly anticorrelated contexts; L = -5: all outcomes (1,1)
        for l in [5.0, -5.0] {
            let g = ns_guessing_probability(l).unwrap();
            assert!(g.p_star <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn non_binary_outcome_is_rejected() {
        let problem = NsLpProblem::new(3.5).unwrap();
        assert!(problem.solve(CONTEXTS[0], (2, 0)).is_err());
    }
}
