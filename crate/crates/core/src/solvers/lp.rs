//! Feasibility of `A·x = b, x >= 0` by phase-one simplex in exact rationals.
//!
//! Bland's rule (least index entering, least basis index among leaving ties)
//! guarantees termination; with exact arithmetic the outcome is a proof. A
//! returned point is re-checked against every row before it leaves, and in
//! debug builds the visited bases are recorded and asserted to never repeat.

use crate::rational::{rational_zero, Rational};
use num_traits::{Signed, Zero};

/// A system of linear equations over nonnegative variables.
///
/// Each row is `(coefficients, rhs)` with `coefficients.len() == num_vars`,
/// read as `coefficients · x = rhs`. Inequalities must be encoded by the
/// caller with explicit slack variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub rows: Vec<(Vec<Rational>, Rational)>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coefficients: Vec<Rational>, rhs: Rational) {
        assert_eq!(coefficients.len(), self.num_vars);
        self.rows.push((coefficients, rhs));
    }

    /// True when `x` is nonnegative and satisfies every row exactly.
    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|(coeffs, rhs)| {
                let lhs: Rational = coeffs
                    .iter()
                    .zip(x)
                    .map(|(c, v)| c * v)
                    .fold(rational_zero(), |acc, t| acc + t);
                lhs == *rhs
            })
    }
}

/// Decides whether the system has a nonnegative solution and returns one if
/// so. The answer is exact in both directions: `Some` carries a verified
/// point, `None` means the phase-one optimum was strictly positive.
pub fn lp_feasible(problem: &LpProblem) -> Option<Vec<Rational>> {
    let n = problem.num_vars;
    let m = problem.rows.len();
    if m == 0 {
        return Some(vec![rational_zero(); n]);
    }

    // Tableau rows: n structural columns, m artificial columns, then rhs.
    // Rows are sign-flipped so every rhs is nonnegative and the artificial
    // basis is feasible.
    let width = n + m + 1;
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for (i, (coeffs, rhs)) in problem.rows.iter().enumerate() {
        let flip = rhs.is_negative();
        let mut row: Vec<Rational> = Vec::with_capacity(width);
        for c in coeffs {
            row.push(if flip { -c.clone() } else { c.clone() });
        }
        for j in 0..m {
            row.push(if i == j {
                Rational::from_integer(1.into())
            } else {
                rational_zero()
            });
        }
        row.push(if flip { -rhs.clone() } else { rhs.clone() });
        tab.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced-cost row for minimising the sum of artificials. The raw cost
    // vector is 1 on artificial columns and 0 elsewhere; subtracting every
    // tableau row prices out the artificial basis, leaving 0 on basic
    // columns and -sum_i A[i][j] on structural ones.
    let mut cost: Vec<Rational> = vec![rational_zero(); width];
    for j in n..n + m {
        cost[j] = Rational::from_integer(1.into());
    }
    for row in &tab {
        for (j, c) in cost.iter_mut().enumerate() {
            *c -= &row[j];
        }
    }
    // Objective value lives in cost[width - 1] as -w.

    #[cfg(debug_assertions)]
    let mut seen_bases = std::collections::HashSet::new();

    loop {
        #[cfg(debug_assertions)]
        {
            let mut key = basis.clone();
            key.sort_unstable();
            assert!(seen_bases.insert(key), "simplex revisited a basis");
        }

        // Bland: least-index column with a negative reduced cost.
        let Some(enter) = (0..n + m).find(|&j| cost[j].is_negative()) else {
            break;
        };
        // Ratio test; ties broken by least basis variable index.
        let mut leave: Option<(usize, Rational)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[width - 1] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, best)) => {
                        ratio < *best || (ratio == *best && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            // Unbounded descent cannot happen in phase one (w >= 0), so a
            // missing leaving row means the column is nonpositive everywhere
            // and the reduced cost should not have been negative.
            unreachable!("phase-one column with no leaving row");
        };

        // Pivot.
        let pivot = tab[pivot_row][enter].clone();
        for c in tab[pivot_row].iter_mut() {
            *c /= &pivot;
        }
        for i in 0..m {
            if i != pivot_row && !tab[i][enter].is_zero() {
                let factor = tab[i][enter].clone();
                for j in 0..width {
                    let delta = &factor * &tab[pivot_row][j];
                    tab[i][j] -= delta;
                }
            }
        }
        if !cost[enter].is_zero() {
            let factor = cost[enter].clone();
            for j in 0..width {
                let delta = &factor * &tab[pivot_row][j];
                cost[j] -= delta;
            }
        }
        basis[pivot_row] = enter;
    }

    // cost[width-1] holds -w at optimality.
    let w = -cost[width - 1].clone();
    debug_assert!(!w.is_negative());
    if !w.is_zero() {
        return None;
    }

    let mut x = vec![rational_zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tab[i][width - 1].clone();
        }
        // Artificials still basic must sit at zero when w == 0.
    }
    assert!(
        problem.satisfied_by(&x),
        "simplex produced an infeasible point; this is a bug"
    );
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn rows(num_vars: usize, data: &[(&[i64], i64)]) -> LpProblem {
        let mut p = LpProblem::new(num_vars);
        for (coeffs, rhs) in data {
            p.add_row(
                coeffs.iter().map(|&c| ratio(c, 1)).collect(),
                ratio(*rhs, 1),
            );
        }
        p
    }

    #[test]
    fn empty_system_is_feasible() {
        assert_eq!(lp_feasible(&rows(3, &[])), Some(vec![ratio(0, 1); 3]));
    }

    #[test]
    fn single_equation() {
        let p = rows(2, &[(&[1, 1], 1)]);
        let x = lp_feasible(&p).unwrap();
        assert!(p.satisfied_by(&x));
    }

    #[test]
    fn inconsistent_rows_are_infeasible() {
        let p = rows(2, &[(&[1, 1], 1), (&[1, 1], 2)]);
        assert!(lp_feasible(&p).is_none());
    }

    #[test]
    fn nonnegativity_bites() {
        // x - y = 1 and x + y = 0 forces y = -1/2.
        let p = rows(2, &[(&[1, -1], 1), (&[1, 1], 0)]);
        assert!(lp_feasible(&p).is_none());
    }

    #[test]
    fn negative_rhs_is_normalised() {
        let p = rows(2, &[(&[-1, -1], -1)]);
        let x = lp_feasible(&p).unwrap();
        assert!(p.satisfied_by(&x));
    }

    #[test]
    fn redundant_rows_are_harmless() {
        let p = rows(2, &[(&[1, 1], 1), (&[2, 2], 2), (&[1, 0], 1)]);
        let x = lp_feasible(&p).unwrap();
        assert_eq!(x, vec![ratio(1, 1), ratio(0, 1)]);
    }

    #[test]
    fn exact_fractions_survive() {
        let mut p = LpProblem::new(1);
        p.add_row(vec![ratio(3, 7)], ratio(1, 5));
        let x = lp_feasible(&p).unwrap();
        assert_eq!(x, vec![ratio(7, 15)]);
    }

    #[test]
    fn zero_rhs_rows() {
        let p = rows(2, &[(&[1, -1], 0), (&[1, 1], 2)]);
        let x = lp_feasible(&p).unwrap();
        assert_eq!(x, vec![ratio(1, 1), ratio(1, 1)]);
    }
}
