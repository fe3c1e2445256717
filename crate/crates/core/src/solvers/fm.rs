//! Fourier–Motzkin feasibility, the independent cross-check for the simplex.
//!
//! This procedure decides the same question as [`super::lp_feasible`] by
//! quantifier elimination instead of pivoting: equalities are removed by
//! exact substitution (the degenerate case of combining the two inequality
//! directions), then the remaining variables are eliminated one at a time by
//! combining upper and lower bounds. What is left is a set of constant
//! inequalities that can be read off. No code is shared with the simplex.

use crate::rational::{rational_zero, Rational};
use num_traits::{Signed, Zero};

use super::LpProblem;

/// Row `coeffs · x <= rhs`.
type Ineq = (Vec<Rational>, Rational);

const ROW_CAP: usize = 200_000;

/// Decides whether `A·x = b` has a nonnegative solution. Intended for small
/// systems (the elimination can blow up on large ones; a row cap panics
/// rather than degrade silently).
pub fn fm_feasible(problem: &LpProblem) -> bool {
    let n = problem.num_vars;
    let mut eqs: Vec<Ineq> = problem.rows.clone();
    let mut ineqs: Vec<Ineq> = Vec::new();
    // x_j >= 0 as -x_j <= 0.
    for j in 0..n {
        let mut coeffs = vec![rational_zero(); n];
        coeffs[j] = -Rational::from_integer(1.into());
        ineqs.push((coeffs, rational_zero()));
    }

    // Substitution phase: use each equality to eliminate one variable.
    while let Some(pos) = eqs.iter().position(|(c, _)| c.iter().any(|v| !v.is_zero())) {
        let (coeffs, rhs) = eqs.swap_remove(pos);
        let j = coeffs
            .iter()
            .position(|v| !v.is_zero())
            .expect("nonzero coefficient");
        let pivot = coeffs[j].clone();
        // x_j = (rhs - sum_{k != j} c_k x_k) / pivot
        let substitute = |(mut c, mut b): Ineq| -> Ineq {
            if c[j].is_zero() {
                return (c, b);
            }
            let factor = &c[j] / &pivot;
            for (k, ck) in c.iter_mut().enumerate() {
                if k == j {
                    *ck = rational_zero();
                } else {
                    let delta = &factor * &coeffs[k];
                    *ck -= delta;
                }
            }
            b -= &factor * &rhs;
            (c, b)
        };
        eqs = eqs.into_iter().map(substitute).collect();
        ineqs = ineqs.into_iter().map(substitute).collect();
    }
    // Degenerate equalities 0 = b.
    if eqs.iter().any(|(_, b)| !b.is_zero()) {
        return false;
    }

    // Elimination phase.
    for j in 0..n {
        let (with_var, rest): (Vec<Ineq>, Vec<Ineq>) =
            ineqs.into_iter().partition(|(c, _)| !c[j].is_zero());
        let mut next = rest;
        let (uppers, lowers): (Vec<Ineq>, Vec<Ineq>) =
            with_var.into_iter().partition(|(c, _)| c[j].is_positive());
        // a x_j <= u with a > 0 and -a' x_j <= l with a' > 0 combine to
        // a' u + a l >= 0 expressed as a row without x_j.
        for (uc, ub) in &uppers {
            let a = uc[j].clone();
            for (lc, lb) in &lowers {
                let a_neg = -lc[j].clone();
                let mut c: Vec<Rational> = Vec::with_capacity(n);
                for k in 0..n {
                    c.push(&uc[k] / &a + &lc[k] / &a_neg);
                }
                c[j] = rational_zero();
                let b = ub / &a + lb / &a_neg;
                next.push((c, b));
            }
        }
        dedup(&mut next);
        assert!(
            next.len() <= ROW_CAP,
            "Fourier-Motzkin row explosion; system too large for the oracle"
        );
        ineqs = next;
    }

    // Only constant rows remain: 0 <= b.
    ineqs.iter().all(|(_, b)| !b.is_negative())
}

/// Removes duplicate rows after normalising each so its first nonzero
/// coefficient is +1 or -1.
fn dedup(rows: &mut Vec<Ineq>) {
    use std::collections::HashSet;
    let mut seen: HashSet<String> = HashSet::new();
    rows.retain_mut(|(c, b)| {
        if let Some(scale) = c.iter().find(|v| !v.is_zero()).map(|v| v.abs()) {
            for v in c.iter_mut() {
                *v /= &scale;
            }
            *b /= &scale;
        } else if !b.is_negative() {
            // Constant row that cannot fail; drop it.
            return false;
        }
        let key = c
            .iter()
            .map(ToString::to_string)
            .chain(std::iter::once(b.to_string()))
            .collect::<Vec<_>>()
            .join(",");
        seen.insert(key)
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::solvers::lp_feasible;

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
    fn feasible_and_infeasible_basics() {
        assert!(fm_feasible(&rows(2, &[(&[1, 1], 1)])));
        assert!(!fm_feasible(&rows(2, &[(&[1, 1], 1), (&[1, 1], 2)])));
        assert!(!fm_feasible(&rows(2, &[(&[1, -1], 1), (&[1, 1], 0)])));
        assert!(fm_feasible(&rows(0, &[])));
        assert!(!fm_feasible(&rows(1, &[(&[1], -1)])));
    }

    #[test]
    fn agrees_with_simplex_on_fixed_family() {
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..120 {
            let num_vars = 1 + (next() % 5) as usize;
            let num_rows = 1 + (next() % 4) as usize;
            let mut p = LpProblem::new(num_vars);
            for _ in 0..num_rows {
                let coeffs: Vec<_> = (0..num_vars)
                    .map(|_| ratio((next() % 7) as i64 - 3, 1))
                    .collect();
                p.add_row(coeffs, ratio((next() % 9) as i64 - 2, 1));
            }
            assert_eq!(
                lp_feasible(&p).is_some(),
                fm_feasible(&p),
                "solver disagreement on {p:?}"
            );
        }
    }
}
