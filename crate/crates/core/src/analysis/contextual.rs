//! Probabilistic contextuality: can a state be explained as a mixture of
//! two-valued morphisms?
//!
//! [`noncontextual`] asks for a distribution over all morphisms to 2 that
//! reproduces the state element by element, an exact-rational feasibility
//! question. For states that came from an empirical model there is an
//! older formulation asking for a distribution over global outcome
//! assignments that marginalises to every context table;
//! [`model_global_distribution`] implements it without touching the
//! algebra at all, so the two can be played against each other in tests.

use super::{is_state, RationalState};
use crate::algebra::{enumerate_morphisms_to_2, FinitePBA, TwoValuation};
use crate::rational::{rational_one, rational_zero, Rational};
use crate::scenario::EmpiricalModel;
use crate::solvers::{lp_feasible, LpProblem};

/// A mixture of two-valued morphisms reproducing a state: `weights[k]` is
/// the mass on `morphisms[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDistribution {
    pub morphisms: Vec<TwoValuation>,
    pub weights: Vec<Rational>,
}

/// Verdict on contextuality. `witness` is present exactly for the
/// noncontextual outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualityVerdict {
    pub noncontextual: bool,
    pub witness: Option<GlobalDistribution>,
}

/// Decides whether `nu` is a mixture of two-valued morphisms of `a`.
///
/// The input must be a state; that is asserted up front. When the algebra
/// has no morphisms to 2 at all the state is contextual outright. The
/// returned witness is re-checked against every element before it leaves.
pub fn noncontextual(a: &FinitePBA, nu: &RationalState) -> ContextualityVerdict {
    assert!(is_state(a, nu).ok, "input must be a state");
    let morphisms = enumerate_morphisms_to_2(a);
    if morphisms.is_empty() {
        return ContextualityVerdict {
            noncontextual: false,
            witness: None,
        };
    }
    let mut lp = LpProblem::new(morphisms.len());
    for e in a.elements() {
        let coefficients = morphisms
            .iter()
            .map(|h| {
                if h[e.idx()] {
                    rational_one()
                } else {
                    rational_zero()
                }
            })
            .collect();
        lp.add_row(coefficients, nu.value(e).clone());
    }
    match lp_feasible(&lp) {
        Some(weights) => {
            for e in a.elements() {
                let mass = morphisms
                    .iter()
                    .zip(&weights)
                    .filter(|(h, _)| h[e.idx()])
                    .fold(rational_zero(), |acc, (_, w)| acc + w);
                assert_eq!(&mass, nu.value(e), "witness fails at {e}");
            }
            ContextualityVerdict {
                noncontextual: true,
                witness: Some(GlobalDistribution { morphisms, weights }),
            }
        }
        None => ContextualityVerdict {
            noncontextual: false,
            witness: None,
        },
    }
}

/// The feasibility system behind [`model_global_distribution`]: one
/// nonnegative variable per global outcome assignment (a digit per
/// measurement, last measurement varying fastest), one equation per
/// context event. Exposed so the same system can be handed to an
/// independent solver as a cross-check.
pub fn model_global_lp(model: &EmpiricalModel) -> LpProblem {
    let s = model.scenario();
    let n = s.measurement_count();
    let mut widths = Vec::with_capacity(n);
    let mut total: usize = 1;
    for m in 0..n {
        let w = s.outcomes(m).len();
        widths.push(w);
        total = total.checked_mul(w).expect("assignment space overflows");
    }
    assert!(total <= 1 << 20, "assignment space too large for the direct route");

    let digit = |g: usize, m: usize| {
        let mut rem = g;
        for k in (m + 1..n).rev() {
            rem /= widths[k];
        }
        rem % widths[m]
    };

    let mut lp = LpProblem::new(total);
    for (ci, ctx) in model.contexts().iter().enumerate() {
        for code in 0..s.event_count(ctx) as u32 {
            let event = s.event_digits(ctx, code);
            let coefficients = (0..total)
                .map(|g| {
                    let hit = ctx
                        .iter()
                        .enumerate()
                        .all(|(p, &m)| digit(g, m) == event[p] as usize);
                    if hit {
                        rational_one()
                    } else {
                        rational_zero()
                    }
                })
                .collect();
            lp.add_row(coefficients, model.probability(ci, code).clone());
        }
    }
    lp
}

/// Searches for a distribution over global outcome assignments that
/// marginalises to every context table of the model. Returns the weights
/// in assignment order.
///
/// This is the scenario-level notion of noncontextuality, and on a
/// scenario algebra it must agree with [`noncontextual`] applied to the
/// corresponding state; tests lean on that agreement.
pub fn model_global_distribution(model: &EmpiricalModel) -> Option<Vec<Rational>> {
    lp_feasible(&model_global_lp(model))
}
