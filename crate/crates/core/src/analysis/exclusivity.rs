//! The exclusivity battery: logical exclusivity against commeasurability,
//! transitivity of the order, probabilistic exclusivity for states, and
//! extension of a state to the exclusivity saturation.
//!
//! Logical exclusivity and transitivity are two faces of one property:
//! an exclusive pair outside the commeasurability relation yields a
//! broken chain and vice versa. Both scans always run together and their
//! agreement is asserted, so a verdict from either entry point has been
//! double-checked by the other.

use super::{is_state, RationalState};
use crate::algebra::{ElementId, FinitePBA};
use crate::bitset::BitRow;
use crate::cliques::maximal_cliques;
use crate::rational::{rational_one, rational_zero, Rational};
use crate::saturation::{saturate, ExtensionSpec, QuotientAlgebra};
use crate::solvers::{lp_feasible, LpProblem};
use std::fmt;

/// Verdict of the logical-exclusivity scan: does every exclusive pair
/// commeasure?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LepReport {
    pub holds: bool,
    /// An exclusive pair that does not commeasure, when one exists.
    pub violation: Option<(ElementId, ElementId)>,
}

/// Verdict of the transitivity scan on the order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitivityReport {
    pub holds: bool,
    /// A chain `a <= b <= c` with `a <= c` failing, when one exists.
    pub violation: Option<(ElementId, ElementId, ElementId)>,
}

/// Scans every pair for an exclusive one that fails to commeasure. Also
/// runs the transitivity scan and asserts the verdicts agree.
pub fn lep_check(a: &FinitePBA) -> LepReport {
    both_scans(a).0
}

/// Scans every `a <= b <= c` chain for a failure of `a <= c`. Also runs
/// the exclusivity scan and asserts the verdicts agree.
pub fn transitivity_check(a: &FinitePBA) -> TransitivityReport {
    both_scans(a).1
}

fn both_scans(a: &FinitePBA) -> (LepReport, TransitivityReport) {
    let n = a.size();
    let g = a.exclusivity_graph();
    let mut lep = None;
    'lep: for x in 0..n {
        for y in x + 1..n {
            if g.get(x, y) && !a.comm(ElementId(x as u32), ElementId(y as u32)) {
                lep = Some((ElementId(x as u32), ElementId(y as u32)));
                break 'lep;
            }
        }
    }

    let up = a.up_sets();
    let mut down = vec![BitRow::new(n); n];
    for x in 0..n {
        for c in up[x].iter_ones() {
            down[c].set(x, true);
        }
    }
    let mut chain = None;
    'chain: for y in 0..n {
        for x in down[y].iter_ones() {
            for z in up[y].iter_ones() {
                if !up[x].get(z) {
                    chain = Some((
                        ElementId(x as u32),
                        ElementId(y as u32),
                        ElementId(z as u32),
                    ));
                    break 'chain;
                }
            }
        }
    }

    assert_eq!(
        lep.is_none(),
        chain.is_none(),
        "exclusivity and transitivity must stand or fall together"
    );
    (
        LepReport {
            holds: lep.is_none(),
            violation: lep,
        },
        TransitivityReport {
            holds: chain.is_none(),
            violation: chain,
        },
    )
}

/// A pairwise-exclusive family whose masses add up past one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusivityViolation {
    pub family: Vec<ElementId>,
    pub total: Rational,
}

impl fmt::Display for ExclusivityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} pairwise exclusive elements carry total mass {}",
            self.family.len(),
            self.total
        )
    }
}

/// Checks that every pairwise-exclusive family has total mass at most
/// one. Maximal cliques of the exclusivity graph suffice: masses are
/// nonnegative, so any violating family extends to a violating maximal
/// clique. The first one in enumeration order is returned.
pub fn pep_check_state(a: &FinitePBA, nu: &RationalState) -> Result<(), ExclusivityViolation> {
    assert!(is_state(a, nu).ok, "input must be a state");
    let g = a.exclusivity_graph();
    for clique in maximal_cliques(&g) {
        let total = clique
            .iter()
            .fold(rational_zero(), |acc, &v| acc + nu.value(ElementId(v as u32)));
        if total > rational_one() {
            return Err(ExclusivityViolation {
                family: clique.into_iter().map(|v| ElementId(v as u32)).collect(),
                total,
            });
        }
    }
    Ok(())
}

/// Outcome of [`pep_via_extension`]. Every variant carries the quotient
/// so the caller can inspect what the saturation produced.
pub enum PepExtension {
    /// A state on the stabilized extension pulling back to the input.
    Extends {
        quotient: QuotientAlgebra,
        state: RationalState,
    },
    /// The extension stabilized but no such state exists.
    NoExtension { quotient: QuotientAlgebra },
    /// The saturation did not stabilize at this depth; no verdict.
    Inconclusive { quotient: QuotientAlgebra },
}

/// Tries to extend `nu` along the exclusivity saturation of `a`: make
/// every exclusive pair commeasurable, saturate, and look for a state on
/// the stabilized quotient that pulls back to `nu`.
///
/// The search is an exact feasibility problem over the quotient's
/// maximal commeasurability cliques: per clique one mass variable per
/// atom, summing to one, determining each member by summation, with the
/// base elements pinned to their `nu` values through the quotient map.
/// A found state is verified, and its existence implies the plain
/// exclusivity check on the input, which is asserted before returning.
pub fn pep_via_extension(a: &FinitePBA, nu: &RationalState, depth: u32) -> PepExtension {
    assert!(is_state(a, nu).ok, "input must be a state");
    let g = a.exclusivity_graph();
    let mut relation = Vec::new();
    for x in 0..a.size() {
        for y in x + 1..a.size() {
            if g.get(x, y) {
                relation.push((ElementId(x as u32), ElementId(y as u32)));
            }
        }
    }
    let spec = ExtensionSpec {
        base: a,
        relation,
        force_equal: Vec::new(),
        lep_rule: false,
        depth_limit: depth,
    };
    let quotient = saturate(&spec).expect("relation pairs come from the carrier");
    if !quotient.stabilized {
        return PepExtension::Inconclusive { quotient };
    }

    let q = &quotient.algebra;
    let cliques = q.maximal_comm_cliques();
    let clique_atoms: Vec<Vec<ElementId>> = cliques.iter().map(|c| q.clique_atoms(c)).collect();
    let num_atoms: usize = clique_atoms.iter().map(Vec::len).sum();
    let mut lp = LpProblem::new(q.size() + num_atoms);

    let mut offset = q.size();
    for (clique, atoms) in cliques.iter().zip(&clique_atoms) {
        let mut normalise = vec![rational_zero(); lp.num_vars];
        for k in 0..atoms.len() {
            normalise[offset + k] = rational_one();
        }
        lp.add_row(normalise, rational_one());
        for &e in clique {
            let mut row = vec![rational_zero(); lp.num_vars];
            row[e.idx()] = rational_one();
            for (k, &t) in atoms.iter().enumerate() {
                if q.leq(t, e) {
                    row[offset + k] = -rational_one();
                }
            }
            lp.add_row(row, rational_zero());
        }
        offset += atoms.len();
    }
    for b in a.elements() {
        let mut row = vec![rational_zero(); lp.num_vars];
        row[quotient.class_of(b).idx()] = rational_one();
        lp.add_row(row, nu.value(b).clone());
    }

    match lp_feasible(&lp) {
        Some(solution) => {
            let state = RationalState::new(solution[..q.size()].to_vec());
            assert!(is_state(q, &state).ok, "extension must be a state");
            for b in a.elements() {
                assert_eq!(
                    state.value(quotient.class_of(b)),
                    nu.value(b),
                    "extension must pull back to the input"
                );
            }
            assert!(
                pep_check_state(a, nu).is_ok(),
                "an extendable state cannot break the exclusivity bound"
            );
            PepExtension::Extends { quotient, state }
        }
        None => PepExtension::NoExtension { quotient },
    }
}
