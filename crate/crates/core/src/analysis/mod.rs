//! States on finite partial Boolean algebras and the checks built on them.
//!
//! A state assigns an exact rational in `[0, 1]` to every element so that
//! zero gets 0, complement flips against 1, and meet plus join of a
//! commeasurable pair add up to the pair's values. [`is_state`] decides
//! this twice over: once clause by clause, once by checking that the
//! restriction to every maximal commeasurability clique is a probability
//! measure determined by its atom masses. The two routes must agree and
//! their agreement is asserted on every call.
//!
//! The deeper checks live in the submodules: [`ks`] for the existence of
//! two-valued morphisms, [`contextual`] for global distributions over
//! them, and [`exclusivity`] for the exclusivity battery.

mod contextual;
mod exclusivity;
mod ks;

pub use contextual::{
    model_global_distribution, model_global_lp, noncontextual, ContextualityVerdict,
    GlobalDistribution,
};
pub use exclusivity::{
    lep_check, pep_check_state, pep_via_extension, transitivity_check, ExclusivityViolation,
    LepReport, PepExtension, TransitivityReport,
};
pub use ks::{ks_check, KsMethod, KsVerdict};

use crate::algebra::{ElementId, FinitePBA, TwoValuation};
use crate::rational::{in_unit_interval, rational_one, rational_zero, Rational};
use num_traits::{Signed, Zero};
use std::fmt;

/// A state: one exact rational per carrier element, indexed by element id.
///
/// The carrier it refers to travels separately; every operation takes the
/// algebra as its own argument and checks the lengths match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalState {
    pub values: Vec<Rational>,
}

impl RationalState {
    pub fn new(values: Vec<Rational>) -> RationalState {
        RationalState { values }
    }

    /// The 0/1 state induced by a two-valued morphism.
    pub fn from_two_valuation(valuation: &TwoValuation) -> RationalState {
        RationalState {
            values: valuation
                .iter()
                .map(|&v| if v { rational_one() } else { rational_zero() })
                .collect(),
        }
    }

    /// Mixes states by the given weights. The weights must sum to one and
    /// the states must have equal length; both are asserted.
    pub fn mixture(parts: &[(Rational, &RationalState)]) -> RationalState {
        assert!(!parts.is_empty(), "mixture of nothing");
        let total = parts
            .iter()
            .fold(rational_zero(), |acc, (w, _)| acc + w);
        assert_eq!(total, rational_one(), "weights must sum to 1");
        let n = parts[0].1.values.len();
        let mut values = vec![rational_zero(); n];
        for (w, s) in parts {
            assert_eq!(s.values.len(), n);
            for (acc, v) in values.iter_mut().zip(&s.values) {
                *acc = &*acc + &(w * v);
            }
        }
        RationalState { values }
    }

    pub fn value(&self, e: ElementId) -> &Rational {
        &self.values[e.idx()]
    }
}

/// One broken state clause, with the elements that break it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateViolation {
    WrongLength { expected: usize, got: usize },
    OutOfRange { at: ElementId },
    ZeroNotNull,
    NegMismatch { at: ElementId },
    ModularityMismatch { a: ElementId, b: ElementId },
}

impl fmt::Display for StateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateViolation::WrongLength { expected, got } => {
                write!(f, "state has {got} values for a carrier of {expected}")
            }
            StateViolation::OutOfRange { at } => {
                write!(f, "value at {at} is outside [0, 1]")
            }
            StateViolation::ZeroNotNull => write!(f, "zero is not sent to 0"),
            StateViolation::NegMismatch { at } => {
                write!(f, "complement clause fails at {at}")
            }
            StateViolation::ModularityMismatch { a, b } => {
                write!(f, "meet/join additivity fails on ({a}, {b})")
            }
        }
    }
}

/// Outcome of [`is_state`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateReport {
    pub ok: bool,
    pub violations: Vec<StateViolation>,
}

/// Checks the state clauses one by one, then cross-checks the verdict by
/// testing that the restriction to every maximal commeasurability clique
/// is a probability measure: nonnegative atom masses summing to one, with
/// every member's value the sum of its atoms. The two verdicts agreeing
/// is asserted, not reported.
pub fn is_state(a: &FinitePBA, nu: &RationalState) -> StateReport {
    let mut violations = Vec::new();
    if nu.values.len() != a.size() {
        return StateReport {
            ok: false,
            violations: vec![StateViolation::WrongLength {
                expected: a.size(),
                got: nu.values.len(),
            }],
        };
    }
    for e in a.elements() {
        if !in_unit_interval(nu.value(e)) {
            violations.push(StateViolation::OutOfRange { at: e });
        }
    }
    if !nu.value(a.zero()).is_zero() {
        violations.push(StateViolation::ZeroNotNull);
    }
    for e in a.elements() {
        let flipped = rational_one() - nu.value(e);
        if *nu.value(a.neg(e)) != flipped {
            violations.push(StateViolation::NegMismatch { at: e });
        }
    }
    for x in a.elements() {
        for y in a.elements() {
            if x > y || !a.comm(x, y) {
                continue;
            }
            let m = a.meet(x, y).expect("defined on comm pair");
            let j = a.join(x, y).expect("defined on comm pair");
            let lhs = nu.value(j) + nu.value(m);
            let rhs = nu.value(x) + nu.value(y);
            if lhs != rhs {
                violations.push(StateViolation::ModularityMismatch { a: x, b: y });
            }
        }
    }
    let ok = violations.is_empty();
    assert_eq!(
        ok,
        measure_on_every_clique(a, nu),
        "clause check and per-clique measure check disagree"
    );
    StateReport { ok, violations }
}

/// The measure route: on each maximal commeasurability clique the atom
/// masses must be nonnegative, sum to one, and determine every member by
/// summation over the atoms below it.
fn measure_on_every_clique(a: &FinitePBA, nu: &RationalState) -> bool {
    for clique in a.maximal_comm_cliques() {
        let atoms = a.clique_atoms(&clique);
        let mut total = rational_zero();
        for &t in &atoms {
            if nu.value(t).is_negative() {
                return false;
            }
            total = total + nu.value(t);
        }
        if total != rational_one() {
            return false;
        }
        for &e in &clique {
            let below = atoms
                .iter()
                .filter(|&&t| a.leq(t, e))
                .fold(rational_zero(), |acc, &t| acc + nu.value(t));
            if below != *nu.value(e) {
                return false;
            }
        }
    }
    true
}
