//! Morphisms between finite partial Boolean algebras.
//!
//! A morphism is a total map preserving constants, complement,
//! commeasurability, and the meets and joins of commeasurable pairs. The
//! maps of interest here are the two-valued ones (into the two-element
//! algebra); they are found by picking, in each maximal commeasurability
//! clique, the single atom that is sent to 1, and propagating the induced
//! truth values through shared elements.

use super::{ElementId, FinitePBA};
use std::fmt;

/// Why a candidate map fails to be a morphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphismViolation {
    WrongLength { expected: usize, got: usize },
    TargetOutOfRange { at: ElementId, value: ElementId },
    ConstantNotPreserved { which: &'static str },
    NegNotPreserved { at: ElementId },
    CommNotPreserved { a: ElementId, b: ElementId },
    MeetNotPreserved { a: ElementId, b: ElementId },
    JoinNotPreserved { a: ElementId, b: ElementId },
}

impl fmt::Display for MorphismViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismViolation::WrongLength { expected, got } => {
                write!(f, "map has {got} entries for a carrier of {expected}")
            }
            MorphismViolation::TargetOutOfRange { at, value } => {
                write!(f, "image {value} of {at} is outside the target carrier")
            }
            MorphismViolation::ConstantNotPreserved { which } => {
                write!(f, "constant {which} is not preserved")
            }
            MorphismViolation::NegNotPreserved { at } => {
                write!(f, "complement is not preserved at {at}")
            }
            MorphismViolation::CommNotPreserved { a, b } => {
                write!(f, "images of commeasurable pair ({a}, {b}) do not commeasure")
            }
            MorphismViolation::MeetNotPreserved { a, b } => {
                write!(f, "meet of ({a}, {b}) is not preserved")
            }
            MorphismViolation::JoinNotPreserved { a, b } => {
                write!(f, "join of ({a}, {b}) is not preserved")
            }
        }
    }
}

/// Checks that `map` (indexed by source element) is a morphism from `src`
/// to `dst`. Returns the first violation found, in a deterministic order.
pub fn is_morphism(
    src: &FinitePBA,
    dst: &FinitePBA,
    map: &[ElementId],
) -> Result<(), MorphismViolation> {
    if map.len() != src.size() {
        return Err(MorphismViolation::WrongLength {
            expected: src.size(),
            got: map.len(),
        });
    }
    for a in src.elements() {
        let im = map[a.idx()];
        if im.idx() >= dst.size() {
            return Err(MorphismViolation::TargetOutOfRange { at: a, value: im });
        }
    }
    if map[src.zero().idx()] != dst.zero() {
        return Err(MorphismViolation::ConstantNotPreserved { which: "0" });
    }
    if map[src.one().idx()] != dst.one() {
        return Err(MorphismViolation::ConstantNotPreserved { which: "1" });
    }
    for a in src.elements() {
        if map[src.neg(a).idx()] != dst.neg(map[a.idx()]) {
            return Err(MorphismViolation::NegNotPreserved { at: a });
        }
    }
    for a in src.elements() {
        for b in src.elements() {
            if a > b || !src.comm(a, b) {
                continue;
            }
            let (ia, ib) = (map[a.idx()], map[b.idx()]);
            if !dst.comm(ia, ib) {
                return Err(MorphismViolation::CommNotPreserved { a, b });
            }
            let m = src.meet(a, b).expect("defined on comm pair");
            if dst.meet(ia, ib) != Some(map[m.idx()]) {
                return Err(MorphismViolation::MeetNotPreserved { a, b });
            }
            let j = src.join(a, b).expect("defined on comm pair");
            if dst.join(ia, ib) != Some(map[j.idx()]) {
                return Err(MorphismViolation::JoinNotPreserved { a, b });
            }
        }
    }
    Ok(())
}

/// A two-valued morphism as the set of elements sent to 1.
pub type TwoValuation = Vec<bool>;

/// Renders a two-valuation as an element map into [`FinitePBA::two`].
pub fn two_valuation_as_map(valuation: &TwoValuation) -> Vec<ElementId> {
    valuation
        .iter()
        .map(|&v| ElementId(if v { 1 } else { 0 }))
        .collect()
}

/// Finds one morphism into the two-element algebra, or proves there is
/// none. Deterministic: the first valuation in the search order below.
pub fn find_morphism_to_2(a: &FinitePBA) -> Option<TwoValuation> {
    let mut found = None;
    search_two_valuations(a, &mut |val| {
        found = Some(val.to_vec());
        false
    });
    found
}

/// All morphisms into the two-element algebra, in search order.
pub fn enumerate_morphisms_to_2(a: &FinitePBA) -> Vec<TwoValuation> {
    let mut out = Vec::new();
    search_two_valuations(a, &mut |val| {
        out.push(val.to_vec());
        true
    });
    out
}

/// Backtracking search over two-valued morphisms. In each maximal clique a
/// morphism sends exactly one atom to 1 (the clique is a finite Boolean
/// algebra, and a two-valued Boolean morphism is determined by its unique
/// true atom); an element is true iff it sits above that atom. The search
/// assigns cliques in order, propagating values through shared elements.
/// `emit` is called with each complete valuation; returning `false` stops
/// the search.
fn search_two_valuations(a: &FinitePBA, emit: &mut dyn FnMut(&[bool]) -> bool) {
    if a.zero() == a.one() {
        // The degenerate algebra admits no map into 2.
        return;
    }
    let cliques = a.maximal_comm_cliques();
    let atoms: Vec<Vec<ElementId>> = cliques.iter().map(|c| a.clique_atoms(c)).collect();
    let mut assign: Vec<Option<bool>> = vec![None; a.size()];
    search_rec(a, &cliques, &atoms, 0, &mut assign, emit);
}

fn search_rec(
    a: &FinitePBA,
    cliques: &[Vec<ElementId>],
    atoms: &[Vec<ElementId>],
    k: usize,
    assign: &mut Vec<Option<bool>>,
    emit: &mut dyn FnMut(&[bool]) -> bool,
) -> bool {
    if k == cliques.len() {
        let val: Vec<bool> = assign
            .iter()
            .map(|v| v.expect("every element lies in some maximal clique"))
            .collect();
        return emit(&val);
    }
    for &atom in &atoms[k] {
        let mut delta = Vec::new();
        let mut ok = true;
        for &e in &cliques[k] {
            let v = a.leq(atom, e);
            match assign[e.idx()] {
                None => {
                    assign[e.idx()] = Some(v);
                    delta.push(e.idx());
                }
                Some(prev) if prev != v => {
                    ok = false;
                    break;
                }
                Some(_) => {}
            }
        }
        let keep_going = !ok || search_rec(a, cliques, atoms, k + 1, assign, emit);
        for i in delta {
            assign[i] = None;
        }
        if !keep_going {
            return false;
        }
    }
    true
}
