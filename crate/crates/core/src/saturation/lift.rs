//! Morphisms induced out of a saturated quotient.
//!
//! A morphism from the base into a target that respects the extension
//! constraints factors uniquely through the quotient. The factorisation
//! is computed by structural recursion over the term nodes; agreement of
//! all members of a class is asserted, so a successful call also
//! re-verifies that every merge the engine performed is respected by the
//! target.

use super::engine::NodeKind;
use super::{saturate, ExtensionSpec, InvalidExtensionSpec, QuotientAlgebra};
use crate::algebra::{is_morphism, ElementId, FinitePBA, MorphismViolation};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftError {
    WrongLength { expected: usize, got: usize },
    NotAMorphism(MorphismViolation),
    /// A relation pair's images are not commeasurable in the target.
    RelationNotCommeasurable(ElementId, ElementId),
    /// A forced pair's images differ in the target.
    ForcedPairNotEqual(ElementId, ElementId),
    /// The exclusivity rule was on, but the target has an exclusive
    /// non-commeasurable pair.
    TargetLacksExclusivityProperty(ElementId, ElementId),
    /// The quotient is the one-element algebra; only a trivial target
    /// admits a morphism out of it.
    CollapsedQuotient,
}

impl fmt::Display for LiftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftError::WrongLength { expected, got } => {
                write!(f, "morphism table has length {got}, carrier has {expected}")
            }
            LiftError::NotAMorphism(v) => write!(f, "not a morphism: {v}"),
            LiftError::RelationNotCommeasurable(a, b) => {
                write!(f, "images of related pair ({a}, {b}) are not commeasurable in the target")
            }
            LiftError::ForcedPairNotEqual(a, b) => {
                write!(f, "images of forced pair ({a}, {b}) differ in the target")
            }
            LiftError::TargetLacksExclusivityProperty(a, b) => {
                write!(f, "target has exclusive non-commeasurable pair ({a}, {b})")
            }
            LiftError::CollapsedQuotient => {
                write!(f, "quotient collapsed to one element; no morphism into a nontrivial target")
            }
        }
    }
}

impl std::error::Error for LiftError {}

/// Factors `h : base → target` through the quotient of `spec`, returning
/// the induced morphism as a table over the quotient carrier.
///
/// `q` must be the quotient saturated from `spec` (any depth). `h` must
/// be a morphism that makes every related pair commeasurable and every
/// forced pair equal in the target; when the spec enables the
/// exclusivity rule the target must itself satisfy the exclusivity
/// property. These preconditions are checked and violations reported.
pub fn lift_morphism(
    spec: &ExtensionSpec,
    q: &QuotientAlgebra,
    target: &FinitePBA,
    h: &[ElementId],
) -> Result<Vec<ElementId>, LiftError> {
    if h.len() != spec.base.size() {
        return Err(LiftError::WrongLength {
            expected: spec.base.size(),
            got: h.len(),
        });
    }
    if let Err(v) = is_morphism(spec.base, target, h) {
        return Err(LiftError::NotAMorphism(v));
    }
    for &(a, b) in &spec.relation {
        if !target.comm(h[a.idx()], h[b.idx()]) {
            return Err(LiftError::RelationNotCommeasurable(a, b));
        }
    }
    for &(a, b) in &spec.force_equal {
        if h[a.idx()] != h[b.idx()] {
            return Err(LiftError::ForcedPairNotEqual(a, b));
        }
    }
    if spec.lep_rule {
        for a in target.elements() {
            for b in target.elements() {
                if a < b && !target.comm(a, b) && target.exclusive(a, b).is_some() {
                    return Err(LiftError::TargetLacksExclusivityProperty(a, b));
                }
            }
        }
    }
    if q.collapsed {
        if target.zero() == target.one() {
            return Ok(vec![target.zero(); q.algebra.size()]);
        }
        return Err(LiftError::CollapsedQuotient);
    }

    // Structural recursion in creation order. Children were created
    // before their parents, so every class already has an image when a
    // member referencing it is processed.
    let mut image_of_root: HashMap<u32, ElementId> = HashMap::new();
    for (n, kind) in q.lift.kinds.iter().enumerate() {
        let image = match *kind {
            NodeKind::Zero => target.zero(),
            NodeKind::One => target.one(),
            NodeKind::Gen(a) => h[a as usize],
            NodeKind::Not(c) => {
                let rc = q.lift.final_root[c as usize];
                target.neg(image_of_root[&rc])
            }
            NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
                let (x, y) = (
                    image_of_root[&q.lift.final_root[c1 as usize]],
                    image_of_root[&q.lift.final_root[c2 as usize]],
                );
                let r = if matches!(kind, NodeKind::And(..)) {
                    target.meet(x, y)
                } else {
                    target.join(x, y)
                };
                r.expect("images of a commeasurable class pair are commeasurable in the target")
            }
        };
        let root = q.lift.final_root[n];
        match image_of_root.entry(root) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(image);
            }
            std::collections::hash_map::Entry::Occupied(o) => {
                assert_eq!(
                    *o.get(),
                    image,
                    "members of one class lifted to different images; a merge is unsound"
                );
            }
        }
    }

    let mut table = vec![target.zero(); q.algebra.size()];
    for (&root, &elem) in &q.lift.element_of_root {
        table[elem.idx()] = image_of_root[&root];
    }
    debug_assert!(
        is_morphism(&q.algebra, target, &table).is_ok(),
        "induced table fails the morphism laws"
    );
    for a in spec.base.elements() {
        debug_assert_eq!(
            table[q.eta[a.idx()].idx()],
            h[a.idx()],
            "induced morphism does not factor the original one"
        );
    }
    Ok(table)
}

/// Lifts `h` and demands the induced morphism be an isomorphism onto the
/// target, returning it with its inverse.
pub fn lift_isomorphism(
    spec: &ExtensionSpec,
    q: &QuotientAlgebra,
    target: &FinitePBA,
    h: &[ElementId],
) -> Result<(Vec<ElementId>, Vec<ElementId>), IsoFailure> {
    let fwd = lift_morphism(spec, q, target, h).map_err(IsoFailure::Lift)?;
    if target.size() != q.algebra.size() {
        return Err(IsoFailure::SizeMismatch {
            quotient: q.algebra.size(),
            target: target.size(),
        });
    }
    let mut inv = vec![None; target.size()];
    for (i, &img) in fwd.iter().enumerate() {
        if inv[img.idx()].replace(ElementId(i as u32)).is_some() {
            return Err(IsoFailure::NotInjective(img));
        }
    }
    let inverse: Vec<ElementId> = inv
        .into_iter()
        .map(|x| x.expect("surjective because injective between equal finite carriers"))
        .collect();
    if let Err(v) = is_morphism(target, &q.algebra, &inverse) {
        return Err(IsoFailure::InverseNotMorphism(v));
    }
    Ok((fwd, inverse))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsoFailure {
    Lift(LiftError),
    SizeMismatch { quotient: usize, target: usize },
    NotInjective(ElementId),
    InverseNotMorphism(MorphismViolation),
}

impl fmt::Display for IsoFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsoFailure::Lift(e) => write!(f, "lift failed: {e}"),
            IsoFailure::SizeMismatch { quotient, target } => {
                write!(f, "carrier sizes differ: quotient {quotient}, target {target}")
            }
            IsoFailure::NotInjective(e) => write!(f, "two classes map to {e}"),
            IsoFailure::InverseNotMorphism(v) => write!(f, "inverse fails morphism laws: {v}"),
        }
    }
}

impl std::error::Error for IsoFailure {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoequaliserError {
    WrongLength,
    LeftNotMorphism(MorphismViolation),
    RightNotMorphism(MorphismViolation),
    Spec(InvalidExtensionSpec),
}

impl fmt::Display for CoequaliserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoequaliserError::WrongLength => write!(f, "morphism tables must cover the source carrier"),
            CoequaliserError::LeftNotMorphism(v) => write!(f, "left map: {v}"),
            CoequaliserError::RightNotMorphism(v) => write!(f, "right map: {v}"),
            CoequaliserError::Spec(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CoequaliserError {}

/// The coequaliser of two parallel morphisms `f, g : src → tgt`: the
/// quotient of `tgt` forcing `f(a) ≡ g(a)` for every source element.
pub fn coequaliser(
    src: &FinitePBA,
    tgt: &FinitePBA,
    f: &[ElementId],
    g: &[ElementId],
    depth_limit: u32,
) -> Result<QuotientAlgebra, CoequaliserError> {
    if f.len() != src.size() || g.len() != src.size() {
        return Err(CoequaliserError::WrongLength);
    }
    is_morphism(src, tgt, f).map_err(CoequaliserError::LeftNotMorphism)?;
    is_morphism(src, tgt, g).map_err(CoequaliserError::RightNotMorphism)?;
    let spec = ExtensionSpec {
        base: tgt,
        relation: Vec::new(),
        force_equal: f.iter().copied().zip(g.iter().copied()).collect(),
        lep_rule: false,
        depth_limit,
    };
    saturate(&spec).map_err(CoequaliserError::Spec)
}

/// The free exclusivity-property completion: saturation with no added
/// relation but the exclusivity rule switched on.
pub fn lep_saturate(base: &FinitePBA, depth_limit: u32) -> QuotientAlgebra {
    let spec = ExtensionSpec {
        base,
        relation: Vec::new(),
        force_equal: Vec::new(),
        lep_rule: true,
        depth_limit,
    };
    saturate(&spec).expect("no spec elements to fall out of range")
}
