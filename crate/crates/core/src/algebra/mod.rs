//! Finite partial Boolean algebras.
//!
//! A carrier of elements with a reflexive, symmetric *commeasurability*
//! relation, constants 0 and 1, a total complement, and meet/join defined on
//! exactly the commeasurable pairs. The defining requirement is that every
//! set of pairwise commeasurable elements lives inside a subset that is a
//! Boolean algebra under the restricted operations; [`FinitePBA::validate`]
//! checks this exhaustively by enumerating the maximal cliques of the
//! relation and testing each against its own atom decomposition.
//!
//! Tables are immutable after construction; everything here is safe to share
//! across threads by reference.

mod glued;
mod morphism;

pub use glued::{from_glued_contexts, GluedContext, GluedContextSpec, GluedElementRef, GluedError};
pub use morphism::{
    enumerate_morphisms_to_2, find_morphism_to_2, is_morphism, two_valuation_as_map,
    MorphismViolation, TwoValuation,
};

use crate::bitset::{BitMatrix, BitRow};
use crate::cliques::maximal_cliques;
use std::collections::HashMap;
use std::fmt;

/// Index of an element in a [`FinitePBA`] carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[inline]
pub(crate) fn pack(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (lo as u64) << 32 | hi as u64
}

/// Which binary operation a table entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Meet,
    Join,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Meet => "meet",
            OpKind::Join => "join",
        })
    }
}

/// A finite partial Boolean algebra given by explicit tables.
#[derive(Clone)]
pub struct FinitePBA {
    labels: Vec<String>,
    zero: ElementId,
    one: ElementId,
    neg: Vec<ElementId>,
    comm: BitMatrix,
    meet: HashMap<u64, u32>,
    join: HashMap<u64, u32>,
    label_index: HashMap<String, u32>,
}

impl fmt::Debug for FinitePBA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinitePBA")
            .field("size", &self.size())
            .field("zero", &self.zero)
            .field("one", &self.one)
            .finish_non_exhaustive()
    }
}

impl FinitePBA {
    /// Builds an algebra from raw tables, exactly as given. Nothing is
    /// checked beyond vector lengths matching the carrier, so the result may
    /// violate every axiom; run [`FinitePBA::validate`] on anything whose
    /// provenance is not trusted. `comm_pairs` entries are directional.
    pub fn from_parts(
        labels: Vec<String>,
        zero: ElementId,
        one: ElementId,
        neg: Vec<ElementId>,
        comm_pairs: &[(ElementId, ElementId)],
        meet_entries: &[(ElementId, ElementId, ElementId)],
        join_entries: &[(ElementId, ElementId, ElementId)],
    ) -> FinitePBA {
        let n = labels.len();
        assert_eq!(neg.len(), n, "neg table length must match carrier");
        let mut comm = BitMatrix::new(n);
        for &(a, b) in comm_pairs {
            if a.idx() < n && b.idx() < n {
                comm.set(a.idx(), b.idx(), true);
            }
        }
        let mut meet = HashMap::new();
        let mut join = HashMap::new();
        for &(a, b, r) in meet_entries {
            meet.insert(pack(a.0, b.0), r.0);
        }
        for &(a, b, r) in join_entries {
            join.insert(pack(a.0, b.0), r.0);
        }
        Self::assemble(labels, zero, one, neg, comm, meet, join)
    }

    pub(crate) fn assemble(
        labels: Vec<String>,
        zero: ElementId,
        one: ElementId,
        neg: Vec<ElementId>,
        comm: BitMatrix,
        meet: HashMap<u64, u32>,
        join: HashMap<u64, u32>,
    ) -> FinitePBA {
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        FinitePBA {
            labels,
            zero,
            one,
            neg,
            comm,
            meet,
            join,
            label_index,
        }
    }

    /// The two-element Boolean algebra.
    pub fn two() -> FinitePBA {
        Self::boolean(&["p"]).expect("nonempty atom set")
    }

    /// The Boolean algebra of subsets of the given atoms. Element `i` is the
    /// subset whose bits are `i`; `0` is the empty set, the full set is `1`.
    pub fn boolean(atoms: &[&str]) -> Result<FinitePBA, EmptyAtomSet> {
        if atoms.is_empty() {
            return Err(EmptyAtomSet);
        }
        let k = atoms.len();
        assert!(k <= 12, "Boolean algebra too large for explicit tables");
        let n = 1usize << k;
        let full = (n - 1) as u32;
        let labels: Vec<String> = (0..n as u32)
            .map(|mask| {
                if mask == 0 {
                    "0".to_owned()
                } else if mask == full {
                    "1".to_owned()
                } else {
                    let names: Vec<&str> = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| atoms[i]).collect();
                    format!("{{{}}}", names.join(","))
                }
            })
            .collect();
        let mut comm = BitMatrix::new(n);
        let mut meet = HashMap::new();
        let mut join = HashMap::new();
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                comm.set(a as usize, b as usize, true);
                if a <= b {
                    meet.insert(pack(a, b), a & b);
                    join.insert(pack(a, b), a | b);
                }
            }
        }
        let neg = (0..n as u32).map(|m| ElementId(full & !m)).collect();
        Ok(Self::assemble(
            labels,
            ElementId(0),
            ElementId(full),
            neg,
            comm,
            meet,
            join,
        ))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementId> {
        (0..self.labels.len() as u32).map(ElementId)
    }

    pub fn zero(&self) -> ElementId {
        self.zero
    }

    pub fn one(&self) -> ElementId {
        self.one
    }

    pub fn label(&self, e: ElementId) -> &str {
        &self.labels[e.idx()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn element_by_label(&self, label: &str) -> Option<ElementId> {
        self.label_index.get(label).map(|&i| ElementId(i))
    }

    pub fn neg(&self, e: ElementId) -> ElementId {
        self.neg[e.idx()]
    }

    pub fn comm(&self, a: ElementId, b: ElementId) -> bool {
        self.comm.get(a.idx(), b.idx())
    }

    pub fn meet(&self, a: ElementId, b: ElementId) -> Option<ElementId> {
        self.meet.get(&pack(a.0, b.0)).map(|&r| ElementId(r))
    }

    pub fn join(&self, a: ElementId, b: ElementId) -> Option<ElementId> {
        self.join.get(&pack(a.0, b.0)).map(|&r| ElementId(r))
    }

    /// The partial order: `a <= b` iff they are commeasurable and
    /// `a ∧ b = a`.
    pub fn leq(&self, a: ElementId, b: ElementId) -> bool {
        self.comm(a, b) && self.meet(a, b) == Some(a)
    }

    /// Exclusivity: `a` and `b` are exclusive when some `c` has `a <= c` and
    /// `b <= ¬c`. Returns the least such witness.
    pub fn exclusive(&self, a: ElementId, b: ElementId) -> Option<ElementId> {
        self.elements()
            .find(|&c| self.leq(a, c) && self.leq(b, self.neg(c)))
    }

    /// Raw table access for serialisation and mutation-style tests: all
    /// directed commeasurability pairs.
    pub fn comm_pairs(&self) -> Vec<(ElementId, ElementId)> {
        let mut out = Vec::new();
        for i in 0..self.size() {
            for j in self.comm.row(i).iter_ones() {
                out.push((ElementId(i as u32), ElementId(j as u32)));
            }
        }
        out
    }

    /// All meet entries as `(a, b, result)` with `a <= b` by index.
    pub fn meet_entries(&self) -> Vec<(ElementId, ElementId, ElementId)> {
        let mut out: Vec<_> = self
            .meet
            .iter()
            .map(|(&k, &r)| {
                (
                    ElementId((k >> 32) as u32),
                    ElementId(k as u32),
                    ElementId(r),
                )
            })
            .collect();
        out.sort();
        out
    }

    /// All join entries as `(a, b, result)` with `a <= b` by index.
    pub fn join_entries(&self) -> Vec<(ElementId, ElementId, ElementId)> {
        let mut out: Vec<_> = self
            .join
            .iter()
            .map(|(&k, &r)| {
                (
                    ElementId((k >> 32) as u32),
                    ElementId(k as u32),
                    ElementId(r),
                )
            })
            .collect();
        out.sort();
        out
    }

    pub(crate) fn comm_matrix(&self) -> &BitMatrix {
        &self.comm
    }

    /// Maximal cliques of the commeasurability graph, each sorted.
    pub fn maximal_comm_cliques(&self) -> Vec<Vec<ElementId>> {
        maximal_cliques(&self.comm)
            .into_iter()
            .map(|c| c.into_iter().map(|i| ElementId(i as u32)).collect())
            .collect()
    }

    /// Atoms (minimal nonzero elements) of one commeasurability clique.
    pub fn clique_atoms(&self, clique: &[ElementId]) -> Vec<ElementId> {
        clique
            .iter()
            .copied()
            .filter(|&a| {
                a != self.zero
                    && clique
                        .iter()
                        .all(|&b| b == self.zero || b == a || !self.leq(b, a))
            })
            .collect()
    }

    /// For each element `a`, the bit row of elements `c` with `a <= c`.
    pub fn up_sets(&self) -> Vec<BitRow> {
        let n = self.size();
        let mut up = vec![BitRow::new(n); n];
        for a in 0..n {
            let ea = ElementId(a as u32);
            for c in self.comm.row(a).iter_ones() {
                if self.leq(ea, ElementId(c as u32)) {
                    up[a].set(c, true);
                }
            }
        }
        up
    }

    /// The exclusivity relation as a symmetric bit matrix.
    pub fn exclusivity_graph(&self) -> BitMatrix {
        let n = self.size();
        let up = self.up_sets();
        // up_neg[b] holds the c with b <= ¬c.
        let mut up_neg = vec![BitRow::new(n); n];
        for b in 0..n {
            for c in up[b].iter_ones() {
                // b <= c, so c = ¬d witnesses exclusivity against d.
                up_neg[b].set(self.neg(ElementId(c as u32)).idx(), true);
            }
        }
        let mut g = BitMatrix::new(n);
        for a in 0..n {
            for b in a..n {
                if up[a].intersects(&up_neg[b]) {
                    g.set_sym(a, b, true);
                }
            }
        }
        g
    }

    /// Checks every axiom and reports all violations found (capped).
    pub fn validate(&self) -> ValidationReport {
        let mut v = Violations::new();
        let n = self.size();

        if n == 0 {
            v.push(AxiomViolation::EmptyCarrier);
            return v.finish();
        }
        for (table, value) in [("zero", self.zero), ("one", self.one)] {
            if value.idx() >= n {
                v.push(AxiomViolation::EntryOutOfRange {
                    table,
                    index: 0,
                    value: value.0,
                });
                return v.finish();
            }
        }
        for (i, &r) in self.neg.iter().enumerate() {
            if r.idx() >= n {
                v.push(AxiomViolation::EntryOutOfRange {
                    table: "neg",
                    index: i,
                    value: r.0,
                });
                return v.finish();
            }
        }
        for (&k, &r) in self.meet.iter().chain(self.join.iter()) {
            if (k >> 32) as usize >= n || (k as u32) as usize >= n || r as usize >= n {
                v.push(AxiomViolation::EntryOutOfRange {
                    table: "meet/join",
                    index: (k >> 32) as usize,
                    value: r,
                });
                return v.finish();
            }
        }

        // Relation shape.
        for a in 0..n {
            if !self.comm.get(a, a) {
                v.push(AxiomViolation::CommNotReflexive {
                    a: ElementId(a as u32),
                });
            }
            for b in a + 1..n {
                if self.comm.get(a, b) != self.comm.get(b, a) {
                    v.push(AxiomViolation::CommNotSymmetric {
                        a: ElementId(a as u32),
                        b: ElementId(b as u32),
                    });
                }
            }
            for constant in [self.zero, self.one] {
                if !(self.comm.get(a, constant.idx()) && self.comm.get(constant.idx(), a)) {
                    v.push(AxiomViolation::ConstantNotCentral {
                        constant,
                        other: ElementId(a as u32),
                    });
                }
            }
        }

        // Complement shape.
        for a in self.elements() {
            if self.neg(self.neg(a)) != a {
                v.push(AxiomViolation::NegNotInvolution { a });
            }
        }

        // Operation domains: defined exactly on commeasurable pairs.
        for a in 0..n as u32 {
            for b in a..n as u32 {
                let is_comm =
                    self.comm.get(a as usize, b as usize) && self.comm.get(b as usize, a as usize);
                for (op, table) in [(OpKind::Meet, &self.meet), (OpKind::Join, &self.join)] {
                    if table.contains_key(&pack(a, b)) != is_comm {
                        v.push(AxiomViolation::OpDomainMismatch {
                            op,
                            a: ElementId(a),
                            b: ElementId(b),
                            has_entry: !is_comm,
                        });
                    }
                }
            }
        }

        if !v.is_empty() {
            // Structural checks below assume the shape checks passed.
            return v.finish();
        }

        // Every pairwise commeasurable set extends to a Boolean subset; it
        // is enough to check that each maximal clique is itself closed and
        // Boolean, since any such set lies inside a maximal clique.
        for clique in self.maximal_comm_cliques() {
            self.check_clique_boolean(&clique, &mut v);
            if v.is_full() {
                break;
            }
        }
        v.finish()
    }

    fn check_clique_boolean(&self, clique: &[ElementId], v: &mut Violations) {
        let member: std::collections::HashSet<ElementId> = clique.iter().copied().collect();
        // Closure under the operations.
        for (i, &a) in clique.iter().enumerate() {
            let na = self.neg(a);
            if !member.contains(&na) {
                if let Some(&w) = clique.iter().find(|&&w| !self.comm(na, w)) {
                    v.push(AxiomViolation::CliqueNotClosed {
                        a,
                        b: a,
                        result: na,
                        not_comm_with: w,
                    });
                    return;
                }
            }
            for &b in &clique[i..] {
                for (op, r) in [(OpKind::Meet, self.meet(a, b)), (OpKind::Join, self.join(a, b))] {
                    let Some(r) = r else { continue };
                    if !member.contains(&r) {
                        let w = clique
                            .iter()
                            .copied()
                            .find(|&w| !self.comm(r, w))
                            .unwrap_or(r);
                        v.push(AxiomViolation::CliqueNotClosed {
                            a,
                            b,
                            result: r,
                            not_comm_with: w,
                        });
                        let _ = op;
                        return;
                    }
                }
            }
        }

        // Boolean structure via the atom decomposition: the map sending each
        // element to the set of atoms below it must be a bijection onto the
        // powerset that turns meet into intersection, join into union and
        // complement into set complement.
        let atoms = self.clique_atoms(clique);
        let k = atoms.len();
        if k > 64 || clique.len() != 1usize << k.min(63) {
            v.push(AxiomViolation::NotBoolean {
                clique_size: clique.len(),
                atom_count: k,
                element: None,
                detail: "clique size is not 2^(number of atoms)".to_owned(),
            });
            return;
        }
        let mask_of = |e: ElementId| -> u64 {
            atoms
                .iter()
                .enumerate()
                .filter(|&(_, &a)| self.leq(a, e))
                .fold(0u64, |m, (i, _)| m | 1 << i)
        };
        let full: u64 = if k == 64 { !0 } else { (1 << k) - 1 };
        let masks: HashMap<ElementId, u64> = clique.iter().map(|&e| (e, mask_of(e))).collect();
        let mut seen: HashMap<u64, ElementId> = HashMap::new();
        for &e in clique {
            if let Some(&other) = seen.get(&masks[&e]) {
                v.push(AxiomViolation::NotBoolean {
                    clique_size: clique.len(),
                    atom_count: k,
                    element: Some(e),
                    detail: format!(
                        "elements {} and {} sit above the same atoms",
                        self.label(other),
                        self.label(e)
                    ),
                });
                return;
            }
            seen.insert(masks[&e], e);
        }
        if masks[&self.zero] != 0 || masks[&self.one] != full {
            v.push(AxiomViolation::NotBoolean {
                clique_size: clique.len(),
                atom_count: k,
                element: Some(self.zero),
                detail: "constants do not decompose as empty/full atom set".to_owned(),
            });
            return;
        }
        for &e in clique {
            if masks[&self.neg(e)] != full & !masks[&e] {
                v.push(AxiomViolation::NotBoolean {
                    clique_size: clique.len(),
                    atom_count: k,
                    element: Some(e),
                    detail: "complement does not complement the atom set".to_owned(),
                });
                return;
            }
        }
        for (i, &a) in clique.iter().enumerate() {
            for &b in &clique[i..] {
                let m = self.meet(a, b).expect("clique pair has a meet");
                let j = self.join(a, b).expect("clique pair has a join");
                if masks[&m] != masks[&a] & masks[&b] || masks[&j] != masks[&a] | masks[&b] {
                    v.push(AxiomViolation::NotBoolean {
                        clique_size: clique.len(),
                        atom_count: k,
                        element: Some(a),
                        detail: format!(
                            "meet/join of {} and {} disagree with the atom decomposition",
                            self.label(a),
                            self.label(b)
                        ),
                    });
                    return;
                }
            }
        }
    }
}

/// Error from [`FinitePBA::boolean`] on an empty atom set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("a Boolean algebra needs at least one atom")]
pub struct EmptyAtomSet;

/// One violated axiom, with enough context to locate the offending cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    EmptyCarrier,
    EntryOutOfRange {
        table: &'static str,
        index: usize,
        value: u32,
    },
    CommNotReflexive {
        a: ElementId,
    },
    CommNotSymmetric {
        a: ElementId,
        b: ElementId,
    },
    ConstantNotCentral {
        constant: ElementId,
        other: ElementId,
    },
    NegNotInvolution {
        a: ElementId,
    },
    OpDomainMismatch {
        op: OpKind,
        a: ElementId,
        b: ElementId,
        /// True when the table has an entry for a non-commeasurable pair;
        /// false when a commeasurable pair has no entry.
        has_entry: bool,
    },
    CliqueNotClosed {
        a: ElementId,
        b: ElementId,
        result: ElementId,
        not_comm_with: ElementId,
    },
    NotBoolean {
        clique_size: usize,
        atom_count: usize,
        element: Option<ElementId>,
        detail: String,
    },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::EmptyCarrier => write!(f, "carrier is empty"),
            AxiomViolation::EntryOutOfRange {
                table,
                index,
                value,
            } => write!(
                f,
                "{table} entry at {index} references element {value} outside the carrier"
            ),
            AxiomViolation::CommNotReflexive { a } => {
                write!(f, "element {a} is not commeasurable with itself")
            }
            AxiomViolation::CommNotSymmetric { a, b } => {
                write!(f, "commeasurability of {a} and {b} is one-sided")
            }
            AxiomViolation::ConstantNotCentral { constant, other } => {
                write!(f, "constant {constant} is not commeasurable with {other}")
            }
            AxiomViolation::NegNotInvolution { a } => {
                write!(f, "negation is not an involution at {a}")
            }
            AxiomViolation::OpDomainMismatch { op, a, b, has_entry } => {
                if *has_entry {
                    write!(f, "{op} is defined on non-commeasurable pair ({a}, {b})")
                } else {
                    write!(f, "{op} is missing on commeasurable pair ({a}, {b})")
                }
            }
            AxiomViolation::CliqueNotClosed {
                a,
                b,
                result,
                not_comm_with,
            } => write!(
                f,
                "operation on ({a}, {b}) yields {result} which is not commeasurable with clique member {not_comm_with}"
            ),
            AxiomViolation::NotBoolean {
                clique_size,
                atom_count,
                element,
                detail,
            } => {
                write!(
                    f,
                    "clique of size {clique_size} with {atom_count} atoms is not Boolean"
                )?;
                if let Some(e) = element {
                    write!(f, " at {e}")?;
                }
                write!(f, ": {detail}")
            }
        }
    }
}

const MAX_VIOLATIONS: usize = 50;

struct Violations(Vec<AxiomViolation>);

impl Violations {
    fn new() -> Self {
        Violations(Vec::new())
    }
    fn push(&mut self, v: AxiomViolation) {
        if self.0.len() < MAX_VIOLATIONS {
            self.0.push(v);
        }
    }
    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    fn is_full(&self) -> bool {
        self.0.len() >= MAX_VIOLATIONS
    }
    fn finish(self) -> ValidationReport {
        ValidationReport {
            ok: self.0.is_empty(),
            violations: self.0,
        }
    }
}

/// Outcome of [`FinitePBA::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<AxiomViolation>,
}

/// A coproduct `A ⊕ B`: disjoint union with the constants identified and no
/// commeasurability across the summands.
pub struct Coproduct {
    pub algebra: FinitePBA,
    /// Images of the left summand's elements.
    pub left: Vec<ElementId>,
    /// Images of the right summand's elements.
    pub right: Vec<ElementId>,
}

/// Coproduct of two algebras. Labels are kept when the non-constant labels
/// of the summands are disjoint; otherwise they get `l:`/`r:` prefixes.
pub fn coproduct(a: &FinitePBA, b: &FinitePBA) -> Coproduct {
    let mut parts = coproduct_many(&[a, b]);
    let right = parts.images.pop().expect("two images");
    let left = parts.images.pop().expect("two images");
    Coproduct {
        algebra: parts.algebra,
        left,
        right,
    }
}

pub(crate) struct CoproductMany {
    pub algebra: FinitePBA,
    pub images: Vec<Vec<ElementId>>,
}

/// N-ary coproduct used by scenario constructions; the binary public
/// [`coproduct`] goes through here.
pub(crate) fn coproduct_many(parts: &[&FinitePBA]) -> CoproductMany {
    // Decide whether labels need prefixes.
    let mut seen = std::collections::HashSet::new();
    let mut clash = false;
    for p in parts {
        for e in p.elements() {
            if e == p.zero() || e == p.one() {
                continue;
            }
            if !seen.insert(p.label(e).to_owned()) {
                clash = true;
            }
        }
    }
    let prefix = |i: usize| -> String {
        if !clash {
            String::new()
        } else if parts.len() == 2 {
            ["l:", "r:"][i].to_owned()
        } else {
            format!("s{i}:")
        }
    };

    let mut labels = vec!["0".to_owned(), "1".to_owned()];
    let mut images: Vec<Vec<ElementId>> = Vec::new();
    for (pi, p) in parts.iter().enumerate() {
        let mut image = vec![ElementId(0); p.size()];
        for e in p.elements() {
            image[e.idx()] = if e == p.zero() {
                ElementId(0)
            } else if e == p.one() {
                ElementId(1)
            } else {
                let id = ElementId(labels.len() as u32);
                labels.push(format!("{}{}", prefix(pi), p.label(e)));
                id
            };
        }
        images.push(image);
    }

    let n = labels.len();
    let zero = ElementId(0);
    let one = ElementId(1);
    let mut neg = vec![one, zero];
    neg.resize(n, zero);
    let mut comm = BitMatrix::new(n);
    let mut meet = HashMap::new();
    let mut join = HashMap::new();
    for i in 0..n {
        comm.set_sym(0, i, true);
        comm.set_sym(1, i, true);
        comm.set(i, i, true);
        let e = i as u32;
        meet.insert(pack(0, e), 0);
        join.insert(pack(0, e), e);
        meet.insert(pack(1, e), e);
        join.insert(pack(1, e), 1);
        meet.insert(pack(e, e), e);
        join.insert(pack(e, e), e);
    }
    for (p, image) in parts.iter().zip(&images) {
        for a in p.elements() {
            neg[image[a.idx()].idx()] = image[p.neg(a).idx()];
            for b in p.elements() {
                if a <= b && p.comm(a, b) {
                    let (ia, ib) = (image[a.idx()], image[b.idx()]);
                    comm.set_sym(ia.idx(), ib.idx(), true);
                    let m = image[p.meet(a, b).expect("defined on comm pair").idx()];
                    let j = image[p.join(a, b).expect("defined on comm pair").idx()];
                    meet.insert(pack(ia.0, ib.0), m.0);
                    join.insert(pack(ia.0, ib.0), j.0);
                }
            }
        }
    }
    let algebra = FinitePBA::assemble(labels, zero, one, neg, comm, meet, join);
    CoproductMany { algebra, images }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn four() -> FinitePBA {
        FinitePBA::boolean(&["p", "q"]).unwrap()
    }

    #[test]
    fn boolean_two_shape() {
        let two = FinitePBA::two();
        assert_eq!(two.size(), 2);
        assert_eq!(two.zero(), ElementId(0));
        assert_eq!(two.one(), ElementId(1));
        assert_eq!(two.neg(two.zero()), two.one());
        assert!(two.validate().ok);
    }

    #[test]
    fn boolean_four_tables() {
        let a = four();
        assert_eq!(a.size(), 4);
        assert!(a.validate().ok);
        let p = a.element_by_label("{p}").unwrap();
        let q = a.element_by_label("{q}").unwrap();
        assert_eq!(a.neg(p), q);
        assert_eq!(a.meet(p, q), Some(a.zero()));
        assert_eq!(a.join(p, q), Some(a.one()));
        assert!(a.leq(p, a.one()));
        assert!(!a.leq(a.one(), p));
    }

    #[test]
    fn boolean_rejects_empty_atoms() {
        assert_eq!(FinitePBA::boolean(&[]).unwrap_err(), EmptyAtomSet);
    }

    #[test]
    fn sixteen_is_valid_and_atomic() {
        let a = FinitePBA::boolean(&["a", "b", "c", "d"]).unwrap();
        assert_eq!(a.size(), 16);
        assert!(a.validate().ok);
        let cliques = a.maximal_comm_cliques();
        assert_eq!(cliques.len(), 1);
        assert_eq!(a.clique_atoms(&cliques[0]).len(), 4);
    }

    #[test]
    fn coproduct_size_and_separation() {
        let a = four();
        let b = four();
        let c = coproduct(&a, &b);
        // 4 + 4 - 2: constants identified.
        assert_eq!(c.algebra.size(), 6);
        assert!(c.algebra.validate().ok);
        let p_left = c.left[a.element_by_label("{p}").unwrap().idx()];
        let p_right = c.right[b.element_by_label("{p}").unwrap().idx()];
        assert_ne!(p_left, p_right);
        assert!(!c.algebra.comm(p_left, p_right));
        assert!(c.algebra.meet(p_left, p_right).is_none());
        assert_eq!(c.left[a.zero().idx()], c.algebra.zero());
        assert_eq!(c.right[b.one().idx()], c.algebra.one());
        // Prefixed labels, since both summands use {p}.
        assert!(c.algebra.label(p_left).starts_with("l:"));
    }

    #[test]
    fn coproduct_of_twos_is_two() {
        let two = FinitePBA::two();
        let c = coproduct(&two, &two);
        assert_eq!(c.algebra.size(), 2);
        assert!(c.algebra.validate().ok);
    }

    #[test]
    fn exclusive_within_boolean() {
        let a = four();
        let p = a.element_by_label("{p}").unwrap();
        let q = a.element_by_label("{q}").unwrap();
        // p <= p and q <= ¬p, and no smaller witness exists.
        assert_eq!(a.exclusive(p, q), Some(p));
        // p against itself would need p below both c and ¬c, hence p = 0.
        assert_eq!(a.exclusive(p, p), None);
        assert_eq!(a.exclusive(a.one(), a.one()), None);
        assert_eq!(a.exclusive(a.zero(), a.zero()), Some(a.zero()));
    }

    #[test]
    fn exclusivity_graph_matches_pointwise() {
        let c = coproduct(&four(), &four());
        let g = c.algebra.exclusivity_graph();
        for a in c.algebra.elements() {
            for b in c.algebra.elements() {
                assert_eq!(
                    g.get(a.idx(), b.idx()),
                    c.algebra.exclusive(a, b).is_some(),
                    "mismatch at ({a}, {b})"
                );
            }
        }
    }

    #[test]
    fn validator_rejects_broken_symmetry() {
        let a = four();
        let mut pairs = a.comm_pairs();
        // Remove one direction of a proper pair.
        let idx = pairs
            .iter()
            .position(|&(x, y)| x.0 == 2 && y.0 == 3)
            .unwrap();
        pairs.remove(idx);
        let broken = FinitePBA::from_parts(
            a.labels().to_vec(),
            a.zero(),
            a.one(),
            (0..a.size()).map(|i| a.neg(ElementId(i as u32))).collect(),
            &pairs,
            &a.meet_entries(),
            &a.join_entries(),
        );
        let report = broken.validate();
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, AxiomViolation::CommNotSymmetric { a, b } if a.0 == 2 && b.0 == 3)));
    }

    #[test]
    fn validator_rejects_missing_meet() {
        let a = four();
        let mut meets = a.meet_entries();
        let idx = meets
            .iter()
            .position(|&(x, y, _)| x.0 == 2 && y.0 == 3)
            .unwrap();
        meets.remove(idx);
        let broken = FinitePBA::from_parts(
            a.labels().to_vec(),
            a.zero(),
            a.one(),
            (0..a.size()).map(|i| a.neg(ElementId(i as u32))).collect(),
            &a.comm_pairs(),
            &meets,
            &a.join_entries(),
        );
        let report = broken.validate();
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            AxiomViolation::OpDomainMismatch { op: OpKind::Meet, a, b, has_entry: false } if a.0 == 2 && b.0 == 3
        )));
    }

    #[test]
    fn validator_rejects_wrong_meet_value() {
        let a = four();
        let mut meets = a.meet_entries();
        let idx = meets
            .iter()
            .position(|&(x, y, _)| x.0 == 1 && y.0 == 2)
            .unwrap();
        meets[idx].2 = ElementId(3);
        let broken = FinitePBA::from_parts(
            a.labels().to_vec(),
            a.zero(),
            a.one(),
            (0..a.size()).map(|i| a.neg(ElementId(i as u32))).collect(),
            &a.comm_pairs(),
            &meets,
            &a.join_entries(),
        );
        let report = broken.validate();
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, AxiomViolation::NotBoolean { .. })));
    }

    #[test]
    fn trivial_algebra_is_valid() {
        // One element, 0 = 1: the degenerate algebra.
        let t = FinitePBA::from_parts(
            vec!["0".to_owned()],
            ElementId(0),
            ElementId(0),
            vec![ElementId(0)],
            &[(ElementId(0), ElementId(0))],
            &[(ElementId(0), ElementId(0), ElementId(0))],
            &[(ElementId(0), ElementId(0), ElementId(0))],
        );
        assert!(t.validate().ok);
    }
}
