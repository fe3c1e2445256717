//! Algebras glued from overlapping measurement contexts.
//!
//! A spec lists named contexts, each with a list of atom names; sharing an
//! atom name across contexts glues the two local Boolean algebras along it.
//! Elements of the glued algebra are equivalence classes of
//! (context, atom-subset) pairs: subsets of the shared atoms are identified
//! across the contexts sharing them, and the identification is closed under
//! per-context complement. Two classes are commeasurable exactly when they
//! have representatives in a common context.

use super::{ElementId, FinitePBA};
use crate::bitset::BitMatrix;
use std::collections::HashMap;
use std::fmt;

/// One context: a name and its atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedContext {
    pub name: String,
    pub atoms: Vec<String>,
}

/// Reference to one element of a glued algebra, as a context name and a
/// subset of that context's atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedElementRef {
    pub context: String,
    pub atoms: Vec<String>,
}

/// Combinatorial description of a glued-context algebra.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GluedContextSpec {
    pub contexts: Vec<GluedContext>,
    /// Elements to be forced equal to 1 (applied by the document loader via
    /// the saturation engine, not by the structural gluing itself).
    pub forced_true: Vec<GluedElementRef>,
    /// Elements to be forced equal to 0.
    pub forced_false: Vec<GluedElementRef>,
}

/// Why a glued-context spec was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GluedError {
    NoContexts,
    EmptyContext { context: String },
    DuplicateContextName { name: String },
    DuplicateAtom { context: String, atom: String },
    ContextTooLarge { context: String, atoms: usize },
    /// The identification closure forces 0 = 1.
    Collapse,
    /// The closure identifies two distinct subsets of one context, so the
    /// local operations are no longer well defined.
    IllDefined { context: String, a: Vec<String>, b: Vec<String> },
    /// The pasted structure is not a partial Boolean algebra: some set of
    /// pairwise-commeasurable elements fits in no common Boolean block.
    /// Happens when three contexts pairwise share atoms, since the local
    /// join of two shared atoms has no context in common with the third.
    AxiomViolation { witness: String },
    UnknownContext { context: String },
    UnknownAtom { context: String, atom: String },
}

impl fmt::Display for GluedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GluedError::NoContexts => write!(f, "spec has no contexts"),
            GluedError::EmptyContext { context } => {
                write!(f, "context {context} has no atoms")
            }
            GluedError::DuplicateContextName { name } => {
                write!(f, "context name {name} appears twice")
            }
            GluedError::DuplicateAtom { context, atom } => {
                write!(f, "atom {atom} appears twice in context {context}")
            }
            GluedError::ContextTooLarge { context, atoms } => {
                write!(f, "context {context} has {atoms} atoms; the limit is {MAX_CONTEXT_ATOMS}")
            }
            GluedError::Collapse => write!(f, "gluing identifies 0 with 1"),
            GluedError::IllDefined { context, a, b } => write!(
                f,
                "gluing identifies distinct subsets {{{}}} and {{{}}} of context {context}",
                a.join(","),
                b.join(",")
            ),
            GluedError::AxiomViolation { witness } => {
                write!(f, "pasted contexts do not form a partial Boolean algebra: {witness}")
            }
            GluedError::UnknownContext { context } => {
                write!(f, "reference to unknown context {context}")
            }
            GluedError::UnknownAtom { context, atom } => {
                write!(f, "context {context} has no atom {atom}")
            }
        }
    }
}

impl std::error::Error for GluedError {}

const MAX_CONTEXT_ATOMS: usize = 16;

/// Union-find over the local (context, subset) nodes.
struct UnionFind(Vec<u32>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n as u32).collect())
    }
    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let gp = self.0[self.0[x as usize] as usize];
            self.0[x as usize] = gp;
            x = gp;
        }
        x
    }
    /// Returns true when the two were in different classes.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi as usize] = lo;
        true
    }
}

/// Builds the glued algebra. The result always passes
/// [`FinitePBA::validate`]; specs whose closure breaks an axiom are
/// rejected with a [`GluedError`] instead. The `forced_*` lists are not
/// applied here.
pub fn from_glued_contexts(spec: &GluedContextSpec) -> Result<FinitePBA, GluedError> {
    let layout = GluedLayout::build(spec)?;
    Ok(layout.algebra)
}

/// Resolves an element reference against a freshly built layout. Exposed
/// for the document loader, which needs ids to apply forcing.
pub fn resolve_glued_element(
    spec: &GluedContextSpec,
    r: &GluedElementRef,
) -> Result<ElementId, GluedError> {
    let layout = GluedLayout::build(spec)?;
    layout.resolve(spec, r)
}

pub(crate) struct GluedLayout {
    pub algebra: FinitePBA,
    /// Element id of each local (context, subset) node, indexed by
    /// `node_base[ci] + mask`.
    node_element: Vec<ElementId>,
    node_base: Vec<usize>,
}

impl GluedLayout {
    pub(crate) fn build(spec: &GluedContextSpec) -> Result<GluedLayout, GluedError> {
        if spec.contexts.is_empty() {
            return Err(GluedError::NoContexts);
        }
        let mut names = std::collections::HashSet::new();
        for c in &spec.contexts {
            if !names.insert(&c.name) {
                return Err(GluedError::DuplicateContextName {
                    name: c.name.clone(),
                });
            }
            if c.atoms.is_empty() {
                return Err(GluedError::EmptyContext {
                    context: c.name.clone(),
                });
            }
            if c.atoms.len() > MAX_CONTEXT_ATOMS {
                return Err(GluedError::ContextTooLarge {
                    context: c.name.clone(),
                    atoms: c.atoms.len(),
                });
            }
            let mut atoms = std::collections::HashSet::new();
            for a in &c.atoms {
                if !atoms.insert(a) {
                    return Err(GluedError::DuplicateAtom {
                        context: c.name.clone(),
                        atom: a.clone(),
                    });
                }
            }
        }

        // Node layout: context ci contributes 2^{k_i} nodes, one per subset.
        let k: Vec<usize> = spec.contexts.iter().map(|c| c.atoms.len()).collect();
        let mut node_base = Vec::with_capacity(k.len());
        let mut total = 0usize;
        for &ki in &k {
            node_base.push(total);
            total += 1 << ki;
        }
        let mut uf = UnionFind::new(total);

        // Identify equal subsets of shared atoms across each context pair.
        for ci in 0..spec.contexts.len() {
            for cj in ci + 1..spec.contexts.len() {
                let shared: Vec<(usize, usize)> = spec.contexts[ci]
                    .atoms
                    .iter()
                    .enumerate()
                    .filter_map(|(ai, a)| {
                        spec.contexts[cj]
                            .atoms
                            .iter()
                            .position(|b| b == a)
                            .map(|aj| (ai, aj))
                    })
                    .collect();
                for sub in 0..1usize << shared.len() {
                    let mut mi = 0usize;
                    let mut mj = 0usize;
                    for (bit, &(ai, aj)) in shared.iter().enumerate() {
                        if sub >> bit & 1 == 1 {
                            mi |= 1 << ai;
                            mj |= 1 << aj;
                        }
                    }
                    uf.union((node_base[ci] + mi) as u32, (node_base[cj] + mj) as u32);
                }
            }
        }

        // Close under per-context complement: if two nodes are identified,
        // so are their complements. Iterate to a fixpoint.
        let complement_of = |node: usize| -> usize {
            let ci = match node_base.binary_search(&node) {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            let mask = node - node_base[ci];
            node_base[ci] + ((1 << k[ci]) - 1 - mask)
        };
        loop {
            let mut changed = false;
            let mut class_members: HashMap<u32, Vec<usize>> = HashMap::new();
            for node in 0..total {
                class_members.entry(uf.find(node as u32)).or_default().push(node);
            }
            for members in class_members.values() {
                let first = complement_of(members[0]) as u32;
                for &m in &members[1..] {
                    changed |= uf.union(first, complement_of(m) as u32);
                }
            }
            if !changed {
                break;
            }
        }

        // Collapse and well-definedness checks.
        let zero_root = uf.find(node_base[0] as u32);
        let one_root = uf.find((node_base[0] + (1 << k[0]) - 1) as u32);
        if zero_root == one_root {
            return Err(GluedError::Collapse);
        }
        let mut rep_of: HashMap<(u32, usize), usize> = HashMap::new();
        for ci in 0..spec.contexts.len() {
            for mask in 0..1usize << k[ci] {
                let root = uf.find((node_base[ci] + mask) as u32);
                if let Some(&other) = rep_of.get(&(root, ci)) {
                    let atom_names = |m: usize| -> Vec<String> {
                        spec.contexts[ci]
                            .atoms
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| m >> i & 1 == 1)
                            .map(|(_, a)| a.clone())
                            .collect()
                    };
                    return Err(GluedError::IllDefined {
                        context: spec.contexts[ci].name.clone(),
                        a: atom_names(other),
                        b: atom_names(mask),
                    });
                }
                rep_of.insert((root, ci), mask);
            }
        }

        // Class labels: "0"/"1" for the constants, otherwise the atom-name
        // set of the lexicographically least rendering among members.
        let mut class_label: HashMap<u32, String> = HashMap::new();
        for ci in 0..spec.contexts.len() {
            for mask in 0..1usize << k[ci] {
                let root = uf.find((node_base[ci] + mask) as u32);
                if root == zero_root || root == one_root {
                    continue;
                }
                let mut atoms: Vec<&str> = spec.contexts[ci]
                    .atoms
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| mask >> i & 1 == 1)
                    .map(|(_, a)| a.as_str())
                    .collect();
                atoms.sort_unstable();
                let label = format!("{{{}}}", atoms.join(","));
                class_label
                    .entry(root)
                    .and_modify(|l| {
                        if label < *l {
                            *l = label.clone();
                        }
                    })
                    .or_insert(label);
            }
        }

        // Element ids: 0, then 1, then the rest sorted by label.
        let mut rest: Vec<(String, u32)> =
            class_label.iter().map(|(&r, l)| (l.clone(), r)).collect();
        rest.sort();
        let mut id_of_root: HashMap<u32, u32> = HashMap::new();
        let mut labels = vec!["0".to_owned(), "1".to_owned()];
        id_of_root.insert(zero_root, 0);
        id_of_root.insert(one_root, 1);
        for (label, root) in rest {
            id_of_root.insert(root, labels.len() as u32);
            labels.push(label);
        }
        let n = labels.len();

        let mut node_element = vec![ElementId(0); total];
        for node in 0..total {
            node_element[node] = ElementId(id_of_root[&uf.find(node as u32)]);
        }

        // Tables: walk each context's local Boolean algebra.
        let mut comm = BitMatrix::new(n);
        let mut meet: HashMap<u64, u32> = HashMap::new();
        let mut join: HashMap<u64, u32> = HashMap::new();
        let mut neg = vec![ElementId(0); n];
        let pack = |a: u32, b: u32| -> u64 {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            (lo as u64) << 32 | hi as u64
        };
        for ci in 0..spec.contexts.len() {
            let full = (1usize << k[ci]) - 1;
            for ma in 0..=full {
                let ea = node_element[node_base[ci] + ma];
                neg[ea.idx()] = node_element[node_base[ci] + (full - ma)];
                for mb in ma..=full {
                    let eb = node_element[node_base[ci] + mb];
                    let em = node_element[node_base[ci] + (ma & mb)];
                    let ej = node_element[node_base[ci] + (ma | mb)];
                    comm.set_sym(ea.idx(), eb.idx(), true);
                    let key = pack(ea.0, eb.0);
                    // Distinct contexts must agree on shared pairs; a clash
                    // surfaces as an ill-defined table.
                    if let Some(&prev) = meet.get(&key) {
                        if prev != em.0 {
                            return Err(GluedError::IllDefined {
                                context: spec.contexts[ci].name.clone(),
                                a: vec![labels[prev as usize].clone()],
                                b: vec![labels[em.idx()].clone()],
                            });
                        }
                    }
                    meet.insert(key, em.0);
                    if let Some(&prev) = join.get(&key) {
                        if prev != ej.0 {
                            return Err(GluedError::IllDefined {
                                context: spec.contexts[ci].name.clone(),
                                a: vec![labels[prev as usize].clone()],
                                b: vec![labels[ej.idx()].clone()],
                            });
                        }
                    }
                    join.insert(key, ej.0);
                }
            }
        }

        let algebra = FinitePBA::assemble(
            labels,
            ElementId(0),
            ElementId(1),
            neg,
            comm,
            meet,
            join,
        );
        let report = algebra.validate();
        if !report.ok {
            // Everything local is consistent by construction, so what the
            // validator catches here is global: a pairwise-commeasurable
            // set with no common block, as in three contexts that pairwise
            // share an atom.
            return Err(GluedError::AxiomViolation {
                witness: report.violations[0].to_string(),
            });
        }
        Ok(GluedLayout {
            algebra,
            node_element,
            node_base,
        })
    }

    pub(crate) fn resolve(
        &self,
        spec: &GluedContextSpec,
        r: &GluedElementRef,
    ) -> Result<ElementId, GluedError> {
        let ci = spec
            .contexts
            .iter()
            .position(|c| c.name == r.context)
            .ok_or_else(|| GluedError::UnknownContext {
                context: r.context.clone(),
            })?;
        let mut mask = 0usize;
        for atom in &r.atoms {
            let i = spec.contexts[ci]
                .atoms
                .iter()
                .position(|a| a == atom)
                .ok_or_else(|| GluedError::UnknownAtom {
                    context: r.context.clone(),
                    atom: atom.clone(),
                })?;
            mask |= 1 << i;
        }
        Ok(self.node_element[self.node_base[ci] + mask])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(contexts: &[(&str, &[&str])]) -> GluedContextSpec {
        GluedContextSpec {
            contexts: contexts
                .iter()
                .map(|&(name, atoms)| GluedContext {
                    name: name.to_owned(),
                    atoms: atoms.iter().map(|&a| a.to_owned()).collect(),
                })
                .collect(),
            forced_true: Vec::new(),
            forced_false: Vec::new(),
        }
    }

    #[test]
    fn single_context_is_boolean() {
        let a = from_glued_contexts(&spec(&[("C", &["u", "v"])])).unwrap();
        assert_eq!(a.size(), 4);
        assert!(a.validate().ok);
        assert!(a.element_by_label("{u}").is_some());
        assert!(a.element_by_label("{v}").is_some());
    }

    #[test]
    fn shared_atom_glues_two_squares() {
        // Contexts {u,v} and {u,w} share u, so {u} is one class and the
        // complement closure glues {v} with {w}. With the constants that
        // makes exactly 4 elements.
        let a = from_glued_contexts(&spec(&[("C", &["u", "v"]), ("D", &["u", "w"])])).unwrap();
        assert!(a.validate().ok);
        assert_eq!(a.size(), 4);
        let v = a.element_by_label("{v}").unwrap();
        // {v} and {w} are one class; the label is the lexicographically
        // least rendering.
        assert_eq!(a.element_by_label("{w}"), None);
        let u = a.element_by_label("{u}").unwrap();
        assert_eq!(a.neg(u), v);
    }

    #[test]
    fn disjoint_contexts_are_a_coproduct() {
        let a = from_glued_contexts(&spec(&[("C", &["u", "v"]), ("D", &["x", "w"])])).unwrap();
        assert!(a.validate().ok);
        // 4 + 4 - 2: only the constants are shared.
        assert_eq!(a.size(), 6);
        assert!(!a.comm(
            a.element_by_label("{u}").unwrap(),
            a.element_by_label("{x}").unwrap()
        ));
    }

    #[test]
    fn degenerate_sharing_is_rejected() {
        // In context C the subset {u} is the local 1; in context D it is a
        // proper element. The closure then wants D's {u} equal to D's
        // {u,v}, which the well-definedness check refuses.
        let err = from_glued_contexts(&spec(&[("C", &["u"]), ("D", &["u", "v"])])).unwrap_err();
        assert!(matches!(err, GluedError::IllDefined { .. } | GluedError::Collapse));
    }

    #[test]
    fn pairwise_sharing_triangle_is_rejected() {
        // {a}, {b}, {c} are pairwise commeasurable through three different
        // contexts, but the join of {a} and {b} lives only in C and shares
        // no context with {c}: no Boolean block holds all three, so the
        // pasting is not a partial Boolean algebra.
        let err = from_glued_contexts(&spec(&[
            ("C", &["a", "b", "x"]),
            ("D", &["b", "c", "y"]),
            ("E", &["c", "a", "z"]),
        ]))
        .unwrap_err();
        assert!(matches!(err, GluedError::AxiomViolation { .. }), "{err:?}");
    }

    #[test]
    fn empty_and_duplicate_specs_rejected() {
        assert_eq!(
            from_glued_contexts(&GluedContextSpec::default()).unwrap_err(),
            GluedError::NoContexts
        );
        let err = from_glued_contexts(&spec(&[("C", &[])])).unwrap_err();
        assert!(matches!(err, GluedError::EmptyContext { .. }));
        let err = from_glued_contexts(&spec(&[("C", &["u", "u"])])).unwrap_err();
        assert!(matches!(err, GluedError::DuplicateAtom { .. }));
        let err = from_glued_contexts(&spec(&[("C", &["u"]), ("C", &["v"])])).unwrap_err();
        assert!(matches!(err, GluedError::DuplicateContextName { .. }));
    }

    #[test]
    fn resolve_finds_glued_elements() {
        let s = spec(&[("C", &["u", "v"]), ("D", &["u", "w"])]);
        let a = from_glued_contexts(&s).unwrap();
        let from_c = resolve_glued_element(
            &s,
            &GluedElementRef {
                context: "C".into(),
                atoms: vec!["u".into()],
            },
        )
        .unwrap();
        let from_d = resolve_glued_element(
            &s,
            &GluedElementRef {
                context: "D".into(),
                atoms: vec!["u".into()],
            },
        )
        .unwrap();
        assert_eq!(from_c, from_d);
        assert_eq!(a.label(from_c), "{u}");
    }
}
