//! Free extension of a finite partial Boolean algebra by commeasurability
//! and equality constraints.
//!
//! [`saturate`] closes a term universe over the base algebra under the
//! inference rules for definedness, commeasurability, and equivalence:
//! base structure embeds, requested pairs become commeasurable, forced
//! pairs become equal, every commeasurable pair gains a meet and a join,
//! negation is total, and Boolean identities hold on every set of
//! pairwise commeasurable terms. Term creation is staged by depth; rule
//! closure between stages is exhaustive. The result is the quotient at
//! the requested depth together with a flag telling whether one more
//! stage would change anything.
//!
//! Equivalence classes live in a union-find over hash-consed nodes, so
//! the expensive rule is the Boolean one; see [`boolean_pass`] for the
//! semantic realisation used here and `lift` for the induced-morphism
//! machinery that the tensor and state modules build on.

mod boolean_pass;
mod engine;
mod lift;

pub use lift::{
    coequaliser, lep_saturate, lift_isomorphism, lift_morphism, CoequaliserError, IsoFailure,
    LiftError,
};

use crate::algebra::{ElementId, FinitePBA};
use crate::bitset::BitMatrix;
use boolean_pass::{boolean_pass, PassOutcome};
use engine::{Engine, NodeKind, NODE_BUDGET};
use std::collections::{HashMap, HashSet};
use std::fmt;

/// A free-extension problem: the base algebra, the pairs to make
/// commeasurable, the pairs to make equal, whether the exclusivity rule
/// participates in the closure, and the term-depth ceiling.
pub struct ExtensionSpec<'a> {
    pub base: &'a FinitePBA,
    pub relation: Vec<(ElementId, ElementId)>,
    pub force_equal: Vec<(ElementId, ElementId)>,
    pub lep_rule: bool,
    pub depth_limit: u32,
}

/// A rule application recorded during saturation. Node numbers identify
/// term nodes in creation order; they are only meaningful relative to one
/// run.
#[derive(Debug, Clone)]
pub enum TraceEvent {
    Created { node: u32, kind: String },
    Merged { a: u32, b: u32, rule: &'static str },
    Comm { a: u32, b: u32, rule: &'static str },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Created { node, kind } => write!(f, "create n{node} {kind}"),
            TraceEvent::Merged { a, b, rule } => write!(f, "merge n{a} n{b} [{rule}]"),
            TraceEvent::Comm { a, b, rule } => write!(f, "comm n{a} n{b} [{rule}]"),
        }
    }
}

/// The extension spec referenced an element outside the base carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidExtensionSpec {
    pub element: ElementId,
}

impl fmt::Display for InvalidExtensionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "extension spec references {} outside the base carrier", self.element)
    }
}

impl std::error::Error for InvalidExtensionSpec {}

/// Data needed to induce morphisms out of a quotient: the term nodes, the
/// class each ended up in, and the carrier element of each class.
pub(crate) struct LiftData {
    pub kinds: Vec<NodeKind>,
    pub final_root: Vec<u32>,
    pub element_of_root: HashMap<u32, ElementId>,
}

/// The extracted quotient of a free extension.
pub struct QuotientAlgebra {
    pub algebra: FinitePBA,
    /// One more stage would create no class, merge none, and add no
    /// commeasurability: the quotient is the full free extension.
    pub stabilized: bool,
    /// The constants became equal; the quotient is the one-element
    /// algebra and every element of it.
    pub collapsed: bool,
    /// Images of the base elements under the quotient map.
    pub eta: Vec<ElementId>,
    /// Commeasurable class pairs left out of the extracted algebra
    /// because their meet or join was not materialised at this depth.
    /// Always zero when stabilized.
    pub dropped_comm_pairs: usize,
    /// Classes whose negation was not materialised (budget exhaustion
    /// only); their negation is patched to themselves in the tables.
    pub missing_negations: usize,
    /// State-invariant checks performed during the run (debug builds).
    pub invariant_checks: usize,
    pub(crate) lift: LiftData,
}

impl QuotientAlgebra {
    pub fn class_of(&self, base_element: ElementId) -> ElementId {
        self.eta[base_element.idx()]
    }
}

pub fn saturate(spec: &ExtensionSpec) -> Result<QuotientAlgebra, InvalidExtensionSpec> {
    saturate_with_trace(spec, false).map(|(q, _)| q)
}

/// As [`saturate`], optionally recording every rule application.
pub fn saturate_with_trace(
    spec: &ExtensionSpec,
    trace: bool,
) -> Result<(QuotientAlgebra, Vec<TraceEvent>), InvalidExtensionSpec> {
    let n = spec.base.size();
    for &(a, b) in spec.relation.iter().chain(spec.force_equal.iter()) {
        for e in [a, b] {
            if e.idx() >= n {
                return Err(InvalidExtensionSpec { element: e });
            }
        }
    }

    let mut e = Engine::new(spec.base, &spec.relation, &spec.force_equal, spec.lep_rule, trace);
    settle(&mut e);
    if cfg!(debug_assertions) && !e.collapsed {
        let t = std::time::Instant::now();
        e.check_invariants(&spec.relation, &spec.force_equal);
        eprintln!("check_invariants: {:?}", t.elapsed());
    }
    for _ in 1..=spec.depth_limit {
        if e.collapsed || e.budget_hit {
            break;
        }
        let t = std::time::Instant::now();
        creation_round(&mut e);
        eprintln!("creation_round: {:?} nodes={}", t.elapsed(), e.node_count());
        settle(&mut e);
        if cfg!(debug_assertions) && !e.collapsed {
            let t = std::time::Instant::now();
            e.check_invariants(&spec.relation, &spec.force_equal);
            eprintln!("check_invariants: {:?}", t.elapsed());
        }
    }

    if e.collapsed {
        let q = extract_collapsed(&mut e);
        let t = e.trace.take().unwrap_or_default();
        return Ok((q, t));
    }

    let (q_pre, raw_comm_pre) = extract(&mut e, false);
    if e.budget_hit || e.solver_skip {
        let t = e.trace.take().unwrap_or_default();
        return Ok((q_pre, t));
    }

    // Stabilization probe: one extra stage. Quiescence means the
    // extraction above is the whole free extension; the post-probe state
    // then also carries a meet, join, and negation for every class pair,
    // so re-extracting from it completes the tables.
    let n_pre = e.node_count();
    creation_round(&mut e);
    settle(&mut e);
    if e.collapsed {
        let q = extract_collapsed(&mut e);
        let t = e.trace.take().unwrap_or_default();
        return Ok((q, t));
    }
    let quiet = !e.budget_hit && !e.solver_skip && probe_quiet(&mut e, n_pre, &q_pre, &raw_comm_pre);
    let t = e.trace.take().unwrap_or_default();
    if quiet {
        let (q, _) = extract(&mut e, true);
        assert_eq!(q.dropped_comm_pairs, 0, "stabilized extraction left table gaps");
        assert_eq!(q.missing_negations, 0, "stabilized extraction left negation gaps");
        Ok((q, t))
    } else {
        Ok((q_pre, t))
    }
}

/// Runs rule closure to a fixpoint: congruence rebuilding, the
/// commeasurability propagation rules, the exclusivity rule when enabled,
/// and the Boolean pass, interleaved until none of them change anything.
fn settle(e: &mut Engine) {
    loop {
        if e.collapsed {
            return;
        }
        let t = std::time::Instant::now();
        e.rebuild();
        eprintln!("  rebuild: {:?} nodes={}", t.elapsed(), e.node_count());
        let t = std::time::Instant::now();
        e.drain_comm();
        eprintln!("  drain_comm: {:?}", t.elapsed());
        if e.collapsed {
            return;
        }
        if e.budget_hit {
            // Leave the state rebuild-coherent and stop: the run is
            // marked non-stabilized, and the remaining passes would only
            // grind against refused insertions.
            e.rebuild();
            return;
        }
        if e.lep_rule {
            while e.lep_pass() {
                e.rebuild();
                e.drain_comm();
            }
        }
        if e.collapsed {
            return;
        }
        let t = std::time::Instant::now();
        let out = boolean_pass(e);
        eprintln!("  boolean_pass: {:?} {:?}", t.elapsed(), matches!(out, PassOutcome::Quiet));
        match out {
            PassOutcome::Collapsed => {
                e.collapsed = true;
                return;
            }
            PassOutcome::Merged => continue,
            PassOutcome::Quiet => return,
        }
    }
}

/// One creation stage: a negation for every class, then a meet and join
/// for every commeasurable class pair, each with its own negation.
fn creation_round(e: &mut Engine) {
    let (z, o) = (e.find(e.zero), e.find(e.one));
    for r in e.live_roots() {
        if r == z || r == o {
            continue;
        }
        if e.node_count() >= NODE_BUDGET {
            e.budget_hit = true;
            return;
        }
        e.ensure_op(NodeKind::Not(r));
    }
    for (a, b) in e.comm_pairs_snapshot() {
        if e.node_count() + 4 > NODE_BUDGET {
            e.budget_hit = true;
            return;
        }
        let (ra, rb) = (e.find(a), e.find(b));
        let (z, o) = (e.find(e.zero), e.find(e.one));
        if ra == rb || ra == z || rb == z || ra == o || rb == o {
            continue;
        }
        let m = e.ensure_op(NodeKind::And(ra, rb));
        let rm = e.find(m);
        if rm != e.find(e.zero) && rm != e.find(e.one) {
            e.ensure_op(NodeKind::Not(rm));
        }
        let j = e.ensure_op(NodeKind::Or(ra, rb));
        let rj = e.find(j);
        if rj != e.find(e.zero) && rj != e.find(e.one) {
            e.ensure_op(NodeKind::Not(rj));
        }
    }
}

/// Quiescence test for the probe stage: every class that exists after
/// the probe holds a pre-probe node, no two pre-probe classes merged, and
/// no commeasurability appeared between pre-probe classes.
fn probe_quiet(
    e: &mut Engine,
    n_pre: usize,
    q_pre: &QuotientAlgebra,
    raw_comm_pre: &[(ElementId, ElementId)],
) -> bool {
    let total = e.node_count();
    let mut pre_elem_of_root: HashMap<u32, ElementId> = HashMap::new();
    for n in 0..total as u32 {
        let r = e.find(n);
        if (n as usize) < n_pre {
            let elem = q_pre.lift.element_of_root[&q_pre.lift.final_root[n as usize]];
            match pre_elem_of_root.entry(r) {
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(elem);
                }
                std::collections::hash_map::Entry::Occupied(o) => {
                    if *o.get() != elem {
                        // Two pre-probe classes fell together.
                        return false;
                    }
                }
            }
        }
    }
    for n in 0..total as u32 {
        if !pre_elem_of_root.contains_key(&e.find(n)) {
            // A probe node survived as a fresh class.
            return false;
        }
    }
    let pre_pairs: HashSet<(ElementId, ElementId)> = raw_comm_pre.iter().copied().collect();
    for (a, b) in e.comm_pairs_snapshot() {
        let (ea, eb) = (pre_elem_of_root[&a], pre_elem_of_root[&b]);
        let key = (ea.min(eb), ea.max(eb));
        if ea != eb && !pre_pairs.contains(&key) {
            return false;
        }
    }
    true
}

fn extract_collapsed(e: &mut Engine) -> QuotientAlgebra {
    let algebra = FinitePBA::from_parts(
        vec!["0".to_string()],
        ElementId(0),
        ElementId(0),
        vec![ElementId(0)],
        &[(ElementId(0), ElementId(0))],
        &[(ElementId(0), ElementId(0), ElementId(0))],
        &[(ElementId(0), ElementId(0), ElementId(0))],
    );
    let n = e.node_count();
    QuotientAlgebra {
        algebra,
        stabilized: true,
        collapsed: true,
        eta: vec![ElementId(0); e.base.size()],
        dropped_comm_pairs: 0,
        missing_negations: 0,
        invariant_checks: e.invariant_checks,
        lift: LiftData {
            kinds: e.kinds.clone(),
            final_root: (0..n as u32).map(|i| e.find(i)).collect(),
            element_of_root: (0..n as u32).map(|i| (e.find(i), ElementId(0))).collect(),
        },
    }
}

/// Reads the current classes off into a finite algebra. Commeasurable
/// pairs whose operations were not materialised are dropped and counted;
/// the caller decides what the count means for its stabilization claim.
fn extract(e: &mut Engine, expect_complete: bool) -> (QuotientAlgebra, Vec<(ElementId, ElementId)>) {
    let roots = e.live_roots();
    let (z, o) = (e.find(e.zero), e.find(e.one));
    let mut order: Vec<u32> = Vec::with_capacity(roots.len());
    order.push(z);
    order.push(o);
    order.extend(roots.iter().copied().filter(|&r| r != z && r != o));

    let element_of_root: HashMap<u32, ElementId> = order
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, ElementId(i as u32)))
        .collect();
    let carrier = order.len();

    // Labels render the representative term of each class.
    let mut render_cache: HashMap<u32, String> = HashMap::new();
    let mut labels: Vec<String> = order
        .iter()
        .map(|&r| render(e, r, &mut render_cache))
        .collect();
    uniquify(&mut labels);

    // Negations.
    let mut missing_negations = 0usize;
    let mut neg: Vec<ElementId> = Vec::with_capacity(carrier);
    for &r in &order {
        if r == z {
            neg.push(element_of_root[&o]);
        } else if r == o {
            neg.push(element_of_root[&z]);
        } else {
            match e.memo_lookup(NodeKind::Not(r)) {
                Some(nn) => {
                    let rn = e.find(nn);
                    neg.push(element_of_root[&rn]);
                }
                None => match e.base_rep[r as usize] {
                    // Carrier fold, as in node creation.
                    Some(x) => {
                        let g = e.gens[e.base.neg(ElementId(x)).idx()];
                        let rn = e.find(g);
                        neg.push(element_of_root[&rn]);
                    }
                    None => {
                        missing_negations += 1;
                        neg.push(element_of_root[&r]);
                    }
                },
            }
        }
    }

    let mut comm = BitMatrix::new(carrier);
    let mut meet: HashMap<u64, u32> = HashMap::new();
    let mut join: HashMap<u64, u32> = HashMap::new();
    let pack = |a: ElementId, b: ElementId| ((a.0 as u64) << 32) | b.0 as u64;
    let put = |table: &mut HashMap<u64, u32>, a: ElementId, b: ElementId, r: ElementId| {
        table.insert(pack(a, b), r.0);
        table.insert(pack(b, a), r.0);
    };
    let (ez, eo) = (element_of_root[&z], element_of_root[&o]);
    for i in 0..carrier as u32 {
        let ei = ElementId(i);
        comm.set_sym(ei.idx(), ei.idx(), true);
        comm.set_sym(ei.idx(), ez.idx(), true);
        comm.set_sym(ei.idx(), eo.idx(), true);
        put(&mut meet, ei, ei, ei);
        put(&mut join, ei, ei, ei);
        put(&mut meet, ei, ez, ez);
        put(&mut join, ei, ez, ei);
        put(&mut meet, ei, eo, ei);
        put(&mut join, ei, eo, eo);
    }

    let mut dropped = 0usize;
    let mut raw_comm: Vec<(ElementId, ElementId)> = Vec::new();
    for (a, b) in e.comm_pairs_snapshot() {
        let (ea, eb) = (element_of_root[&a], element_of_root[&b]);
        raw_comm.push((ea.min(eb), ea.max(eb)));
        let folded = fold_base(e, a, b);
        let m = e
            .memo_lookup(NodeKind::And(a, b))
            .map(|n| e.find(n))
            .or_else(|| folded.map(|p| p.0));
        let j = e
            .memo_lookup(NodeKind::Or(a, b))
            .map(|n| e.find(n))
            .or_else(|| folded.map(|p| p.1));
        match (m, j) {
            (Some(rm), Some(rj)) => {
                comm.set_sym(ea.idx(), eb.idx(), true);
                put(&mut meet, ea, eb, element_of_root[&rm]);
                put(&mut join, ea, eb, element_of_root[&rj]);
            }
            _ => {
                dropped += 1;
                if expect_complete {
                    panic!("complete extraction requested but a table entry is missing");
                }
            }
        }
    }

    let algebra = FinitePBA::assemble(
        labels,
        ez,
        eo,
        neg,
        comm,
        meet,
        join,
    );
    let eta: Vec<ElementId> = (0..e.base.size())
        .map(|i| element_of_root[&e.find(e.gens[i])])
        .collect();
    let n = e.node_count();
    let q = QuotientAlgebra {
        algebra,
        stabilized: expect_complete,
        collapsed: false,
        eta,
        dropped_comm_pairs: dropped,
        missing_negations,
        invariant_checks: e.invariant_checks,
        lift: LiftData {
            kinds: e.kinds.clone(),
            final_root: (0..n as u32).map(|i| e.find(i)).collect(),
            element_of_root,
        },
    };
    (q, raw_comm)
}

/// The meet and join class of a commeasurable pair when both classes hold
/// base generators; mirrors the carrier fold in node creation.
fn fold_base(e: &mut Engine, a: u32, b: u32) -> Option<(u32, u32)> {
    let (ra, rb) = (e.find(a), e.find(b));
    let (x, y) = (e.base_rep[ra as usize]?, e.base_rep[rb as usize]?);
    let (ex, ey) = (ElementId(x), ElementId(y));
    if !e.base.comm(ex, ey) {
        return None;
    }
    let m = e.base.meet(ex, ey).expect("defined on commeasurable base pair");
    let j = e.base.join(ex, ey).expect("defined on commeasurable base pair");
    let gm = e.gens[m.idx()];
    let gj = e.gens[j.idx()];
    Some((e.find(gm), e.find(gj)))
}

fn render(e: &mut Engine, root: u32, cache: &mut HashMap<u32, String>) -> String {
    render_depth(e, root, cache, 0)
}

fn render_depth(e: &mut Engine, root: u32, cache: &mut HashMap<u32, String>, depth: u32) -> String {
    if let Some(s) = cache.get(&root) {
        return s.clone();
    }
    if depth > 64 {
        // Unreachable on a valid base; guards against cyclic classes if a
        // caller saturates an unvalidated algebra.
        return format!("#{root}");
    }
    let s = match e.kinds[root as usize] {
        NodeKind::Zero => "0".to_string(),
        NodeKind::One => "1".to_string(),
        NodeKind::Gen(a) => e.base.label(ElementId(a)).to_string(),
        NodeKind::Not(c) => {
            let rc = e.find(c);
            let inner = render_depth(e, rc, cache, depth + 1);
            if inner.starts_with('(') || !inner.contains(' ') {
                format!("¬{inner}")
            } else {
                format!("¬({inner})")
            }
        }
        NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
            let symbol = if matches!(e.kinds[root as usize], NodeKind::And(..)) {
                "∧"
            } else {
                "∨"
            };
            let (r1, r2) = (e.find(c1), e.find(c2));
            let (l, r) = (
                render_depth(e, r1, cache, depth + 1),
                render_depth(e, r2, cache, depth + 1),
            );
            format!("({l} {symbol} {r})")
        }
    };
    cache.insert(root, s.clone());
    s
}

fn uniquify(labels: &mut [String]) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for l in labels.iter_mut() {
        match seen.get_mut(l.as_str()) {
            None => {
                seen.insert(l.clone(), 1);
            }
            Some(count) => {
                *count += 1;
                let fresh = format!("{l}#{count}");
                *l = fresh;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::coproduct;

    fn four() -> FinitePBA {
        FinitePBA::boolean(&["p", "p'"]).expect("nonempty atom set")
    }

    fn identity(a: &FinitePBA) -> Vec<ElementId> {
        a.elements().collect()
    }

    #[test]
    fn empty_extension_reproduces_base() {
        let base = four();
        let spec = ExtensionSpec {
            base: &base,
            relation: Vec::new(),
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 0,
        };
        let q = saturate(&spec).unwrap();
        assert!(q.stabilized);
        assert!(!q.collapsed);
        assert_eq!(q.algebra.size(), 4);
        assert!(q.algebra.validate().ok);
        let (fwd, _inv) = lift_isomorphism(&spec, &q, &base, &identity(&base)).unwrap();
        for a in base.elements() {
            assert_eq!(fwd[q.eta[a.idx()].idx()], a);
        }
    }

    #[test]
    fn empty_extension_reproduces_coproduct() {
        let f = four();
        let cp = coproduct(&f, &f);
        let spec = ExtensionSpec {
            base: &cp.algebra,
            relation: Vec::new(),
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 0,
        };
        let q = saturate(&spec).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.algebra.size(), 6);
        assert!(q.algebra.validate().ok);
        lift_isomorphism(&spec, &q, &cp.algebra, &identity(&cp.algebra)).unwrap();
    }

    /// Image of a `four` element (a subset mask over its two atoms) in the
    /// four-atom product algebra, as the union of the product atoms its
    /// own atoms split into. Product atom `2i + j` is (left atom i) ∧
    /// (right atom j).
    fn expand_mask(mask: u32, left: bool) -> u32 {
        let mut out = 0;
        for atom in 0..2 {
            if mask & (1 << atom) != 0 {
                out |= if left { 0b11 << (2 * atom) } else { 0b0101 << atom };
            }
        }
        out
    }

    #[test]
    fn total_relation_on_two_fours_gives_sixteen() {
        let f = four();
        let cp = coproduct(&f, &f);
        let spec = ExtensionSpec {
            base: &cp.algebra,
            relation: vec![
                (cp.left[1], cp.right[1]),
                (cp.left[1], cp.right[2]),
                (cp.left[2], cp.right[1]),
                (cp.left[2], cp.right[2]),
            ],
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 3,
        };
        let q = saturate(&spec).unwrap();
        assert!(q.stabilized, "free product of two Boolean 4s saturates by depth 3");
        assert_eq!(q.algebra.size(), 16);
        assert!(q.algebra.validate().ok);

        // Independent oracle: the explicit four-atom truth tables.
        let sixteen = FinitePBA::boolean(&["pq", "pq'", "p'q", "p'q'"]).unwrap();
        let mut h = vec![ElementId(0); cp.algebra.size()];
        for i in 0..4u32 {
            h[cp.left[i as usize].idx()] = ElementId(expand_mask(i, true));
            h[cp.right[i as usize].idx()] = ElementId(expand_mask(i, false));
        }
        lift_isomorphism(&spec, &q, &sixteen, &h).unwrap();
    }

    #[test]
    fn meet_distributes_over_join_on_related_triple() {
        let f = four();
        let cp1 = coproduct(&f, &f);
        let cp2 = coproduct(&cp1.algebra, &f);
        let p = cp2.left[cp1.left[1].idx()];
        let u = cp2.left[cp1.right[1].idx()];
        let v = cp2.right[1];
        // Both sides of the law exist from depth 2 on; the full free
        // algebra on the triple is far deeper, so stay shallow.
        let spec = ExtensionSpec {
            base: &cp2.algebra,
            relation: vec![(p, u), (p, v), (u, v)],
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 2,
        };
        let q = saturate(&spec).unwrap();
        let (pe, ue, ve) = (q.class_of(p), q.class_of(u), q.class_of(v));
        let join_uv = q.algebra.join(ue, ve).expect("related pair has a join");
        let lhs = q.algebra.meet(pe, join_uv).expect("commeasurable by closure");
        let pu = q.algebra.meet(pe, ue).unwrap();
        let pv = q.algebra.meet(pe, ve).unwrap();
        let rhs = q.algebra.join(pu, pv).expect("commeasurable by closure");
        assert_eq!(lhs, rhs);
        // The two sides are one class but stay apart from the plain meet.
        assert_ne!(lhs, q.algebra.meet(ue, ve).unwrap());
    }

    #[test]
    fn forcing_atom_to_zero_yields_two() {
        let base = four();
        let spec = ExtensionSpec {
            base: &base,
            relation: Vec::new(),
            force_equal: vec![(ElementId(1), base.zero())],
            lep_rule: false,
            depth_limit: 0,
        };
        let q = saturate(&spec).unwrap();
        assert!(q.stabilized);
        assert!(!q.collapsed);
        assert_eq!(q.algebra.size(), 2);
        assert!(q.algebra.validate().ok);
        assert_eq!(q.class_of(ElementId(1)), q.algebra.zero());
        assert_eq!(q.class_of(ElementId(2)), q.algebra.one());
    }

    #[test]
    fn conflicting_forcings_collapse() {
        let base = four();
        let spec = ExtensionSpec {
            base: &base,
            relation: Vec::new(),
            force_equal: vec![(ElementId(1), base.zero()), (ElementId(1), base.one())],
            lep_rule: false,
            depth_limit: 2,
        };
        let q = saturate(&spec).unwrap();
        assert!(q.collapsed);
        assert!(q.stabilized);
        assert_eq!(q.algebra.size(), 1);
    }

    #[test]
    fn forcing_complement_pair_collapses() {
        let base = four();
        let spec = ExtensionSpec {
            base: &base,
            relation: Vec::new(),
            force_equal: vec![(ElementId(1), ElementId(2))],
            lep_rule: false,
            depth_limit: 2,
        };
        let q = saturate(&spec).unwrap();
        assert!(q.collapsed, "an atom forced equal to its complement trivialises");
    }

    #[test]
    fn exclusivity_rule_is_idle_on_boolean_base() {
        let q = lep_saturate(&four(), 1);
        assert!(q.stabilized);
        assert_eq!(q.algebra.size(), 4);
        assert!(q.algebra.validate().ok);
    }

    #[test]
    fn exclusivity_rule_is_idle_without_exclusive_pairs() {
        let f = four();
        let cp = coproduct(&f, &f);
        let q = lep_saturate(&cp.algebra, 1);
        assert!(q.stabilized);
        assert_eq!(q.algebra.size(), 6);
    }

    #[test]
    fn deeper_runs_refine_monotonically() {
        let f = four();
        let cp = coproduct(&f, &f);
        let relation = vec![
            (cp.left[1], cp.right[1]),
            (cp.left[1], cp.right[2]),
            (cp.left[2], cp.right[1]),
            (cp.left[2], cp.right[2]),
        ];
        let mut previous: Option<(usize, Vec<ElementId>)> = None;
        for depth in 0..=3 {
            let spec = ExtensionSpec {
                base: &cp.algebra,
                relation: relation.clone(),
                force_equal: Vec::new(),
                lep_rule: false,
                depth_limit: depth,
            };
            let q = saturate(&spec).unwrap();
            if let Some((size, eta)) = &previous {
                assert!(q.algebra.size() >= *size, "classes must not disappear with depth");
                for a in 0..eta.len() {
                    for b in 0..eta.len() {
                        if eta[a] == eta[b] {
                            assert_eq!(q.eta[a], q.eta[b], "merges must persist with depth");
                        }
                    }
                }
            }
            previous = Some((q.algebra.size(), q.eta.clone()));
        }
    }

    #[test]
    fn coequaliser_folds_parallel_injections() {
        let f = four();
        let cp = coproduct(&f, &f);
        let q = coequaliser(&f, &cp.algebra, &cp.left, &cp.right, 1).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.algebra.size(), 4);
        assert!(q.algebra.validate().ok);
        for i in 0..4 {
            assert_eq!(q.class_of(cp.left[i]), q.class_of(cp.right[i]));
        }
    }

    #[test]
    fn coequaliser_of_equal_maps_changes_nothing() {
        let base = four();
        let id = identity(&base);
        let q = coequaliser(&base, &base, &id, &id, 1).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.algebra.size(), 4);
    }

    #[test]
    fn trace_records_rule_applications() {
        let base = four();
        let spec = ExtensionSpec {
            base: &base,
            relation: Vec::new(),
            force_equal: vec![(ElementId(1), base.zero())],
            lep_rule: false,
            depth_limit: 1,
        };
        let (_, events) = saturate_with_trace(&spec, true).unwrap();
        assert!(events.iter().any(|e| matches!(e, TraceEvent::Created { .. })));
        assert!(events.iter().any(|e| matches!(e, TraceEvent::Merged { .. })));
        let rendered = events.iter().map(|e| e.to_string()).collect::<Vec<_>>();
        assert!(rendered.iter().any(|s| s.contains("force-equal")));
    }

    #[test]
    fn lift_checks_preconditions() {
        let f = four();
        let cp = coproduct(&f, &f);
        let spec = ExtensionSpec {
            base: &cp.algebra,
            relation: vec![(cp.left[1], cp.right[1])],
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 1,
        };
        let q = saturate(&spec).unwrap();
        // The identity into the coproduct leaves the related pair
        // non-commeasurable.
        let err = lift_morphism(&spec, &q, &cp.algebra, &identity(&cp.algebra)).unwrap_err();
        assert_eq!(
            err,
            LiftError::RelationNotCommeasurable(cp.left[1], cp.right[1])
        );
        let short = lift_morphism(&spec, &q, &cp.algebra, &[]).unwrap_err();
        assert!(matches!(short, LiftError::WrongLength { .. }));

        let forced = ExtensionSpec {
            base: &cp.algebra,
            relation: Vec::new(),
            force_equal: vec![(cp.left[1], cp.right[1])],
            lep_rule: false,
            depth_limit: 0,
        };
        let qf = saturate(&forced).unwrap();
        let err = lift_morphism(&forced, &qf, &cp.algebra, &identity(&cp.algebra)).unwrap_err();
        assert_eq!(err, LiftError::ForcedPairNotEqual(cp.left[1], cp.right[1]));
    }

    #[test]
    fn spec_ids_are_validated() {
        let base = four();
        let spec = ExtensionSpec {
            base: &base,
            relation: vec![(ElementId(9), ElementId(0))],
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 0,
        };
        let err = saturate(&spec).err().expect("out-of-range id must be rejected");
        assert_eq!(err, InvalidExtensionSpec { element: ElementId(9) });
    }

    /// Algebraic normal form over GF(2): a polynomial is the set of its
    /// monomials, a monomial a bitmask of variables. Distinct Boolean
    /// terms have equal normal forms exactly when they denote one
    /// function, giving a syntactic cross-check on identities the
    /// Boolean pass is trusted to enforce semantically.
    mod anf {
        use std::collections::BTreeSet;

        pub type Poly = BTreeSet<u32>;

        pub fn var(i: u32) -> Poly {
            [1u32 << i].into_iter().collect()
        }

        pub fn one() -> Poly {
            [0u32].into_iter().collect()
        }

        pub fn add(a: &Poly, b: &Poly) -> Poly {
            a.symmetric_difference(b).copied().collect()
        }

        pub fn and(a: &Poly, b: &Poly) -> Poly {
            let mut out = Poly::new();
            for x in a {
                for y in b {
                    let m = x | y;
                    if !out.remove(&m) {
                        out.insert(m);
                    }
                }
            }
            out
        }

        pub fn or(a: &Poly, b: &Poly) -> Poly {
            add(&add(a, b), &and(a, b))
        }

        pub fn not(a: &Poly) -> Poly {
            add(&one(), a)
        }
    }

    #[test]
    fn normal_forms_agree_with_engine_identities() {
        use anf::*;
        let (x, y, z) = (var(0), var(1), var(2));
        assert_eq!(and(&x, &or(&y, &z)), or(&and(&x, &y), &and(&x, &z)));
        assert_eq!(not(&and(&x, &y)), or(&not(&x), &not(&y)));
        assert_eq!(or(&x, &and(&x, &y)), x);
        assert_eq!(not(&not(&x)), x);
        assert_ne!(or(&x, &y), and(&x, &y));

        // The engine keeps the distinguished pair distinct as well.
        let f = four();
        let cp = coproduct(&f, &f);
        let spec = ExtensionSpec {
            base: &cp.algebra,
            relation: vec![(cp.left[1], cp.right[1])],
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: 2,
        };
        let q = saturate(&spec).unwrap();
        let (a, b) = (q.class_of(cp.left[1]), q.class_of(cp.right[1]));
        let m = q.algebra.meet(a, b).unwrap();
        let j = q.algebra.join(a, b).unwrap();
        assert_ne!(m, j);
        assert_eq!(q.algebra.neg(q.algebra.neg(m)), m);
    }
}
