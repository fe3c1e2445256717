//! Mutable saturation state: hash-consed term nodes, a union-find over
//! them, the commeasurability relation on classes, and the rule closure.
//!
//! Judgements map onto the state as follows. A node exists iff its term is
//! derivably defined (nodes are only ever created for commeasurable child
//! classes, and negation preserves definedness). Two nodes are in one
//! union-find class iff their terms are derivably equivalent. The `nbr`
//! relation on class roots holds the derivable commeasurability judgements,
//! with the diagonal and the constant rows kept implicit.

use super::TraceEvent;
use crate::algebra::{ElementId, FinitePBA};
use crate::bitset::BitRow;
use std::collections::{HashMap, HashSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum NodeKind {
    Zero,
    One,
    /// Generator for a base element.
    Gen(u32),
    /// Children reference the class representative node at creation time;
    /// always resolve through `find` before use.
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
}

pub(super) const RULE_SEED: &str = "seed";
pub(super) const RULE_BASE_OP: &str = "base-op";
pub(super) const RULE_FORCE: &str = "force-equal";
pub(super) const RULE_CONG: &str = "congruence";
pub(super) const RULE_LAW: &str = "law";
pub(super) const RULE_BOOL: &str = "boolean";
pub(super) const RULE_COMM_OP: &str = "comm-op";
pub(super) const RULE_COMM_NEG: &str = "comm-neg";
pub(super) const RULE_RELATION: &str = "relation";
pub(super) const RULE_LEP: &str = "lep";

/// Hard ceilings guarding runaway saturations; hitting one taints the
/// stabilization flag but keeps the partial result sound.
pub(super) const NODE_BUDGET: usize = 600_000;
pub(super) const COMM_BUDGET: usize = 2_000_000;

pub(super) struct Engine<'a> {
    pub base: &'a FinitePBA,
    pub lep_rule: bool,

    pub kinds: Vec<NodeKind>,
    pub depth: Vec<u32>,
    memo: HashMap<NodeKind, u32>,

    parent: Vec<u32>,
    /// Minimum term depth in the class; valid at roots.
    class_depth: Vec<u32>,
    /// Least base element with a generator in the class; valid at roots.
    pub base_rep: Vec<Option<u32>>,
    /// Member nodes per class root.
    pub members: HashMap<u32, Vec<u32>>,
    /// Nodes whose kind references the class; valid at roots.
    child_parents: HashMap<u32, Vec<u32>>,
    /// Proper commeasurability neighbours per root (no constants, no
    /// diagonal).
    pub nbr: HashMap<u32, HashSet<u32>>,
    /// Base elements with a generator in the class, keyed by root. Only
    /// generator-bearing classes have an entry.
    gen_content: HashMap<u32, BitRow>,
    comm_count: usize,

    pub zero: u32,
    pub one: u32,
    pub gens: Vec<u32>,

    /// Nodes whose memo key may be stale after a merge.
    dirty: Vec<u32>,
    comm_queue: VecDeque<(u32, u32)>,
    /// Pairs currently sitting in the queue, so repeated requeues of the
    /// same pair coalesce into one scan.
    comm_pending: HashSet<(u32, u32)>,

    pub collapsed: bool,
    pub budget_hit: bool,
    pub solver_skip: bool,
    pub invariant_checks: usize,
    pub trace: Option<Vec<TraceEvent>>,
}

impl<'a> Engine<'a> {
    pub fn new(
        base: &'a FinitePBA,
        relation: &[(ElementId, ElementId)],
        force_equal: &[(ElementId, ElementId)],
        lep_rule: bool,
        trace: bool,
    ) -> Engine<'a> {
        let mut e = Engine {
            base,
            lep_rule,
            kinds: Vec::new(),
            depth: Vec::new(),
            memo: HashMap::new(),
            parent: Vec::new(),
            class_depth: Vec::new(),
            base_rep: Vec::new(),
            members: HashMap::new(),
            child_parents: HashMap::new(),
            nbr: HashMap::new(),
            gen_content: HashMap::new(),
            comm_count: 0,
            zero: 0,
            one: 0,
            gens: Vec::new(),
            dirty: Vec::new(),
            comm_queue: VecDeque::new(),
            comm_pending: HashSet::new(),
            collapsed: false,
            budget_hit: false,
            solver_skip: false,
            invariant_checks: 0,
            trace: if trace { Some(Vec::new()) } else { None },
        };
        e.zero = e.raw_node(NodeKind::Zero, 0);
        e.one = e.raw_node(NodeKind::One, 0);
        for a in base.elements() {
            let g = e.raw_node(NodeKind::Gen(a.0), 0);
            e.gens.push(g);
        }
        // Constants and generators of constants are the same classes.
        let (z, o, gz, go) = (e.zero, e.one, e.gens[base.zero().idx()], e.gens[base.one().idx()]);
        e.union(z, gz, RULE_SEED);
        e.union(o, go, RULE_SEED);
        // Base commeasurability embeds.
        for a in base.elements() {
            for b in base.elements() {
                if a < b && base.comm(a, b) {
                    let (ga, gb) = (e.gens[a.idx()], e.gens[b.idx()]);
                    e.add_comm(ga, gb, RULE_SEED);
                }
            }
        }
        for &(a, b) in relation {
            let (ga, gb) = (e.gens[a.idx()], e.gens[b.idx()]);
            e.add_comm(ga, gb, RULE_RELATION);
        }
        for &(a, b) in force_equal {
            let (ga, gb) = (e.gens[a.idx()], e.gens[b.idx()]);
            e.union(ga, gb, RULE_FORCE);
        }
        e
    }

    fn raw_node(&mut self, kind: NodeKind, depth: u32) -> u32 {
        let id = self.kinds.len() as u32;
        self.kinds.push(kind);
        self.depth.push(depth);
        self.parent.push(id);
        self.class_depth.push(depth);
        self.base_rep.push(match kind {
            NodeKind::Gen(a) => Some(a),
            _ => None,
        });
        self.members.insert(id, vec![id]);
        if let NodeKind::Gen(a) = kind {
            let mut row = BitRow::new(self.base.size());
            row.set(a as usize, true);
            self.gen_content.insert(id, row);
        }
        self.memo.insert(kind, id);
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent::Created {
                node: id,
                kind: format!("{kind:?}"),
            });
        }
        id
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    /// Commeasurability on class roots, with implicit diagonal and
    /// constant rows.
    pub fn comm_roots(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (z, o) = (self.find(self.zero), self.find(self.one));
        if ra == z || rb == z || ra == o || rb == o {
            return true;
        }
        self.nbr.get(&ra).is_some_and(|s| s.contains(&rb))
    }

    /// Records a commeasurability judgement between the classes of two
    /// nodes. Returns true when the pair is new.
    pub fn add_comm(&mut self, a: u32, b: u32, rule: &'static str) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (z, o) = (self.find(self.zero), self.find(self.one));
        if ra == z || rb == z || ra == o || rb == o {
            return false;
        }
        if self.comm_count >= COMM_BUDGET {
            self.budget_hit = true;
            return false;
        }
        if !self.nbr.entry(ra).or_default().insert(rb) {
            return false;
        }
        self.nbr.entry(rb).or_default().insert(ra);
        self.comm_count += 1;
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent::Comm { a: ra, b: rb, rule });
        }
        self.push_comm(ra, rb);
        true
    }

    /// Queues a root pair for closure processing unless the pair is
    /// already pending. Coalescing is sound: a scan at pop time sees at
    /// least the state of every push it absorbed.
    fn push_comm(&mut self, a: u32, b: u32) {
        if self.comm_pending.insert((a.min(b), a.max(b))) {
            self.comm_queue.push_back((a, b));
        }
    }

    /// Merges the classes of two nodes. Returns true when they were
    /// distinct. The representative is the member with the least
    /// (depth, creation index).
    pub fn union(&mut self, a: u32, b: u32, rule: &'static str) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let keep_a = (self.class_depth[ra as usize], ra) < (self.class_depth[rb as usize], rb);
        let (win, lose) = if keep_a { (ra, rb) } else { (rb, ra) };
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent::Merged { a: win, b: lose, rule });
        }
        self.parent[lose as usize] = win;
        self.class_depth[win as usize] =
            self.class_depth[win as usize].min(self.class_depth[lose as usize]);
        self.base_rep[win as usize] = match (self.base_rep[win as usize], self.base_rep[lose as usize])
        {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let mut lose_members = self.members.remove(&lose).unwrap_or_default();
        // The loser's parents' memo keys are stale now; members keep their
        // keys because those reference children, which are untouched.
        if let Some(mut ps) = self.child_parents.remove(&lose) {
            self.dirty.extend_from_slice(&ps);
            self.child_parents.entry(win).or_default().append(&mut ps);
        }
        self.members.entry(win).or_default().append(&mut lose_members);
        if let Some(row) = self.gen_content.remove(&lose) {
            match self.gen_content.get_mut(&win) {
                Some(w) => w.union_with(&row),
                None => {
                    self.gen_content.insert(win, row);
                }
            }
        }
        // Merge commeasurability rows.
        if let Some(row) = self.nbr.remove(&lose) {
            for x in row {
                if let Some(s) = self.nbr.get_mut(&x) {
                    if s.remove(&lose) {
                        self.comm_count -= 1;
                    }
                }
                if x != win && !self.add_comm(win, x, rule) {
                    // The pair was already on the winner. Requeue it
                    // anyway: closure must reconsider it against the
                    // enlarged class.
                    let (rw, rx) = (self.find(win), self.find(x));
                    if rw != rx {
                        self.push_comm(rw, rx);
                    }
                }
            }
        }
        // Collapse detection: the constants falling together trivialises
        // everything.
        let (z, o) = (self.find(self.zero), self.find(self.one));
        if z == o {
            self.collapsed = true;
        }
        true
    }

    /// Looks up or creates the node for a canonical kind. Children of
    /// `And`/`Or` are unordered: pass any two distinct non-constant roots.
    /// Returns the node id.
    pub fn ensure_op(&mut self, kind_raw: NodeKind) -> u32 {
        let kind = self.canonical_kind(kind_raw);
        if let Some(&n) = self.memo.get(&kind) {
            return n;
        }
        // Carrier fold: ¬ι(a) ≡ ι(¬a) and ι(a)∧ι(b) ≡ ι(a ∧ b) on
        // commeasurable base pairs. Answering with the generator node
        // keeps ops over the base carrier from materialising anything.
        match kind {
            NodeKind::Not(c) => {
                let rc = self.find(c);
                if let Some(a) = self.base_rep[rc as usize] {
                    return self.gens[self.base.neg(ElementId(a)).idx()];
                }
            }
            NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
                let (r1, r2) = (self.find(c1), self.find(c2));
                if let (Some(a), Some(b)) =
                    (self.base_rep[r1 as usize], self.base_rep[r2 as usize])
                {
                    let (ea, eb) = (ElementId(a), ElementId(b));
                    if self.base.comm(ea, eb) {
                        let t = match kind {
                            NodeKind::And(..) => self.base.meet(ea, eb),
                            _ => self.base.join(ea, eb),
                        }
                        .expect("defined on commeasurable base pair");
                        return self.gens[t.idx()];
                    }
                }
            }
            _ => {}
        }
        if self.kinds.len() >= NODE_BUDGET {
            self.budget_hit = true;
            // Budget exhausted: report an arbitrary existing node to keep
            // callers total; they check the flag.
            return self.zero;
        }
        let d = match kind {
            NodeKind::Not(c) => {
                let rc = self.find(c);
                1 + self.class_depth[rc as usize]
            }
            NodeKind::And(a, b) | NodeKind::Or(a, b) => {
                let (ra, rb) = (self.find(a), self.find(b));
                1 + self.class_depth[ra as usize].max(self.class_depth[rb as usize])
            }
            _ => 0,
        };
        let n = self.raw_node(kind, d);
        match kind {
            NodeKind::Not(c) => {
                let rc = self.find(c);
                self.child_parents.entry(rc).or_default().push(n);
                // ¬t is commeasurable with everything t is.
                self.add_comm(n, rc, RULE_COMM_NEG);
                let row: Vec<u32> = self
                    .nbr
                    .get(&rc)
                    .map(|s| s.iter().copied().collect())
                    .unwrap_or_default();
                for x in row {
                    self.add_comm(n, x, RULE_COMM_NEG);
                }
            }
            NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
                let (r1, r2) = (self.find(c1), self.find(c2));
                self.child_parents.entry(r1).or_default().push(n);
                self.child_parents.entry(r2).or_default().push(n);
                self.add_comm(n, r1, RULE_COMM_OP);
                self.add_comm(n, r2, RULE_COMM_OP);
                // t∧u ⊙ v for every v commeasurable with both t and u.
                let common: Vec<u32> = {
                    let (sa, sb) = (self.nbr.get(&r1), self.nbr.get(&r2));
                    match (sa, sb) {
                        (Some(sa), Some(sb)) => {
                            let (small, big) = if sa.len() <= sb.len() { (sa, sb) } else { (sb, sa) };
                            small.iter().copied().filter(|x| big.contains(x)).collect()
                        }
                        _ => Vec::new(),
                    }
                };
                for x in common {
                    self.add_comm(n, x, RULE_COMM_OP);
                }
            }
            _ => {}
        }
        n
    }

    fn canonical_kind(&mut self, kind: NodeKind) -> NodeKind {
        match kind {
            NodeKind::Not(c) => NodeKind::Not(self.find(c)),
            NodeKind::And(a, b) => {
                let (ra, rb) = (self.find(a), self.find(b));
                NodeKind::And(ra.min(rb), ra.max(rb))
            }
            NodeKind::Or(a, b) => {
                let (ra, rb) = (self.find(a), self.find(b));
                NodeKind::Or(ra.min(rb), ra.max(rb))
            }
            k => k,
        }
    }

    /// Restores the congruence invariants after merges: re-keys dirty
    /// nodes, fusing nodes whose canonical keys collide, and applies the
    /// constant/diagonal laws exposed by merged children.
    pub fn rebuild(&mut self) {
        while let Some(n) = self.dirty.pop() {
            let kind = self.canonical_kind(self.kinds[n as usize]);
            let (z, o) = (self.find(self.zero), self.find(self.one));
            // Law shortcuts on degenerate keys.
            let law_target = match kind {
                NodeKind::Not(c) if c == z => Some(o),
                NodeKind::Not(c) if c == o => Some(z),
                NodeKind::And(a, b) if a == b => Some(a),
                NodeKind::And(a, b) if a == z || b == z => Some(z),
                NodeKind::And(a, b) if a == o => Some(b),
                NodeKind::And(a, b) if b == o => Some(a),
                NodeKind::Or(a, b) if a == b => Some(a),
                NodeKind::Or(a, b) if a == o || b == o => Some(o),
                NodeKind::Or(a, b) if a == z => Some(b),
                NodeKind::Or(a, b) if b == z => Some(a),
                _ => None,
            };
            if let Some(t) = law_target {
                self.union(n, t, RULE_LAW);
                continue;
            }
            match self.memo.get(&kind).copied() {
                Some(m) => {
                    if self.find(m) != self.find(n) {
                        self.union(n, m, RULE_CONG);
                    }
                }
                None => {
                    self.memo.insert(kind, n);
                }
            }
            // Fresh base-generator content exposed by a merge seeds the
            // base-operation rules late.
            let rn = self.find(n);
            match kind {
                NodeKind::Not(c) => {
                    let rc = self.find(c);
                    if let Some(a) = self.base_rep[rc as usize] {
                        let tg = self.gens[self.base.neg(ElementId(a)).idx()];
                        self.union(rn, tg, RULE_BASE_OP);
                    }
                }
                NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
                    let (r1, r2) = (self.find(c1), self.find(c2));
                    if let (Some(a), Some(b)) = (
                        self.base_rep[r1 as usize],
                        self.base_rep[r2 as usize],
                    ) {
                        let (ea, eb) = (ElementId(a), ElementId(b));
                        if self.base.comm(ea, eb) {
                            let target = match kind {
                                NodeKind::And(..) => self.base.meet(ea, eb),
                                _ => self.base.join(ea, eb),
                            }
                            .expect("defined on commeasurable base pair");
                            let tg = self.gens[target.idx()];
                            self.union(rn, tg, RULE_BASE_OP);
                        }
                    }
                }
                _ => {}
            }
        }
    }

    /// Drains the commeasurability worklist, applying the ∧/∨ and ¬
    /// propagation rules through the parent lists.
    pub fn drain_comm(&mut self) {
        let mut pops = 0u64;
        let mut content_bits = 0u64;
        let mut partner_hits = 0u64;
        let mut mask_calls = 0u64;
        while let Some((a, b)) = self.comm_queue.pop_front() {
            pops += 1;
            self.comm_pending.remove(&(a.min(b), a.max(b)));
            if self.budget_hit {
                // Closure past the budget only feeds more refusals; the
                // run is already marked non-stabilized.
                self.comm_queue.clear();
                self.comm_pending.clear();
                return;
            }
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            for (s, t) in [(ra, rb), (rb, ra)] {
                // Nodes built over s: an op node gains ⊙ t when its other
                // child already has it; a ¬ node always follows its child.
                let parents: Vec<u32> = self
                    .child_parents
                    .get(&s)
                    .map(|v| v.clone())
                    .unwrap_or_default();
                for n in parents {
                    match self.kinds[n as usize] {
                        NodeKind::Not(_) => {
                            self.add_comm(n, t, RULE_COMM_NEG);
                        }
                        NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
                            let (r1, r2) = (self.find(c1), self.find(c2));
                            let other = if r1 == s { r2 } else if r2 == s { r1 } else { continue };
                            if self.comm_roots(other, t) {
                                self.add_comm(n, t, RULE_COMM_OP);
                            }
                        }
                        _ => {}
                    }
                }
                // ¬ members of the class of s propagate down to their
                // children: ¬u ⊙ t gives u ⊙ t.
                let not_children: Vec<u32> = match self.members.get(&s) {
                    Some(v) => v
                        .iter()
                        .filter_map(|&m| match self.kinds[m as usize] {
                            NodeKind::Not(c) => Some(c),
                            _ => None,
                        })
                        .collect(),
                    None => Vec::new(),
                };
                for c in not_children {
                    self.add_comm(c, t, RULE_COMM_NEG);
                }
                // Base generators in the class propagate up: for a base
                // partner c whose class is ⊙ t, the classes of g∧c and
                // g∨c gain ⊙ t. A pair of untouched generator classes
                // over a base commeasurability carries only base facts,
                // which the base already closes; skip the upward scan
                // there.
                let skip_up = match (self.pure_gen(s), self.pure_gen(t)) {
                    (Some(a), Some(b)) => self.base.comm(a, b),
                    _ => false,
                };
                if skip_up {
                    continue;
                }
                let content_s = match self.gen_content.get(&s) {
                    Some(row) => row.clone(),
                    None => continue,
                };
                let qual = self.partner_mask(t);
                mask_calls += 1;
                let base = self.base;
                for a_idx in content_s.iter_ones() {
                    content_bits += 1;
                    let ea = ElementId(a_idx as u32);
                    if ea == base.zero() || ea == base.one() {
                        // Meets and joins with a constant add nothing the
                        // seed embedding does not already carry.
                        continue;
                    }
                    let mut row = base.comm_matrix().row(a_idx).clone();
                    row.intersect_with(&qual);
                    row.set(a_idx, false);
                    for c_idx in row.iter_ones() {
                        partner_hits += 1;
                        let c = ElementId(c_idx as u32);
                        let m2 = base.meet(ea, c).expect("commeasurable base pair");
                        let j2 = base.join(ea, c).expect("commeasurable base pair");
                        let (gm, gj) = (self.gens[m2.idx()], self.gens[j2.idx()]);
                        self.add_comm(gm, t, RULE_COMM_OP);
                        self.add_comm(gj, t, RULE_COMM_OP);
                    }
                }
            }
        }
        if pops > 0 {
            eprintln!(
                "    pops={pops} mask_calls={mask_calls} content_bits={content_bits} partner_hits={partner_hits} comm_count={}",
                self.comm_count
            );
        }
    }

    /// Base elements whose generator class is commeasurable with `t`,
    /// including the classes of `t` itself and of the constants, with the
    /// base constants cleared. Iterates whichever of the neighbour row
    /// and the content table is smaller.
    fn partner_mask(&mut self, t: u32) -> BitRow {
        let (z, o) = (self.find(self.zero), self.find(self.one));
        let mut mask = BitRow::new(self.base.size());
        for r in [t, z, o] {
            if let Some(c) = self.gen_content.get(&r) {
                mask.union_with(c);
            }
        }
        let nbr_t = self.nbr.get(&t);
        let nbr_len = nbr_t.map_or(0, |s| s.len());
        if nbr_len <= self.gen_content.len() {
            if let Some(row) = nbr_t {
                for y in row {
                    if let Some(c) = self.gen_content.get(y) {
                        mask.union_with(c);
                    }
                }
            }
        } else if let Some(row) = nbr_t {
            for (&r, c) in &self.gen_content {
                if row.contains(&r) {
                    mask.union_with(c);
                }
            }
        }
        mask.set(self.base.zero().idx(), false);
        mask.set(self.base.one().idx(), false);
        mask
    }

    /// The base element of a class that is a single untouched generator.
    fn pure_gen(&self, root: u32) -> Option<ElementId> {
        match self.members.get(&root) {
            Some(v) if v.len() == 1 => match self.kinds[v[0] as usize] {
                NodeKind::Gen(a) => Some(ElementId(a)),
                _ => None,
            },
            _ => None,
        }
    }

    /// One pass of the exclusivity rule: u ≤ t and v ≤ ¬t give u ⊙ v.
    /// Returns true when new pairs appeared.
    pub fn lep_pass(&mut self) -> bool {
        if self.budget_hit {
            return false;
        }
        // Collect u ≤ t facts from materialised meets: an ∧ node equal to
        // one of its children.
        let mut down: HashMap<u32, Vec<u32>> = HashMap::new();
        for n in 0..self.kinds.len() as u32 {
            if let NodeKind::And(c1, c2) = self.kinds[n as usize] {
                let (rn, r1, r2) = (self.find(n), self.find(c1), self.find(c2));
                if rn == r1 && r1 != r2 {
                    down.entry(r2).or_default().push(r1);
                }
                if rn == r2 && r1 != r2 {
                    down.entry(r1).or_default().push(r2);
                }
            }
        }
        let (z, o) = (self.find(self.zero), self.find(self.one));
        let roots: Vec<u32> = self.live_roots();
        let mut added = false;
        for t in roots {
            if t == z || t == o {
                continue;
            }
            let not_key = NodeKind::Not(t);
            let Some(&not_node) = self.memo.get(&not_key) else { continue };
            let nt = self.find(not_node);
            let mut d_t: Vec<u32> = down.get(&t).cloned().unwrap_or_default();
            d_t.push(t);
            let mut d_n: Vec<u32> = down.get(&nt).cloned().unwrap_or_default();
            d_n.push(nt);
            for &u in &d_t {
                for &v in &d_n {
                    if self.add_comm(u, v, RULE_LEP) {
                        added = true;
                    }
                }
            }
        }
        added
    }

    pub fn live_roots(&mut self) -> Vec<u32> {
        let mut roots: Vec<u32> = (0..self.kinds.len() as u32)
            .filter(|&n| self.find(n) == n)
            .collect();
        roots.sort_unstable_by_key(|&r| (self.class_depth[r as usize], r));
        roots
    }

    /// State invariants from the prerequisite lemma and the embedding,
    /// checked after every round in debug builds.
    pub fn check_invariants(
        &mut self,
        relation: &[(ElementId, ElementId)],
        force_equal: &[(ElementId, ElementId)],
    ) {
        self.invariant_checks += 1;
        // Commeasurability only between live classes of existing nodes
        // (⊙ ⇒ both defined) and symmetric.
        let pairs: Vec<(u32, u32)> = self
            .nbr
            .iter()
            .flat_map(|(&a, s)| s.iter().map(move |&b| (a, b)))
            .collect();
        for (a, b) in pairs {
            assert!(
                (a as usize) < self.kinds.len() && (b as usize) < self.kinds.len(),
                "comm references a missing node"
            );
            let fa = self.find(a);
            assert!(
                self.nbr.get(&b).is_some_and(|s| s.contains(&fa)),
                "comm row asymmetric after merges"
            );
        }
        if !self.collapsed && !self.budget_hit {
            // The embedding: base ⊙ and the spec relation map to ⊙, forced
            // pairs to ≡. Past the budget, refused insertions may have
            // lost transferred pairs; the run is already tainted.
            for a in self.base.elements() {
                for b in self.base.elements() {
                    if a < b && self.base.comm(a, b) {
                        let (ga, gb) = (self.gens[a.idx()], self.gens[b.idx()]);
                        assert!(self.comm_roots(ga, gb), "base comm lost at ({a}, {b})");
                    }
                }
            }
            for &(a, b) in relation {
                let (ga, gb) = (self.gens[a.idx()], self.gens[b.idx()]);
                assert!(self.comm_roots(ga, gb), "relation pair lost at ({a}, {b})");
            }
        }
        for &(a, b) in force_equal {
            let (ga, gb) = (self.gens[a.idx()], self.gens[b.idx()]);
            assert_eq!(self.find(ga), self.find(gb), "forced pair not merged");
        }
    }

    /// The set of commeasurable proper root pairs, canonically ordered.
    pub fn comm_pairs_snapshot(&mut self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self
            .nbr
            .iter()
            .flat_map(|(&a, s)| s.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a < b)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn memo_lookup(&mut self, kind: NodeKind) -> Option<u32> {
        let k = self.canonical_kind(kind);
        self.memo.get(&k).copied()
    }
}
