//! Semantic realisation of the Boolean-identity rule.
//!
//! For each maximal clique of the class commeasurability graph, the
//! classes in the clique generate a Boolean algebra presented by the
//! structural facts the saturation state knows about them: constants,
//! negation links, meets and joins with visible children, and the base
//! algebra's own tables on generator classes. Two-valued homomorphisms of
//! that presented algebra are enumerated by constraint propagation.
//! Classes sharing the same truth vector across all valuations are equal
//! in the presented algebra, hence derivably equivalent; a clique with no
//! valuation at all presents the trivial algebra, which collapses the
//! whole extension.

use super::engine::{Engine, NodeKind, RULE_BOOL};
use crate::algebra::ElementId;
use crate::bitset::BitMatrix;
use crate::cliques::maximal_cliques;
use std::collections::{HashMap, HashSet};

/// Valuations per clique are capped; the cap is far above the atom count
/// of every algebra this workbench targets, so hitting it signals an
/// unfinished fragment rather than a real algebra.
const MAX_VALUATIONS: usize = 64;
/// Propagation-step budget per clique.
const MAX_STEPS: usize = 32_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Operand {
    Var(u32),
    Const(bool),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Constraint {
    Fix(u32, bool),
    Eq(u32, u32),
    Neq(u32, u32),
    Leq(u32, u32),
    /// out = a ∧ b
    And3(u32, u32, u32),
    /// out = a ∨ b
    Or3(u32, u32, u32),
    /// a ∧ b = 0
    NandZero(u32, u32),
    /// a ∨ b = 1
    NorOne(u32, u32),
}

pub(super) enum PassOutcome {
    Quiet,
    Merged,
    Collapsed,
}

/// Runs one Boolean pass over every maximal clique. Merges equal classes
/// in place; reports whether anything merged or the state collapsed.
pub(super) fn boolean_pass(e: &mut Engine) -> PassOutcome {
    let roots = e.live_roots();
    let (z, o) = (e.find(e.zero), e.find(e.one));
    let proper: Vec<u32> = roots.into_iter().filter(|&r| r != z && r != o).collect();
    if proper.is_empty() {
        return PassOutcome::Quiet;
    }
    let index: HashMap<u32, usize> = proper.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut adj = BitMatrix::new(proper.len());
    for (i, &r) in proper.iter().enumerate() {
        if let Some(row) = e.nbr.get(&r) {
            for x in row {
                if let Some(&j) = index.get(x) {
                    adj.set_sym(i, j, true);
                }
            }
        }
    }
    let cliques = maximal_cliques(&adj);
    let mut merged_any = false;
    for clique in cliques {
        let clique_roots: Vec<u32> = clique.iter().map(|&i| proper[i]).collect();
        match solve_clique(e, &clique_roots) {
            CliqueResult::Empty => return PassOutcome::Collapsed,
            CliqueResult::Overflow => {
                e.solver_skip = true;
            }
            CliqueResult::Groups(groups) => {
                for group in groups {
                    let mut it = group.into_iter();
                    let first = it.next().expect("group is nonempty");
                    for next in it {
                        if e.union(first, next, RULE_BOOL) {
                            merged_any = true;
                        }
                    }
                }
            }
        }
        if e.collapsed {
            return PassOutcome::Collapsed;
        }
    }
    if merged_any {
        PassOutcome::Merged
    } else {
        PassOutcome::Quiet
    }
}

enum CliqueResult {
    /// Groups of nodes with identical truth vectors (≥ 2 entries each);
    /// constants participate through their class roots.
    Groups(Vec<Vec<u32>>),
    Empty,
    Overflow,
}

fn solve_clique(e: &mut Engine, clique_roots: &[u32]) -> CliqueResult {
    // Merges from earlier cliques in the same pass can fold clique
    // members together or into a constant; re-canonicalise before
    // solving.
    let (z, o) = (e.find(e.zero), e.find(e.one));
    let mut vars: Vec<u32> = clique_roots.iter().map(|&r| e.find(r)).collect();
    vars.sort_unstable();
    vars.dedup();
    vars.retain(|&r| r != z && r != o);
    if vars.is_empty() {
        return CliqueResult::Groups(Vec::new());
    }
    // Variables ordered shallow-first so propagation from generators
    // decides composite classes instead of branching on them.
    vars.sort_unstable_by_key(|&r| (e.depth[r as usize], r));
    let var_of: HashMap<u32, u32> = vars.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();

    let resolve = |root: u32| -> Option<Operand> {
        if root == z {
            Some(Operand::Const(false))
        } else if root == o {
            Some(Operand::Const(true))
        } else {
            var_of.get(&root).map(|&v| Some(Operand::Var(v))).unwrap_or(None)
        }
    };

    let mut set: HashSet<Constraint> = HashSet::new();
    let mut conflict = false;

    // Structural constraints from every node in every clique class.
    let mut gen_vars: Vec<(ElementId, Operand)> = Vec::new();
    let mut seen_gens: HashSet<u32> = HashSet::new();
    for &root in &vars {
        let out = Operand::Var(var_of[&root]);
        let members: Vec<u32> = e.members.get(&root).cloned().unwrap_or_default();
        for n in members {
            match e.kinds[n as usize] {
                NodeKind::Gen(a) => {
                    if seen_gens.insert(a) {
                        gen_vars.push((ElementId(a), out));
                    }
                }
                NodeKind::Not(c) => {
                    let rc = e.find(c);
                    match resolve(rc) {
                        Some(Operand::Var(v)) => {
                            let Operand::Var(vo) = out else { unreachable!() };
                            if vo != v {
                                set.insert(Constraint::Neq(vo.min(v), vo.max(v)));
                            } else {
                                conflict = true;
                            }
                        }
                        Some(Operand::Const(c)) => {
                            let Operand::Var(vo) = out else { unreachable!() };
                            set.insert(Constraint::Fix(vo, !c));
                        }
                        None => {}
                    }
                }
                NodeKind::And(c1, c2) | NodeKind::Or(c1, c2) => {
                    let is_and = matches!(e.kinds[n as usize], NodeKind::And(..));
                    let (r1, r2) = (e.find(c1), e.find(c2));
                    match (resolve(r1), resolve(r2)) {
                        (Some(x), Some(y)) => {
                            emit_op(&mut set, &mut conflict, is_and, out, x, y);
                        }
                        (Some(x), None) | (None, Some(x)) => {
                            // Only one child visible: the node is still
                            // below (above) it.
                            emit_bound(&mut set, is_and, out, x);
                        }
                        (None, None) => {}
                    }
                }
                NodeKind::Zero | NodeKind::One => {
                    // Constant nodes sit in constant classes, which are
                    // excluded from the variable set.
                }
            }
        }
    }

    // The base algebra's structure on visible generators. Generators that
    // merged into constant classes are covered by `resolve` on their pair
    // partners, so only the spread over clique variables matters here.
    for i in 0..gen_vars.len() {
        let (a, oa) = gen_vars[i];
        let na = e.base.neg(a);
        if let Some(on) = resolve(e.find(e.gens[na.idx()])) {
            emit_eq_negated(&mut set, &mut conflict, oa, on);
        }
        for (b, ob) in gen_vars.iter().skip(i + 1).copied() {
            if !e.base.comm(a, b) {
                continue;
            }
            let m = e.base.meet(a, b).expect("defined on commeasurable base pair");
            let j = e.base.join(a, b).expect("defined on commeasurable base pair");
            if let Some(om) = resolve(e.find(e.gens[m.idx()])) {
                emit_op(&mut set, &mut conflict, true, om, oa, ob);
            }
            if let Some(oj) = resolve(e.find(e.gens[j.idx()])) {
                emit_op(&mut set, &mut conflict, false, oj, oa, ob);
            }
        }
    }

    if conflict {
        return CliqueResult::Empty;
    }
    let constraints: Vec<Constraint> = set.into_iter().collect();
    match enumerate(vars.len(), &constraints) {
        Enumeration::Overflow => CliqueResult::Overflow,
        Enumeration::Valuations(vals) => {
            if vals.is_empty() {
                return CliqueResult::Empty;
            }
            if vals.len() > MAX_VALUATIONS {
                return CliqueResult::Overflow;
            }
            // Truth vector per variable; constants get theirs implicitly.
            let full: u64 = if vals.len() == 64 { !0 } else { (1u64 << vals.len()) - 1 };
            let mut groups: HashMap<u64, Vec<u32>> = HashMap::new();
            groups.insert(0, vec![z]);
            groups.insert(full, vec![o]);
            for (i, &root) in vars.iter().enumerate() {
                let mut vec_bits = 0u64;
                for (k, val) in vals.iter().enumerate() {
                    if val[i] == 1 {
                        vec_bits |= 1 << k;
                    }
                }
                groups.entry(vec_bits).or_default().push(root);
            }
            CliqueResult::Groups(groups.into_values().filter(|g| g.len() >= 2).collect())
        }
    }
}

fn emit_eq(set: &mut HashSet<Constraint>, conflict: &mut bool, x: Operand, y: Operand) {
    match (x, y) {
        (Operand::Const(a), Operand::Const(b)) => {
            if a != b {
                *conflict = true;
            }
        }
        (Operand::Var(v), Operand::Const(c)) | (Operand::Const(c), Operand::Var(v)) => {
            set.insert(Constraint::Fix(v, c));
        }
        (Operand::Var(a), Operand::Var(b)) => {
            if a != b {
                set.insert(Constraint::Eq(a.min(b), a.max(b)));
            }
        }
    }
}

fn emit_op(
    set: &mut HashSet<Constraint>,
    conflict: &mut bool,
    is_and: bool,
    out: Operand,
    a: Operand,
    b: Operand,
) {
    use Operand::*;
    match (a, b) {
        (Const(ca), Const(cb)) => {
            let r = if is_and { ca && cb } else { ca || cb };
            emit_eq(set, conflict, out, Const(r));
        }
        (Const(c), other) | (other, Const(c)) => {
            // Absorbing or neutral element.
            if c == is_and {
                emit_eq(set, conflict, out, other);
            } else {
                emit_eq(set, conflict, out, Const(!is_and));
            }
        }
        (Var(va), Var(vb)) => match out {
            Var(vo) => {
                let (x, y) = (va.min(vb), va.max(vb));
                if va == vb {
                    emit_eq(set, conflict, out, Var(va));
                } else if is_and {
                    set.insert(Constraint::And3(vo, x, y));
                } else {
                    set.insert(Constraint::Or3(vo, x, y));
                }
            }
            Const(co) => {
                if co == is_and {
                    // A meet equal to 1 (join equal to 0) pins both
                    // children.
                    set.insert(Constraint::Fix(va, co));
                    set.insert(Constraint::Fix(vb, co));
                } else if va == vb {
                    set.insert(Constraint::Fix(va, co));
                } else {
                    // A meet equal to 0 (join equal to 1) only excludes
                    // one joint assignment.
                    let (x, y) = (va.min(vb), va.max(vb));
                    if is_and {
                        set.insert(Constraint::NandZero(x, y));
                    } else {
                        set.insert(Constraint::NorOne(x, y));
                    }
                }
            }
        },
    }
}

fn emit_bound(set: &mut HashSet<Constraint>, is_and: bool, out: Operand, child: Operand) {
    use Operand::*;
    match (out, child) {
        (Var(vo), Var(vc)) => {
            if vo != vc {
                if is_and {
                    set.insert(Constraint::Leq(vo, vc));
                } else {
                    set.insert(Constraint::Leq(vc, vo));
                }
            }
        }
        (Var(vo), Const(c)) => {
            // meet below a 0 child, join above a 1 child.
            if is_and && !c {
                set.insert(Constraint::Fix(vo, false));
            } else if !is_and && c {
                set.insert(Constraint::Fix(vo, true));
            }
        }
        (Const(co), Var(vc)) => {
            if is_and && co {
                set.insert(Constraint::Fix(vc, true));
            } else if !is_and && !co {
                set.insert(Constraint::Fix(vc, false));
            }
        }
        (Const(_), Const(_)) => {}
    }
}

fn emit_eq_negated(set: &mut HashSet<Constraint>, conflict: &mut bool, x: Operand, nx: Operand) {
    use Operand::*;
    match (x, nx) {
        (Const(a), Const(b)) => {
            if a == b {
                *conflict = true;
            }
        }
        (Var(v), Const(c)) | (Const(c), Var(v)) => {
            set.insert(Constraint::Fix(v, !c));
        }
        (Var(a), Var(b)) => {
            if a == b {
                *conflict = true;
            } else {
                set.insert(Constraint::Neq(a.min(b), a.max(b)));
            }
        }
    }
}

enum Enumeration {
    Valuations(Vec<Vec<u8>>),
    Overflow,
}

const UNK: u8 = 2;

/// Depth-first enumeration of all assignments satisfying the constraints,
/// with watched-by-variable propagation.
fn enumerate(n_vars: usize, constraints: &[Constraint]) -> Enumeration {
    let mut occ: Vec<Vec<u32>> = vec![Vec::new(); n_vars];
    for (ci, c) in constraints.iter().enumerate() {
        for v in constraint_vars(c) {
            occ[v as usize].push(ci as u32);
        }
    }
    let mut vals: Vec<u8> = vec![UNK; n_vars];
    let mut trail: Vec<u32> = Vec::new();
    let mut steps: usize = 0;

    // Initial fixes and zero-variable conflicts.
    let mut queue: Vec<u32> = Vec::new();
    for c in constraints {
        if let Constraint::Fix(v, b) = c {
            match vals[*v as usize] {
                UNK => {
                    vals[*v as usize] = *b as u8;
                    trail.push(*v);
                    queue.push(*v);
                }
                x if x == *b as u8 => {}
                _ => return Enumeration::Valuations(Vec::new()),
            }
        }
    }
    if !propagate(&mut vals, &mut trail, &mut queue, constraints, &occ, &mut steps) {
        return Enumeration::Valuations(Vec::new());
    }

    let mut out: Vec<Vec<u8>> = Vec::new();
    // Decision stack: (variable, tried_second_branch, trail length before).
    let mut decisions: Vec<(u32, bool, usize)> = Vec::new();
    loop {
        if steps > MAX_STEPS || out.len() > MAX_VALUATIONS {
            return Enumeration::Overflow;
        }
        match (0..n_vars).find(|&v| vals[v] == UNK) {
            None => {
                out.push(vals.clone());
                // Backtrack to the most recent decision with an untried
                // branch.
                if !backtrack_flip(
                    &mut vals,
                    &mut trail,
                    &mut decisions,
                    constraints,
                    &occ,
                    &mut steps,
                ) {
                    return Enumeration::Valuations(out);
                }
            }
            Some(v) => {
                let mark = trail.len();
                decisions.push((v as u32, false, mark));
                vals[v] = 0;
                trail.push(v as u32);
                let mut q = vec![v as u32];
                if !propagate(&mut vals, &mut trail, &mut q, constraints, &occ, &mut steps)
                    && !backtrack_flip(
                        &mut vals,
                        &mut trail,
                        &mut decisions,
                        constraints,
                        &occ,
                        &mut steps,
                    )
                {
                    return Enumeration::Valuations(out);
                }
            }
        }
    }
}

/// Undoes decisions until one still has an untried branch, then takes it.
/// Returns false when the search space is exhausted.
fn backtrack_flip(
    vals: &mut [u8],
    trail: &mut Vec<u32>,
    decisions: &mut Vec<(u32, bool, usize)>,
    constraints: &[Constraint],
    occ: &[Vec<u32>],
    steps: &mut usize,
) -> bool {
    loop {
        let Some((v, flipped, mark)) = decisions.pop() else {
            return false;
        };
        while trail.len() > mark {
            let u = trail.pop().expect("trail length checked");
            vals[u as usize] = UNK;
        }
        if flipped {
            continue;
        }
        decisions.push((v, true, mark));
        vals[v as usize] = 1;
        trail.push(v);
        let mut q = vec![v];
        if propagate(vals, trail, &mut q, constraints, occ, steps) {
            return true;
        }
        // Conflict on the second branch too: fall through and unwind
        // this decision as well.
    }
}

/// Propagates pending assignments to fixpoint. Returns false on conflict;
/// assignments made are recorded on the trail.
fn propagate(
    vals: &mut [u8],
    trail: &mut Vec<u32>,
    queue: &mut Vec<u32>,
    constraints: &[Constraint],
    occ: &[Vec<u32>],
    steps: &mut usize,
) -> bool {
    while let Some(v) = queue.pop() {
        for &ci in &occ[v as usize] {
            *steps += 1;
            let c = &constraints[ci as usize];
            let mut assign = |vals: &mut [u8], var: u32, b: u8| -> Result<bool, ()> {
                match vals[var as usize] {
                    UNK => {
                        vals[var as usize] = b;
                        trail.push(var);
                        queue.push(var);
                        Ok(true)
                    }
                    x if x == b => Ok(false),
                    _ => Err(()),
                }
            };
            let ok = (|| -> Result<(), ()> {
                match *c {
                    Constraint::Fix(x, b) => {
                        assign(vals, x, b as u8)?;
                    }
                    Constraint::Eq(x, y) => {
                        if vals[x as usize] != UNK {
                            assign(vals, y, vals[x as usize])?;
                        } else if vals[y as usize] != UNK {
                            assign(vals, x, vals[y as usize])?;
                        }
                    }
                    Constraint::Neq(x, y) => {
                        if vals[x as usize] != UNK {
                            assign(vals, y, 1 - vals[x as usize])?;
                        } else if vals[y as usize] != UNK {
                            assign(vals, x, 1 - vals[y as usize])?;
                        }
                    }
                    Constraint::Leq(x, y) => {
                        if vals[x as usize] == 1 {
                            assign(vals, y, 1)?;
                        } else if vals[y as usize] == 0 {
                            assign(vals, x, 0)?;
                        }
                    }
                    Constraint::And3(o, a, b) => {
                        let (vo, va, vb) = (vals[o as usize], vals[a as usize], vals[b as usize]);
                        if va == 0 || vb == 0 {
                            assign(vals, o, 0)?;
                        } else if va == 1 && vb == 1 {
                            assign(vals, o, 1)?;
                        }
                        if vo == 1 {
                            assign(vals, a, 1)?;
                            assign(vals, b, 1)?;
                        } else if vo == 0 {
                            if va == 1 {
                                assign(vals, b, 0)?;
                            } else if vb == 1 {
                                assign(vals, a, 0)?;
                            }
                        }
                    }
                    Constraint::Or3(o, a, b) => {
                        let (vo, va, vb) = (vals[o as usize], vals[a as usize], vals[b as usize]);
                        if va == 1 || vb == 1 {
                            assign(vals, o, 1)?;
                        } else if va == 0 && vb == 0 {
                            assign(vals, o, 0)?;
                        }
                        if vo == 0 {
                            assign(vals, a, 0)?;
                            assign(vals, b, 0)?;
                        } else if vo == 1 {
                            if va == 0 {
                                assign(vals, b, 1)?;
                            } else if vb == 0 {
                                assign(vals, a, 1)?;
                            }
                        }
                    }
                    Constraint::NandZero(a, b) => {
                        if vals[a as usize] == 1 {
                            assign(vals, b, 0)?;
                        } else if vals[b as usize] == 1 {
                            assign(vals, a, 0)?;
                        }
                    }
                    Constraint::NorOne(a, b) => {
                        if vals[a as usize] == 0 {
                            assign(vals, b, 1)?;
                        } else if vals[b as usize] == 0 {
                            assign(vals, a, 1)?;
                        }
                    }
                }
                Ok(())
            })();
            if ok.is_err() {
                return false;
            }
        }
    }
    true
}

fn constraint_vars(c: &Constraint) -> Vec<u32> {
    match *c {
        Constraint::Fix(x, _) => vec![x],
        Constraint::Eq(x, y) | Constraint::Neq(x, y) | Constraint::Leq(x, y) => vec![x, y],
        Constraint::And3(o, a, b) | Constraint::Or3(o, a, b) => vec![o, a, b],
        Constraint::NandZero(a, b) | Constraint::NorOne(a, b) => vec![a, b],
    }
}
