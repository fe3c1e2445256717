//! Measurement scenarios and the algebras they present.
//!
//! A graphical scenario is a finite set of measurements, a reflexive
//! symmetric compatibility relation saying which of them can be performed
//! together, and a finite outcome set per measurement. A context is a set
//! of pairwise compatible measurements; its events are the joint outcome
//! assignments over the context. Two constructions turn a scenario into a
//! partial Boolean algebra:
//!
//! * [`build_bx`] writes the algebra down in closed form. An element is a
//!   set of events over a context, normalised to its minimal support; two
//!   elements are commeasurable exactly when their supports are jointly
//!   compatible, and the operations are set operations inside any shared
//!   context.
//! * [`build_ax_saturated`] reaches the same algebra from below: the
//!   coproduct of the per-measurement Boolean algebras, with every pair
//!   over compatible measurements related, run through the saturation
//!   engine. When the run stabilizes the quotient is isomorphic to the
//!   closed form; [`AxBuild::isomorphism_to`] exhibits the isomorphism.
//!
//! [`count_bx_elements`] counts the closed-form carrier without building
//! it, by inclusion-exclusion over contexts, so the two element listings
//! can cross-check each other.

pub mod model;

pub use model::{
    marginalise, model_pep_check, model_to_state, state_to_model, validate_model, EmpiricalModel,
    EventRef, ModelError, ModelReport, ModelViolation, PepViolation,
};

use crate::algebra::{coproduct_many, pack, ElementId, FinitePBA};
use crate::bitset::BitMatrix;
use crate::cliques::maximal_cliques;
use crate::saturation::{saturate, ExtensionSpec, IsoFailure, QuotientAlgebra};
use crate::saturation::lift_isomorphism;
use std::collections::{BTreeSet, HashMap, HashSet};

/// Largest number of joint outcomes a single context may have before
/// [`build_bx`] refuses to enumerate its subsets. Past this point the
/// per-context block alone has more than four thousand elements and
/// explicit tables stop being the right representation.
pub const MAX_EVENTS_PER_CONTEXT: usize = 12;

/// A finite measurement scenario: measurement labels, a compatibility
/// relation on them, and an outcome label set per measurement.
/// Measurements are kept sorted by name, so indices are stable across
/// reconstructions from documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphicalScenario {
    measurements: Vec<String>,
    outcomes: Vec<Vec<String>>,
    compat: BitMatrix,
}

/// Rejected scenario or event input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("measurement {name:?} is declared twice")]
    DuplicateMeasurement { name: String },
    #[error("unknown measurement {name:?}")]
    UnknownMeasurement { name: String },
    #[error("measurement {measurement:?} has an empty outcome set")]
    EmptyOutcomes { measurement: String },
    #[error("measurement {measurement:?} lists outcome {outcome:?} twice")]
    DuplicateOutcome { measurement: String, outcome: String },
    #[error("measurement {measurement:?} has no outcome {outcome:?}")]
    UnknownOutcome { measurement: String, outcome: String },
    #[error("context {{{context}}} has {events} joint outcomes, over the limit {limit}")]
    ContextTooLarge {
        context: String,
        events: usize,
        limit: usize,
    },
    #[error("measurements {a:?} and {b:?} are not compatible")]
    IncompatiblePair { a: String, b: String },
    #[error("event names {measurements} measurements but {outcomes} outcomes")]
    EventLength { measurements: usize, outcomes: usize },
}

impl GraphicalScenario {
    /// Builds a scenario from measurement declarations and compatible
    /// pairs. Declarations are sorted by measurement name; the relation
    /// is made reflexive and symmetric.
    pub fn new(
        measurements: Vec<(String, Vec<String>)>,
        compatible: &[(&str, &str)],
    ) -> Result<GraphicalScenario, ScenarioError> {
        let mut decls = measurements;
        decls.sort_by(|a, b| a.0.cmp(&b.0));
        for w in decls.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ScenarioError::DuplicateMeasurement {
                    name: w[0].0.clone(),
                });
            }
        }
        for (name, outs) in &decls {
            if outs.is_empty() {
                return Err(ScenarioError::EmptyOutcomes {
                    measurement: name.clone(),
                });
            }
            let mut seen = HashSet::new();
            for o in outs {
                if !seen.insert(o) {
                    return Err(ScenarioError::DuplicateOutcome {
                        measurement: name.clone(),
                        outcome: o.clone(),
                    });
                }
            }
        }
        let names: Vec<String> = decls.iter().map(|(n, _)| n.clone()).collect();
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut compat = BitMatrix::new(names.len());
        for i in 0..names.len() {
            compat.set(i, i, true);
        }
        for &(a, b) in compatible {
            let resolve = |n: &str| {
                index.get(n).copied().ok_or(ScenarioError::UnknownMeasurement {
                    name: n.to_owned(),
                })
            };
            compat.set_sym(resolve(a)?, resolve(b)?, true);
        }
        Ok(GraphicalScenario {
            measurements: names,
            outcomes: decls.into_iter().map(|(_, outs)| outs).collect(),
            compat,
        })
    }

    /// Convenience constructor for measurements with outcomes `0` and `1`.
    pub fn dichotomic(
        names: &[&str],
        compatible: &[(&str, &str)],
    ) -> Result<GraphicalScenario, ScenarioError> {
        Self::new(
            names
                .iter()
                .map(|n| ((*n).to_owned(), vec!["0".to_owned(), "1".to_owned()]))
                .collect(),
            compatible,
        )
    }

    pub fn measurement_count(&self) -> usize {
        self.measurements.len()
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn measurement_index(&self, name: &str) -> Option<usize> {
        self.measurements.iter().position(|m| m == name)
    }

    pub fn outcomes(&self, measurement: usize) -> &[String] {
        &self.outcomes[measurement]
    }

    /// The compatibility relation, reflexively.
    pub fn compatible(&self, a: usize, b: usize) -> bool {
        self.compat.get(a, b)
    }

    /// All proper compatible pairs `(a, b)` with `a < b`.
    pub fn compatible_pairs(&self) -> Vec<(usize, usize)> {
        self.compat.upper_pairs().collect()
    }

    pub fn is_context(&self, measurements: &[usize]) -> bool {
        measurements
            .iter()
            .enumerate()
            .all(|(i, &a)| measurements[i + 1..].iter().all(|&b| self.compatible(a, b)))
    }

    /// The inclusion-maximal contexts, each sorted, listed in
    /// lexicographic order.
    pub fn maximal_contexts(&self) -> Vec<Vec<usize>> {
        maximal_cliques(&self.compat)
    }

    /// Number of joint outcome assignments over the given measurements.
    pub fn event_count(&self, context: &[usize]) -> usize {
        context.iter().map(|&m| self.outcomes[m].len()).product()
    }

    /// Decodes an event number into one outcome index per context
    /// position. Events are numbered with the last position varying
    /// fastest, so numeric order is lexicographic order of the digits.
    pub fn event_digits(&self, context: &[usize], code: u32) -> Vec<u32> {
        let mut rem = code as usize;
        let mut digits = vec![0u32; context.len()];
        for p in (0..context.len()).rev() {
            let m = self.outcomes[context[p]].len();
            digits[p] = (rem % m) as u32;
            rem /= m;
        }
        debug_assert_eq!(rem, 0, "event code out of range for the context");
        digits
    }

    /// Inverse of [`GraphicalScenario::event_digits`].
    pub fn event_code(&self, context: &[usize], digits: &[u32]) -> u32 {
        debug_assert_eq!(context.len(), digits.len());
        let mut code = 0usize;
        for (p, &m) in context.iter().enumerate() {
            let width = self.outcomes[m].len();
            debug_assert!((digits[p] as usize) < width, "outcome index out of range");
            code = code * width + digits[p] as usize;
        }
        code as u32
    }

    /// Renders an event as `"x=o,y=o'"` in context order.
    pub fn event_label(&self, context: &[usize], code: u32) -> String {
        let digits = self.event_digits(context, code);
        context
            .iter()
            .zip(&digits)
            .map(|(&m, &d)| format!("{}={}", self.measurements[m], self.outcomes[m][d as usize]))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn context_names(&self, context: &[usize]) -> String {
        context
            .iter()
            .map(|&m| self.measurements[m].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Canonical name of a scenario-algebra element: the minimal set of
/// measurements the element depends on (sorted indices) and its events
/// over that support (sorted event numbers). The constants are
/// `(∅, ∅)` and `(∅, {0})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementRepr {
    pub support: Vec<usize>,
    pub events: Vec<u32>,
}

/// Strips every measurement the event set does not depend on. A position
/// can go exactly when the set is a full cylinder along it, so the
/// result is the unique minimal support.
fn minimise_support(
    scenario: &GraphicalScenario,
    support: &mut Vec<usize>,
    events: &mut BTreeSet<Vec<u32>>,
) {
    'scan: loop {
        for p in 0..support.len() {
            let width = scenario.outcomes(support[p]).len() as u32;
            let cylinder = events.iter().all(|e| {
                (0..width).all(|v| {
                    let mut probe = e.clone();
                    probe[p] = v;
                    events.contains(&probe)
                })
            });
            if cylinder {
                *events = events
                    .iter()
                    .map(|e| {
                        let mut e = e.clone();
                        e.remove(p);
                        e
                    })
                    .collect();
                support.remove(p);
                continue 'scan;
            }
        }
        return;
    }
}

fn canonical_repr(
    scenario: &GraphicalScenario,
    mut support: Vec<usize>,
    mut events: BTreeSet<Vec<u32>>,
) -> ElementRepr {
    minimise_support(scenario, &mut support, &mut events);
    // Lexicographic digit order is numeric event order, so the codes
    // come out sorted.
    let events: Vec<u32> = events
        .iter()
        .map(|e| scenario.event_code(&support, e))
        .collect();
    debug_assert!(events.windows(2).all(|w| w[0] < w[1]));
    ElementRepr { support, events }
}

fn render_label(scenario: &GraphicalScenario, repr: &ElementRepr) -> String {
    if repr.support.is_empty() {
        return if repr.events.is_empty() { "0" } else { "1" }.to_owned();
    }
    repr.events
        .iter()
        .map(|&code| format!("[{}]", scenario.event_label(&repr.support, code)))
        .collect::<Vec<_>>()
        .join("|")
}

/// The closed-form scenario algebra together with its bookkeeping: the
/// maximal contexts, the canonical name of every element, and per
/// context the element of each event subset.
pub struct ScenarioAlgebra {
    pub algebra: FinitePBA,
    scenario: GraphicalScenario,
    contexts: Vec<Vec<usize>>,
    reprs: Vec<ElementRepr>,
    index: HashMap<ElementRepr, ElementId>,
    blocks: Vec<Vec<ElementId>>,
}

impl ScenarioAlgebra {
    pub fn scenario(&self) -> &GraphicalScenario {
        &self.scenario
    }

    /// The maximal contexts, in the order [`ScenarioAlgebra::block`]
    /// uses.
    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    /// The elements of one maximal context's Boolean block, indexed by
    /// event-subset bitmask. Entry `1 << code` is the event element for
    /// `code`, entry `0` is zero and the full mask is one.
    pub fn block(&self, context: usize) -> &[ElementId] {
        &self.blocks[context]
    }

    pub fn repr(&self, e: ElementId) -> &ElementRepr {
        &self.reprs[e.idx()]
    }

    /// The element whose events are exactly the given single assignment.
    pub fn event_element(
        &self,
        measurements: &[&str],
        outcomes: &[&str],
    ) -> Result<ElementId, ScenarioError> {
        if measurements.len() != outcomes.len() {
            return Err(ScenarioError::EventLength {
                measurements: measurements.len(),
                outcomes: outcomes.len(),
            });
        }
        let mut pairs = Vec::with_capacity(measurements.len());
        for (name, out) in measurements.iter().zip(outcomes) {
            let m = self.scenario.measurement_index(name).ok_or_else(|| {
                ScenarioError::UnknownMeasurement {
                    name: (*name).to_owned(),
                }
            })?;
            let d = self
                .scenario
                .outcomes(m)
                .iter()
                .position(|o| o == out)
                .ok_or_else(|| ScenarioError::UnknownOutcome {
                    measurement: (*name).to_owned(),
                    outcome: (*out).to_owned(),
                })?;
            pairs.push((m, d as u32));
        }
        pairs.sort();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ScenarioError::DuplicateMeasurement {
                    name: self.scenario.measurements[w[0].0].clone(),
                });
            }
        }
        for (i, &(a, _)) in pairs.iter().enumerate() {
            for &(b, _) in &pairs[i + 1..] {
                if !self.scenario.compatible(a, b) {
                    return Err(ScenarioError::IncompatiblePair {
                        a: self.scenario.measurements[a].clone(),
                        b: self.scenario.measurements[b].clone(),
                    });
                }
            }
        }
        let support: Vec<usize> = pairs.iter().map(|&(m, _)| m).collect();
        let digits: Vec<u32> = pairs.iter().map(|&(_, d)| d).collect();
        Ok(self
            .canonical_id(support, BTreeSet::from([digits]))
            .expect("a compatible support extends to some maximal context"))
    }

    /// Canonicalises and looks up. `None` only when the support is not a
    /// context of this scenario.
    fn canonical_id(&self, support: Vec<usize>, events: BTreeSet<Vec<u32>>) -> Option<ElementId> {
        let repr = canonical_repr(&self.scenario, support, events);
        self.index.get(&repr).copied()
    }
}

/// Builds the closed-form scenario algebra, refusing any maximal context
/// with more than `max_events_per_context` joint outcomes.
pub fn build_bx(
    scenario: &GraphicalScenario,
    max_events_per_context: usize,
) -> Result<ScenarioAlgebra, ScenarioError> {
    assert!(
        (1..=MAX_EVENTS_PER_CONTEXT).contains(&max_events_per_context),
        "event limit must be between 1 and {MAX_EVENTS_PER_CONTEXT}"
    );
    let contexts = scenario.maximal_contexts();
    for ctx in &contexts {
        let events = scenario.event_count(ctx);
        if events > max_events_per_context {
            return Err(ScenarioError::ContextTooLarge {
                context: scenario.context_names(ctx),
                events,
                limit: max_events_per_context,
            });
        }
    }

    let zero_repr = ElementRepr {
        support: Vec::new(),
        events: Vec::new(),
    };
    let one_repr = ElementRepr {
        support: Vec::new(),
        events: vec![0],
    };
    let mut reprs = vec![zero_repr, one_repr];
    let mut index: HashMap<ElementRepr, ElementId> = reprs
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), ElementId(i as u32)))
        .collect();
    let mut blocks = Vec::with_capacity(contexts.len());
    for ctx in &contexts {
        let events = scenario.event_count(ctx) as u32;
        let mut block = Vec::with_capacity(1usize << events);
        for mask in 0u32..1 << events {
            let set: BTreeSet<Vec<u32>> = (0..events)
                .filter(|code| mask >> code & 1 == 1)
                .map(|code| scenario.event_digits(ctx, code))
                .collect();
            let repr = canonical_repr(scenario, ctx.clone(), set);
            let id = match index.get(&repr) {
                Some(&id) => id,
                None => {
                    let id = ElementId(reprs.len() as u32);
                    index.insert(repr.clone(), id);
                    reprs.push(repr);
                    id
                }
            };
            block.push(id);
        }
        blocks.push(block);
    }

    let n = reprs.len();
    let labels: Vec<String> = reprs.iter().map(|r| render_label(scenario, r)).collect();

    let mut neg = vec![ElementId(0); n];
    neg[0] = ElementId(1);
    neg[1] = ElementId(0);
    for (i, r) in reprs.iter().enumerate().skip(2) {
        let total = scenario.event_count(&r.support) as u32;
        let complement: Vec<u32> = (0..total)
            .filter(|c| r.events.binary_search(c).is_err())
            .collect();
        let key = ElementRepr {
            support: r.support.clone(),
            events: complement,
        };
        neg[i] = *index
            .get(&key)
            .expect("complement has the same support, so its block scan reached it");
    }

    let mut comm = BitMatrix::new(n);
    let mut meet: HashMap<u64, u32> = HashMap::new();
    let mut join: HashMap<u64, u32> = HashMap::new();
    for block in &blocks {
        for (m1, &a) in block.iter().enumerate() {
            for (m2, &b) in block.iter().enumerate().skip(m1) {
                comm.set_sym(a.idx(), b.idx(), true);
                // An element pair can recur in several blocks; the entry
                // must not depend on which block computed it.
                let m = block[m1 & m2].0;
                let j = block[m1 | m2].0;
                if let Some(prev) = meet.insert(pack(a.0, b.0), m) {
                    debug_assert_eq!(prev, m, "blocks disagree on a meet");
                }
                if let Some(prev) = join.insert(pack(a.0, b.0), j) {
                    debug_assert_eq!(prev, j, "blocks disagree on a join");
                }
            }
        }
    }

    let algebra = FinitePBA::assemble(labels, ElementId(0), ElementId(1), neg, comm, meet, join);
    Ok(ScenarioAlgebra {
        algebra,
        scenario: scenario.clone(),
        contexts,
        reprs,
        index,
        blocks,
    })
}

/// Counts the closed-form carrier without building it. Per context
/// `σ`, the elements whose minimal support is exactly `σ` number
/// `2^events(σ)` minus the count for every proper sub-context; the
/// carrier is the sum over all contexts, the empty one contributing the
/// two constants.
pub fn count_bx_elements(scenario: &GraphicalScenario) -> u128 {
    let mut contexts: BTreeSet<Vec<usize>> = BTreeSet::new();
    for ctx in scenario.maximal_contexts() {
        assert!(ctx.len() <= 24, "context too large to enumerate sub-contexts");
        for mask in 0u32..1 << ctx.len() {
            contexts.insert(
                ctx.iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &m)| m)
                    .collect(),
            );
        }
    }
    let mut order: Vec<Vec<usize>> = contexts.into_iter().collect();
    order.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let mut fresh: HashMap<Vec<usize>, u128> = HashMap::new();
    let mut total = 0u128;
    for ctx in order {
        let events: u32 = ctx
            .iter()
            .map(|&m| scenario.outcomes(m).len())
            .try_fold(1u32, |acc, w| acc.checked_mul(w as u32))
            .expect("event count overflows");
        let subsets = 1u128
            .checked_shl(events)
            .expect("too many events to count subsets");
        let mut inner = 0u128;
        for mask in 0u32..(1 << ctx.len()) - 1 {
            let sub: Vec<usize> = ctx
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &m)| m)
                .collect();
            inner += fresh[&sub];
        }
        let here = subsets - inner;
        total = total.checked_add(here).expect("carrier count overflows");
        fresh.insert(ctx, here);
    }
    total
}

/// A saturation run over the coproduct of the per-measurement Boolean
/// algebras, with everything over compatible measurements related. Keeps
/// the base and the relation so morphisms can be lifted out of the
/// quotient afterwards.
pub struct AxBuild {
    pub quotient: QuotientAlgebra,
    pub base: FinitePBA,
    /// Per measurement, the image of its Boolean algebra in the base.
    /// Local element `m` of a measurement is the outcome subset with
    /// bitmask `m`.
    pub injections: Vec<Vec<ElementId>>,
    pub relation: Vec<(ElementId, ElementId)>,
    pub depth_limit: u32,
    scenario: GraphicalScenario,
}

impl AxBuild {
    pub fn scenario(&self) -> &GraphicalScenario {
        &self.scenario
    }

    /// The extension problem the quotient was saturated from.
    pub fn spec(&self) -> ExtensionSpec<'_> {
        ExtensionSpec {
            base: &self.base,
            relation: self.relation.clone(),
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit: self.depth_limit,
        }
    }

    /// The base-to-closed-form morphism sending each outcome subset of a
    /// measurement to the element with that support.
    pub fn cylinder_map(&self, bx: &ScenarioAlgebra) -> Vec<ElementId> {
        assert_eq!(
            *bx.scenario(),
            self.scenario,
            "closed form was built for a different scenario"
        );
        let mut h = vec![bx.algebra.zero(); self.base.size()];
        for (mi, image) in self.injections.iter().enumerate() {
            let width = self.scenario.outcomes(mi).len() as u32;
            for mask in 0..image.len() as u32 {
                let events: BTreeSet<Vec<u32>> = (0..width)
                    .filter(|o| mask >> o & 1 == 1)
                    .map(|o| vec![o])
                    .collect();
                h[image[mask as usize].idx()] = bx
                    .canonical_id(vec![mi], events)
                    .expect("single measurements are contexts");
            }
        }
        h
    }

    /// Lifts the cylinder map through the quotient and demands an
    /// isomorphism onto the closed form. Succeeds exactly when the
    /// saturation reached the full scenario algebra.
    pub fn isomorphism_to(
        &self,
        bx: &ScenarioAlgebra,
    ) -> Result<(Vec<ElementId>, Vec<ElementId>), IsoFailure> {
        lift_isomorphism(&self.spec(), &self.quotient, &bx.algebra, &self.cylinder_map(bx))
    }
}

/// Saturates the free presentation of the scenario algebra up to the
/// given term depth. Stabilization is reported on the quotient; a
/// non-stabilized run is an approximation from below, not the algebra.
pub fn build_ax_saturated(scenario: &GraphicalScenario, depth_limit: u32) -> AxBuild {
    let parts: Vec<FinitePBA> = (0..scenario.measurement_count())
        .map(|m| {
            let atoms: Vec<&str> = scenario.outcomes(m).iter().map(String::as_str).collect();
            FinitePBA::boolean(&atoms).expect("scenario outcome sets are non-empty")
        })
        .collect();
    let refs: Vec<&FinitePBA> = parts.iter().collect();
    let cp = coproduct_many(&refs);
    let constants = [cp.algebra.zero(), cp.algebra.one()];
    let mut relation = Vec::new();
    for (x, y) in scenario.compatible_pairs() {
        for a in parts[x].elements() {
            let ia = cp.images[x][a.idx()];
            if constants.contains(&ia) {
                continue;
            }
            for b in parts[y].elements() {
                let ib = cp.images[y][b.idx()];
                if constants.contains(&ib) {
                    continue;
                }
                relation.push((ia, ib));
            }
        }
    }
    let quotient = {
        let spec = ExtensionSpec {
            base: &cp.algebra,
            relation: relation.clone(),
            force_equal: Vec::new(),
            lep_rule: false,
            depth_limit,
        };
        saturate(&spec).expect("coproduct images are in range")
    };
    AxBuild {
        quotient,
        base: cp.algebra,
        injections: cp.images,
        relation,
        depth_limit,
        scenario: scenario.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::is_morphism;
    use std::collections::HashSet;

    fn single() -> GraphicalScenario {
        GraphicalScenario::dichotomic(&["a"], &[]).expect("valid scenario")
    }

    fn pair_compat() -> GraphicalScenario {
        GraphicalScenario::dichotomic(&["x", "y"], &[("x", "y")]).expect("valid scenario")
    }

    fn pair_incompat() -> GraphicalScenario {
        GraphicalScenario::dichotomic(&["x", "y"], &[]).expect("valid scenario")
    }

    fn path3() -> GraphicalScenario {
        GraphicalScenario::dichotomic(&["a", "b", "c"], &[("a", "b"), ("b", "c")])
            .expect("valid scenario")
    }

    fn chsh() -> GraphicalScenario {
        GraphicalScenario::dichotomic(
            &["a1", "a2", "b1", "b2"],
            &[("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2")],
        )
        .expect("valid scenario")
    }

    fn magic_square() -> GraphicalScenario {
        let names: Vec<String> = (1..=3)
            .flat_map(|r| (1..=3).map(move |c| format!("m{r}{c}")))
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut pairs = Vec::new();
        for i in 0..9 {
            for j in i + 1..9 {
                if i / 3 == j / 3 || i % 3 == j % 3 {
                    pairs.push((refs[i], refs[j]));
                }
            }
        }
        GraphicalScenario::dichotomic(&refs, &pairs).expect("valid scenario")
    }

    fn bell_422() -> GraphicalScenario {
        let names = ["a1", "a2", "b1", "b2", "c1", "c2", "d1", "d2"];
        let mut pairs = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                if i / 2 != j / 2 {
                    pairs.push((names[i], names[j]));
                }
            }
        }
        GraphicalScenario::dichotomic(&names, &pairs).expect("valid scenario")
    }

    fn complete_dichotomic(k: usize) -> GraphicalScenario {
        let names = ["p", "q", "r", "s"];
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                pairs.push((names[i], names[j]));
            }
        }
        GraphicalScenario::dichotomic(&names[..k], &pairs).expect("valid scenario")
    }

    #[test]
    fn construction_sorts_and_checks_input() {
        let s = GraphicalScenario::new(
            vec![
                ("b".to_owned(), vec!["x".to_owned(), "y".to_owned()]),
                ("a".to_owned(), vec!["0".to_owned(), "1".to_owned(), "2".to_owned()]),
            ],
            &[("b", "a")],
        )
        .expect("valid scenario");
        assert_eq!(s.measurements(), ["a", "b"]);
        assert_eq!(s.outcomes(0).len(), 3);
        assert!(s.compatible(0, 1) && s.compatible(1, 0) && s.compatible(0, 0));
        assert_eq!(s.compatible_pairs(), vec![(0, 1)]);

        let dup = GraphicalScenario::dichotomic(&["a", "a"], &[]);
        assert!(matches!(dup, Err(ScenarioError::DuplicateMeasurement { .. })));
        let empty = GraphicalScenario::new(vec![("a".to_owned(), vec![])], &[]);
        assert!(matches!(empty, Err(ScenarioError::EmptyOutcomes { .. })));
        let dup_out = GraphicalScenario::new(
            vec![("a".to_owned(), vec!["0".to_owned(), "0".to_owned()])],
            &[],
        );
        assert!(matches!(dup_out, Err(ScenarioError::DuplicateOutcome { .. })));
        let unknown = GraphicalScenario::dichotomic(&["a"], &[("a", "z")]);
        assert!(matches!(unknown, Err(ScenarioError::UnknownMeasurement { .. })));
    }

    #[test]
    fn maximal_contexts_match_hand_enumeration() {
        assert_eq!(chsh().maximal_contexts(), vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
        assert_eq!(
            magic_square().maximal_contexts(),
            vec![
                vec![0, 1, 2],
                vec![0, 3, 6],
                vec![1, 4, 7],
                vec![2, 5, 8],
                vec![3, 4, 5],
                vec![6, 7, 8],
            ]
        );
        assert_eq!(complete_dichotomic(3).maximal_contexts(), vec![vec![0, 1, 2]]);
        assert_eq!(path3().maximal_contexts(), vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(pair_incompat().maximal_contexts(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn event_numbering_is_lexicographic() {
        let s = GraphicalScenario::new(
            vec![
                ("a".to_owned(), vec!["0".to_owned(), "1".to_owned(), "2".to_owned()]),
                ("b".to_owned(), vec!["0".to_owned(), "1".to_owned()]),
            ],
            &[("a", "b")],
        )
        .expect("valid scenario");
        let ctx = [0usize, 1];
        assert_eq!(s.event_count(&ctx), 6);
        assert_eq!(s.event_digits(&ctx, 0), vec![0, 0]);
        assert_eq!(s.event_digits(&ctx, 1), vec![0, 1]);
        assert_eq!(s.event_digits(&ctx, 2), vec![1, 0]);
        assert_eq!(s.event_digits(&ctx, 5), vec![2, 1]);
        for code in 0..6 {
            assert_eq!(s.event_code(&ctx, &s.event_digits(&ctx, code)), code);
        }
        assert_eq!(s.event_label(&ctx, 2), "a=1,b=0");
    }

    #[test]
    fn canonical_form_reduces_cylinders() {
        let s = pair_compat();
        let ctx = vec![0usize, 1];
        let repr = |events: &[[u32; 2]]| {
            canonical_repr(
                &s,
                ctx.clone(),
                events.iter().map(|e| e.to_vec()).collect(),
            )
        };
        assert_eq!(
            repr(&[[0, 0], [0, 1]]),
            ElementRepr { support: vec![0], events: vec![0] }
        );
        assert_eq!(
            repr(&[[1, 0], [1, 1]]),
            ElementRepr { support: vec![0], events: vec![1] }
        );
        assert_eq!(
            repr(&[[0, 0], [1, 1]]),
            ElementRepr { support: vec![0, 1], events: vec![0, 3] }
        );
        assert_eq!(
            repr(&[[0, 0], [0, 1], [1, 0], [1, 1]]),
            ElementRepr { support: vec![], events: vec![0] }
        );
        assert_eq!(repr(&[]), ElementRepr { support: vec![], events: vec![] });
        assert_eq!(
            repr(&[[0, 0]]),
            ElementRepr { support: vec![0, 1], events: vec![0] }
        );
    }

    #[test]
    fn carriers_match_count_oracle_and_validate() {
        let cases = [
            (single(), 4usize),
            (pair_incompat(), 6),
            (pair_compat(), 16),
            (chsh(), 50),
            (magic_square(), 1508),
        ];
        for (s, expect) in cases {
            let bx = build_bx(&s, 8).expect("within limits");
            assert_eq!(bx.algebra.size(), expect, "{:?}", s.measurements());
            assert_eq!(count_bx_elements(&s), expect as u128);
            let labels: HashSet<&str> =
                bx.algebra.elements().map(|e| bx.algebra.label(e)).collect();
            assert_eq!(labels.len(), expect, "labels must be distinct");
            let report = bx.algebra.validate();
            assert!(report.ok, "violations: {:?}", report.violations);
        }
    }

    #[test]
    fn count_oracle_agrees_with_closed_forms() {
        // A complete scenario has a single context, so the carrier is the
        // full powerset of its joint outcomes. The recursion has to
        // reproduce that without knowing it.
        for k in 1..=4usize {
            let expect = 1u128 << (1u32 << k);
            assert_eq!(count_bx_elements(&complete_dichotomic(k)), expect);
        }
        assert_eq!(count_bx_elements(&bell_422()), 1_040_738);
        assert_eq!(
            count_bx_elements(&GraphicalScenario::dichotomic(&[], &[]).unwrap()),
            2
        );
    }

    #[test]
    fn blocks_realise_boolean_powersets() {
        let bx = build_bx(&pair_compat(), 8).expect("within limits");
        let target = FinitePBA::boolean(&["e0", "e1", "e2", "e3"]).expect("atoms");
        let block = bx.block(0);
        assert_eq!(block.len(), 16);
        let mut fwd = vec![ElementId(0); 16];
        let mut inv = vec![ElementId(0); 16];
        for (mask, &e) in block.iter().enumerate() {
            fwd[e.idx()] = ElementId(mask as u32);
            inv[mask] = e;
        }
        assert!(is_morphism(&bx.algebra, &target, &fwd).is_ok());
        assert!(is_morphism(&target, &bx.algebra, &inv).is_ok());
    }

    #[test]
    fn comm_holds_iff_supports_are_jointly_compatible() {
        let bx = build_bx(&chsh(), 8).expect("within limits");
        let s = bx.scenario().clone();
        for a in bx.algebra.elements() {
            for b in bx.algebra.elements() {
                let mut union: Vec<usize> = bx.repr(a).support.clone();
                union.extend(&bx.repr(b).support);
                union.sort_unstable();
                union.dedup();
                assert_eq!(
                    bx.algebra.comm(a, b),
                    s.is_context(&union),
                    "{} vs {}",
                    bx.algebra.label(a),
                    bx.algebra.label(b)
                );
            }
        }
    }

    #[test]
    fn block_masks_roundtrip_through_canonical_names() {
        for s in [chsh(), magic_square()] {
            let bx = build_bx(&s, 8).expect("within limits");
            for (ci, ctx) in bx.contexts().iter().enumerate() {
                let events = s.event_count(ctx) as u32;
                for mask in 0u32..1 << events {
                    let repr = bx.repr(bx.block(ci)[mask as usize]);
                    let pos: Vec<usize> = repr
                        .support
                        .iter()
                        .map(|m| ctx.iter().position(|x| x == m).expect("support inside context"))
                        .collect();
                    let mut back = 0u32;
                    for code in 0..events {
                        let digits = s.event_digits(ctx, code);
                        let proj: Vec<u32> = pos.iter().map(|&p| digits[p]).collect();
                        if repr.events.binary_search(&s.event_code(&repr.support, &proj)).is_ok() {
                            back |= 1 << code;
                        }
                    }
                    assert_eq!(back, mask, "context {ci} of {:?}", s.measurements());
                }
            }
        }
    }

    #[test]
    fn neg_complements_within_the_support() {
        let bx = build_bx(&chsh(), 8).expect("within limits");
        for e in bx.algebra.elements() {
            let n = bx.algebra.neg(e);
            assert_eq!(bx.algebra.neg(n), e);
            if e == bx.algebra.zero() || e == bx.algebra.one() {
                continue;
            }
            let (re, rn) = (bx.repr(e), bx.repr(n));
            assert_eq!(re.support, rn.support);
            let total = bx.scenario().event_count(&re.support) as u32;
            let mut all: Vec<u32> = re.events.iter().chain(&rn.events).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..total).collect::<Vec<_>>());
        }
    }

    #[test]
    fn oversized_contexts_are_refused() {
        assert!(matches!(
            build_bx(&bell_422(), 12),
            Err(ScenarioError::ContextTooLarge { events: 16, .. })
        ));
        assert!(matches!(
            build_bx(&chsh(), 3),
            Err(ScenarioError::ContextTooLarge { events: 4, .. })
        ));
    }

    #[test]
    fn event_elements_resolve_names_in_any_order() {
        let bx = build_bx(&chsh(), 8).expect("within limits");
        let e1 = bx.event_element(&["a1", "b1"], &["0", "0"]).expect("event");
        let e2 = bx.event_element(&["b1", "a1"], &["0", "0"]).expect("event");
        assert_eq!(e1, e2);
        assert_eq!(bx.algebra.label(e1), "[a1=0,b1=0]");
        assert_eq!(bx.repr(e1).support, vec![0, 2]);
        let single = bx.event_element(&["a1"], &["1"]).expect("event");
        assert_eq!(bx.algebra.label(single), "[a1=1]");

        assert!(matches!(
            bx.event_element(&["c1"], &["0"]),
            Err(ScenarioError::UnknownMeasurement { .. })
        ));
        assert!(matches!(
            bx.event_element(&["a1"], &["7"]),
            Err(ScenarioError::UnknownOutcome { .. })
        ));
        assert!(matches!(
            bx.event_element(&["a1", "a1"], &["0", "1"]),
            Err(ScenarioError::DuplicateMeasurement { .. })
        ));
        assert!(matches!(
            bx.event_element(&["a1", "a2"], &["0", "0"]),
            Err(ScenarioError::IncompatiblePair { .. })
        ));
        assert!(matches!(
            bx.event_element(&["a1"], &[]),
            Err(ScenarioError::EventLength { .. })
        ));
    }

    #[test]
    fn saturation_reaches_the_closed_form_on_small_scenarios() {
        let cases = [
            (single(), 1u32),
            (pair_incompat(), 1),
            (pair_compat(), 3),
            (path3(), 3),
            (chsh(), 3),
        ];
        for (s, depth) in cases {
            let bx = build_bx(&s, 8).expect("within limits");
            let ax = build_ax_saturated(&s, depth);
            assert!(ax.quotient.stabilized, "depth {depth} too shallow for {:?}", s.measurements());
            assert!(!ax.quotient.collapsed);
            assert_eq!(ax.quotient.algebra.size(), bx.algebra.size());
            ax.isomorphism_to(&bx).expect("saturation reached the closed form");
        }
    }

    #[test]
    fn shallow_saturation_reports_non_stabilized() {
        let ax = build_ax_saturated(&pair_compat(), 0);
        assert!(!ax.quotient.stabilized);
        assert_eq!(ax.quotient.algebra.size(), 6);
    }

    #[test]
    fn empty_scenario_has_only_the_constants() {
        let s = GraphicalScenario::dichotomic(&[], &[]).expect("valid scenario");
        assert_eq!(s.maximal_contexts(), vec![Vec::<usize>::new()]);
        let bx = build_bx(&s, 8).expect("within limits");
        assert_eq!(bx.algebra.size(), 2);
        assert!(bx.algebra.validate().ok);
    }
}
