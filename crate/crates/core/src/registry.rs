//! Named example objects shared by the test suites and the command line.
//!
//! Everything here is deterministic: the same name always produces the
//! same object, so golden tests can pin ids and labels. The expensive
//! algebras are built once per process and handed out by reference.

use crate::algebra::{coproduct, coproduct_many, FinitePBA};
use crate::analysis::RationalState;
use crate::rational::{ratio, rational_zero};
use crate::saturation::{saturate, ExtensionSpec};
use crate::scenario::{
    build_bx, model_to_state, EmpiricalModel, GraphicalScenario, ScenarioAlgebra,
    MAX_EVENTS_PER_CONTEXT,
};
use std::sync::OnceLock;

/// The two-element algebra.
pub fn two() -> FinitePBA {
    FinitePBA::two()
}

/// The four-element Boolean algebra, atoms `p` and `q`.
pub fn four() -> FinitePBA {
    FinitePBA::boolean(&["p", "q"]).expect("two atoms")
}

/// The sixteen-element Boolean algebra, atoms `p`, `q`, `r`, `s`.
pub fn sixteen() -> FinitePBA {
    FinitePBA::boolean(&["p", "q", "r", "s"]).expect("four atoms")
}

/// The coproduct of two four-element Boolean algebras: two incompatible
/// binary measurements, six elements.
pub fn four_oplus_four() -> FinitePBA {
    coproduct(&four(), &four()).algebra
}

/// One dichotomic measurement, no compatibilities.
pub fn single_scenario() -> GraphicalScenario {
    GraphicalScenario::dichotomic(&["a"], &[]).expect("valid scenario")
}

/// Two compatible dichotomic measurements.
pub fn pair_compat_scenario() -> GraphicalScenario {
    GraphicalScenario::dichotomic(&["x", "y"], &[("x", "y")]).expect("valid scenario")
}

/// Two incompatible dichotomic measurements.
pub fn pair_incompat_scenario() -> GraphicalScenario {
    GraphicalScenario::dichotomic(&["x", "y"], &[]).expect("valid scenario")
}

/// Three dichotomic measurements in a path: `a ~ b ~ c` but not `a ~ c`.
pub fn path3_scenario() -> GraphicalScenario {
    GraphicalScenario::dichotomic(&["a", "b", "c"], &[("a", "b"), ("b", "c")])
        .expect("valid scenario")
}

/// The (2,2,2) bipartite scenario: two dichotomic measurements per party,
/// every cross pair compatible.
pub fn chsh_scenario() -> GraphicalScenario {
    GraphicalScenario::dichotomic(
        &["a1", "a2", "b1", "b2"],
        &[("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2")],
    )
    .expect("valid scenario")
}

/// Nine dichotomic measurements on a 3×3 grid, compatible along rows and
/// columns.
pub fn magic_square_scenario() -> GraphicalScenario {
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

/// The (4,2,2) scenario: four parties with two dichotomic measurements
/// each, compatibility exactly across parties.
pub fn bell_422_scenario() -> GraphicalScenario {
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

/// The scenario algebra of the CHSH scenario, 50 elements.
pub fn chsh_bx() -> &'static ScenarioAlgebra {
    static CELL: OnceLock<ScenarioAlgebra> = OnceLock::new();
    CELL.get_or_init(|| {
        build_bx(&chsh_scenario(), MAX_EVENTS_PER_CONTEXT).expect("within limits")
    })
}

/// The scenario algebra of the magic-square scenario, 1508 elements.
pub fn magic_bx() -> &'static ScenarioAlgebra {
    static CELL: OnceLock<ScenarioAlgebra> = OnceLock::new();
    CELL.get_or_init(|| {
        build_bx(&magic_square_scenario(), MAX_EVENTS_PER_CONTEXT).expect("within limits")
    })
}

/// The magic-square algebra with the parity constraints forced: every row
/// context and the first two column contexts have their even-parity event
/// set identified with 1, the third column its odd-parity set. A global
/// assignment would need the total parity of the nine cells to be both
/// even and odd, so the result admits no morphism to 2.
pub fn magic_forced() -> &'static FinitePBA {
    static CELL: OnceLock<FinitePBA> = OnceLock::new();
    CELL.get_or_init(|| {
        let bx = magic_bx();
        let s = bx.scenario();
        let odd_context = bx
            .contexts()
            .iter()
            .position(|c| c == &[2usize, 5, 8])
            .expect("third column is a maximal context");
        let mut force_equal = Vec::new();
        for (ci, ctx) in bx.contexts().iter().enumerate() {
            let mut even_mask = 0usize;
            for code in 0..s.event_count(ctx) as u32 {
                let parity: u32 = s.event_digits(ctx, code).iter().sum();
                if parity % 2 == 0 {
                    even_mask |= 1 << code;
                }
            }
            let even = bx.block(ci)[even_mask];
            let pick = if ci == odd_context {
                bx.algebra.neg(even)
            } else {
                even
            };
            force_equal.push((pick, bx.algebra.one()));
        }
        let spec = ExtensionSpec {
            base: &bx.algebra,
            relation: Vec::new(),
            force_equal,
            lep_rule: false,
            depth_limit: 2,
        };
        let q = saturate(&spec).expect("forced pairs come from the carrier");
        assert!(q.stabilized, "parity forcing must stabilize");
        assert!(!q.collapsed, "parity forcing must not collapse the algebra");
        assert!(q.algebra.validate().ok);
        q.algebra
    })
}

/// The basis layout behind [`cabello_18`]: nine four-element bases over
/// eighteen vertices, each vertex in exactly two bases.
pub fn cabello_18_bases() -> [[usize; 4]; 9] {
    [
        [1, 2, 3, 4],
        [4, 5, 6, 7],
        [7, 8, 9, 10],
        [10, 11, 12, 13],
        [13, 14, 15, 16],
        [16, 17, 18, 1],
        [2, 5, 11, 14],
        [3, 8, 12, 17],
        [6, 9, 15, 18],
    ]
}

/// The 18-vertex algebra pasted from the nine bases of
/// [`cabello_18_bases`]: one 16-element Boolean block per basis, the two
/// copies of each vertex identified, closed under everything the
/// identification entails. Six vertex triples are pairwise commeasurable
/// through three different bases, so the closure completes each into a
/// block of its own with a fresh fourth atom; the carrier settles at 104
/// elements. A direct context pasting cannot express this algebra: see
/// [`crate::algebra::GluedError::AxiomViolation`].
///
/// Each basis puts exactly one of its four atoms to 1 under a morphism
/// to 2, giving nine trues in total; each vertex sits in two bases and so
/// contributes an even count. Nine is odd, so no morphism to 2 exists.
pub fn cabello_18() -> &'static FinitePBA {
    static CELL: OnceLock<FinitePBA> = OnceLock::new();
    CELL.get_or_init(|| {
        let bases = cabello_18_bases();
        let blocks: Vec<FinitePBA> = bases
            .iter()
            .map(|basis| {
                let atoms: Vec<String> = basis.iter().map(|v| format!("v{v}")).collect();
                let refs: Vec<&str> = atoms.iter().map(String::as_str).collect();
                FinitePBA::boolean(&refs).expect("four atoms")
            })
            .collect();
        let parts: Vec<&FinitePBA> = blocks.iter().collect();
        let cp = coproduct_many(&parts);

        // Both copies of each vertex, as (block, atom bit) images.
        let mut force_equal = Vec::new();
        let mut seen: [Option<(usize, usize)>; 19] = [None; 19];
        for (bi, basis) in bases.iter().enumerate() {
            for (ai, &v) in basis.iter().enumerate() {
                let here = cp.images[bi][1 << ai];
                match seen[v] {
                    None => seen[v] = Some((bi, ai)),
                    Some((pb, pa)) => force_equal.push((cp.images[pb][1 << pa], here)),
                }
            }
        }
        assert_eq!(force_equal.len(), 18, "each vertex sits in exactly two bases");

        let spec = ExtensionSpec {
            base: &cp.algebra,
            relation: Vec::new(),
            force_equal,
            lep_rule: false,
            depth_limit: 2,
        };
        let q = saturate(&spec).expect("forced pairs come from the carrier");
        assert!(q.stabilized, "vertex identification must stabilize");
        assert!(!q.collapsed, "vertex identification must not collapse the algebra");
        assert_eq!(q.algebra.size(), 104);
        q.algebra
    })
}

/// The no-signalling box winning the CHSH game with certainty: uniform
/// marginals, perfect correlation except in the (a2, b2) context, which
/// anticorrelates.
pub fn pr_box() -> EmpiricalModel {
    EmpiricalModel::from_fn(chsh_scenario(), |ctx, digits| {
        let anti = ctx[0] == 1 && ctx[1] == 3;
        if (digits[0] == digits[1]) != anti {
            ratio(1, 2)
        } else {
            rational_zero()
        }
    })
}

/// Two independent PR boxes on the (4,2,2) scenario: parties a, b share
/// one box, parties c, d the other; the joint table is the product.
pub fn two_pr_boxes() -> EmpiricalModel {
    EmpiricalModel::from_fn(bell_422_scenario(), |ctx, digits| {
        let left_anti = ctx[0] == 1 && ctx[1] == 3;
        let right_anti = ctx[2] == 5 && ctx[3] == 7;
        let left = (digits[0] == digits[1]) != left_anti;
        let right = (digits[2] == digits[3]) != right_anti;
        if left && right {
            ratio(1, 4)
        } else {
            rational_zero()
        }
    })
}

/// The PR-box state on the CHSH scenario algebra.
pub fn pr_box_state() -> RationalState {
    model_to_state(&pr_box(), chsh_bx()).expect("matching scenario")
}

/// Names of the stock algebras, in the order the suites iterate them.
pub const ALGEBRA_NAMES: [&str; 8] = [
    "two",
    "four",
    "sixteen",
    "four-oplus-four",
    "chsh-bx",
    "magic-square-bx",
    "magic-forced",
    "cabello-18",
];

/// Looks up a stock algebra by name. The cached ones are cloned.
pub fn algebra_by_name(name: &str) -> Option<FinitePBA> {
    Some(match name {
        "two" => two(),
        "four" => four(),
        "sixteen" => sixteen(),
        "four-oplus-four" => four_oplus_four(),
        "chsh-bx" => chsh_bx().algebra.clone(),
        "magic-square-bx" => magic_bx().algebra.clone(),
        "magic-forced" => magic_forced().clone(),
        "cabello-18" => cabello_18().clone(),
        _ => return None,
    })
}

/// Names of the stock scenarios.
pub const SCENARIO_NAMES: [&str; 7] = [
    "single",
    "pair-compat",
    "pair-incompat",
    "path3",
    "chsh",
    "magic-square",
    "bell-422",
];

/// Looks up a stock scenario by name.
pub fn scenario_by_name(name: &str) -> Option<GraphicalScenario> {
    Some(match name {
        "single" => single_scenario(),
        "pair-compat" => pair_compat_scenario(),
        "pair-incompat" => pair_incompat_scenario(),
        "path3" => path3_scenario(),
        "chsh" => chsh_scenario(),
        "magic-square" => magic_square_scenario(),
        "bell-422" => bell_422_scenario(),
        _ => return None,
    })
}

/// Names of the stock empirical models.
pub const MODEL_NAMES: [&str; 2] = ["pr-box", "two-pr-boxes"];

/// Looks up a stock model by name.
pub fn model_by_name(name: &str) -> Option<EmpiricalModel> {
    Some(match name {
        "pr-box" => pr_box(),
        "two-pr-boxes" => two_pr_boxes(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_state;

    #[test]
    fn all_stock_algebras_validate() {
        for name in ALGEBRA_NAMES {
            let a = algebra_by_name(name).expect("stock name");
            let report = a.validate();
            assert!(report.ok, "{name}: {:?}", report.violations);
        }
        assert!(algebra_by_name("no-such").is_none());
    }

    #[test]
    fn stock_sizes_are_pinned() {
        let sizes: Vec<usize> = ALGEBRA_NAMES
            .iter()
            .map(|n| algebra_by_name(n).expect("stock name").size())
            .collect();
        assert_eq!(sizes[..6], [2, 4, 16, 6, 50, 1508]);
        assert_eq!(sizes[7], 104);
    }

    #[test]
    fn timing_probe() {
        let t = std::time::Instant::now();
        let _ = magic_bx();
        println!("magic_bx: {:?}", t.elapsed());
        let t = std::time::Instant::now();
        let _ = magic_forced();
        println!("magic_forced: {:?}", t.elapsed());
        let t = std::time::Instant::now();
        let _ = cabello_18();
        println!("cabello_18: {:?}", t.elapsed());
        let t = std::time::Instant::now();
        assert!(magic_forced().validate().ok);
        println!("validate magic_forced: {:?}", t.elapsed());
        let t = std::time::Instant::now();
        assert!(magic_bx().algebra.validate().ok);
        println!("validate magic_bx: {:?}", t.elapsed());
    }

    #[test]
    fn raw_cabello_pasting_is_not_an_algebra() {
        // Bases 1, 2 and 7 pairwise share a vertex, so the shared-context
        // commeasurability relation breaks the block-closure axiom and the
        // context pasting refuses the spec. The registry builds the
        // algebra by identification and closure instead.
        use crate::algebra::{from_glued_contexts, GluedContext, GluedContextSpec, GluedError};
        let spec = GluedContextSpec {
            contexts: cabello_18_bases()
                .iter()
                .enumerate()
                .map(|(i, basis)| GluedContext {
                    name: format!("B{}", i + 1),
                    atoms: basis.iter().map(|v| format!("v{v}")).collect(),
                })
                .collect(),
            forced_true: Vec::new(),
            forced_false: Vec::new(),
        };
        let err = from_glued_contexts(&spec).unwrap_err();
        assert!(matches!(err, GluedError::AxiomViolation { .. }), "{err:?}");
    }

    #[test]
    fn scenarios_and_models_resolve() {
        for name in SCENARIO_NAMES {
            assert!(scenario_by_name(name).is_some(), "{name}");
        }
        for name in MODEL_NAMES {
            let m = model_by_name(name).expect("stock name");
            assert!(crate::scenario::validate_model(&m).ok, "{name}");
        }
        assert!(scenario_by_name("no-such").is_none());
        assert!(model_by_name("no-such").is_none());
    }

    #[test]
    fn pr_box_state_is_a_state() {
        let st = pr_box_state();
        assert!(is_state(&chsh_bx().algebra, &st).ok);
    }
}
