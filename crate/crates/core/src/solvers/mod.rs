//! Built-in exact decision procedures.
//!
//! Everything downstream reduces its questions to one of two problems:
//!
//! * propositional satisfiability, solved by a plain DPLL procedure
//!   ([`sat`]), and
//! * feasibility of a linear system over nonnegative rationals, solved by a
//!   phase-one simplex in exact arithmetic ([`lp`]).
//!
//! Both return certificates that are re-verified by substitution before they
//! leave the solver, so a `Some` answer is always a checked witness. The
//! [`fm`] module holds an independent Fourier–Motzkin feasibility procedure
//! used to cross-check the simplex; it shares no code with it.

pub mod fm;
pub mod lp;
pub mod sat;

pub use lp::{lp_feasible, LpProblem};
pub use sat::{dpll, CnfProblem};
