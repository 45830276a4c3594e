//! phaserank: a termination analyzer for numerical transition systems and
//! single-path linear-constraint loops.
//!
//! The crate synthesizes linear and multiphase ranking functions, builds
//! per-component lexicographic proofs, extracts recurrent sets as
//! non-termination witnesses, and applies control-flow refinement via
//! partial evaluation of constrained Horn clauses. All reasoning is exact
//! rational arithmetic; every certificate returned by a synthesis routine
//! passes its own verifier, and reports can be re-checked independently via
//! [`driver::verify_certificate`].

pub mod cfr;
pub mod driver;
pub mod geometry;
pub mod model;
pub mod oracle;
pub mod ranking;

pub use geometry::{AffineFunc, Constraint, Direction, Polyhedron, Rational, Rel, Var};
pub use model::{Model, SlcLoop, TransitionSystem};
