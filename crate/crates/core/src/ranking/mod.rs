//! Ranking-function certificates and their verifiers.
//!
//! Synthesis lives in [`synth`] (template-based LP via Farkas' lemma) and
//! [`iterative`] (transition elimination producing multiphase certificates or
//! recurrent sets). Every synthesis routine asserts its own verifier on
//! whatever it returns.

mod iterative;
mod synth;

pub use iterative::{
    decide_bounded, find_mlrf_iterative, find_mlrf_iterative_displaced, BoundedOutcome,
    IterativeOutcome,
};
pub use synth::{find_lrf, find_mlrf_bounded, rank_scc_lex};

use crate::geometry::{AffineFunc, Constraint, GeomError, Polyhedron, Rational, Rel, Var};
use crate::model::{Scc, SlcLoop, TransitionSystem};
use num_traits::One;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(
        "bounded-loop dichotomy violated: the relation is bounded, has no fixpoint transition, \
         and no linear ranking function was found; this indicates a solver bug"
    )]
    InternalInconsistency,
}

/// A linear ranking function: nonnegative on every transition source and
/// decreasing by at least one along every transition.
#[derive(Debug, Clone, PartialEq)]
pub struct LrfCert {
    pub rho: AffineFunc,
}

/// A multiphase certificate: an ordered tuple of linear components defining
/// execution phases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlrfCert {
    pub components: Vec<AffineFunc>,
}

impl MlrfCert {
    pub fn depth(&self) -> usize {
        self.components.len()
    }
}

/// A non-termination witness: a nonempty sub-polyhedron of the transition
/// relation whose successor states are all enabled again inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentSetWitness {
    pub set: Polyhedron,
    /// Round of the elimination algorithm at which no transition could be
    /// removed.
    pub stalled_round: u32,
}

/// One stage of a lexicographic certificate: per-location functions that are
/// non-increasing on all remaining edges and strictly decreasing, bounded
/// below, on the ranked ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LexStage {
    pub ranked_edges: Vec<String>,
    pub functions: BTreeMap<String, AffineFunc>,
}

/// A per-component lexicographic certificate with its edge-removal order.
/// After all stages the remaining internal edges must form an acyclic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LexCert {
    pub stages: Vec<LexStage>,
}

/// `f(x) - f(x')` as an affine function over the loop's double space.
/// The constant term cancels.
pub(crate) fn decrease_of(f: &AffineFunc) -> AffineFunc {
    let mut out = AffineFunc::zero();
    for (v, c) in f.terms() {
        out.add_term(v, c.clone());
        out.add_term(&v.primed(), -c.clone());
    }
    out
}

/// `f` with every variable replaced by its primed companion.
pub(crate) fn at_primed(f: &AffineFunc) -> AffineFunc {
    let map: BTreeMap<Var, Var> = f.vars().map(|v| (v.clone(), v.primed())).collect();
    f.rename(&map)
}

/// `f >= bound` as a constraint (`bound - f <= 0`).
pub(crate) fn at_least(f: &AffineFunc, bound: i64) -> Constraint {
    let lhs = AffineFunc::constant(Rational::from_integer(bound.into())).sub(f);
    Constraint::new(lhs, Rel::Le)
}

/// True iff the relation entails both defining conditions of a linear
/// ranking function: `rho(x) >= 0` and `rho(x) - rho(x') >= 1`.
pub fn verify_lrf(l: &SlcLoop, rho: &AffineFunc) -> bool {
    let rel = l.rel();
    rel.entails(&at_least(rho, 0)) && rel.entails(&at_least(&decrease_of(rho), 1))
}

/// Multiphase verification. Phase `i` is active while the earlier components
/// have not yet gone negative; within it, component `i` must decrease by at
/// least one:
///
///   rel /\ f_1(x) <= -1 /\ ... /\ f_{i-1}(x) <= -1  |=  f_i(x) - f_i(x') >= 1
///
/// plus the coverage condition: `rel` with all components `<= -1` is empty,
/// so every enabled transition belongs to some phase. The phase boundary
/// `f_j <= -1` is the integer reading of "the component went negative"; with
/// the strict rational boundary the classic depth-3 certificate of the
/// textbook three-phase loop would be rejected.
pub fn verify_mlrf(l: &SlcLoop, cert: &MlrfCert) -> bool {
    if cert.components.is_empty() {
        return false;
    }
    let rel = l.rel();
    let phase_row = |f: &AffineFunc| {
        // f <= -1
        let lhs = f.add(&AffineFunc::constant(Rational::one()));
        Constraint::new(lhs, Rel::Le)
    };
    let mut context: Vec<Constraint> = Vec::new();
    for f in &cert.components {
        let Ok(ctx_poly) = rel.and(context.iter().cloned()) else {
            return false;
        };
        let dec = at_least(&decrease_of(f), 1);
        if !ctx_poly.entails(&dec) {
            return false;
        }
        context.push(phase_row(f));
    }
    match rel.and(context) {
        Ok(all_negative) => all_negative.is_empty(),
        Err(_) => false,
    }
}

/// Recurrent-set check: the witness is nonempty, lies inside the loop
/// relation, and every successor state it produces is again an enabled state
/// of the witness (`proj_{x'}(set)` is contained in `proj_x(set)`).
///
/// Resource failures during projection conservatively yield `false`.
pub fn verify_recurrent(l: &SlcLoop, w: &RecurrentSetWitness) -> bool {
    let rel = l.rel();
    if w.set.space() != rel.space() {
        return false;
    }
    if w.set.is_empty() {
        return false;
    }
    if !w.set.entails_all(rel.rows()) {
        return false;
    }
    let unprimed: Vec<Var> = l.vars().to_vec();
    let primed: Vec<Var> = l.vars().iter().map(|v| v.primed()).collect();
    let (Ok(successors), Ok(enabled)) = (w.set.project(&primed), w.set.project(&unprimed))
    else {
        return false;
    };
    // Rename successor states into unprimed coordinates for containment.
    let back: BTreeMap<Var, Var> = l.vars().iter().map(|v| (v.primed(), v.clone())).collect();
    let Ok(successors) = Polyhedron::new(
        unprimed.clone(),
        successors.rows().iter().map(|c| c.rename(&back)),
    ) else {
        return false;
    };
    enabled.rows().iter().all(|c| successors.entails(c))
}

/// Replay a lexicographic certificate against a component of a transition
/// system.
pub fn verify_lex(ts: &TransitionSystem, scc: &Scc, cert: &LexCert) -> bool {
    let mut remaining: BTreeSet<&str> = scc.edges.iter().map(|s| s.as_str()).collect();
    for stage in &cert.stages {
        for l in &scc.locations {
            if !stage.functions.contains_key(l) {
                return false;
            }
        }
        for id in &remaining {
            let Some(edge) = ts.edge(id) else {
                return false;
            };
            if edge.rel.is_empty() {
                continue;
            }
            let fs = &stage.functions[&edge.src];
            let fd = &stage.functions[&edge.dst];
            let step = fs.sub(&at_primed(fd));
            if !edge.rel.entails(&at_least(&step, 0)) {
                return false;
            }
        }
        if stage.ranked_edges.is_empty() {
            return false;
        }
        for id in &stage.ranked_edges {
            if !remaining.contains(id.as_str()) {
                return false;
            }
            let edge = ts.edge(id).expect("checked above");
            if edge.rel.is_empty() {
                continue;
            }
            let fs = &stage.functions[&edge.src];
            let fd = &stage.functions[&edge.dst];
            let step = fs.sub(&at_primed(fd));
            if !edge.rel.entails(&at_least(&step, 1)) {
                return false;
            }
            if !edge.rel.entails(&at_least(fs, 0)) {
                return false;
            }
        }
        for id in &stage.ranked_edges {
            remaining.remove(id.as_str());
        }
    }
    let survivors: Vec<&str> = remaining
        .iter()
        .filter(|id| ts.edge(id).map(|e| !e.rel.is_empty()).unwrap_or(false))
        .copied()
        .collect();
    edges_acyclic(ts, &survivors)
}

/// No cycle among the given edges (self-loops included).
pub(crate) fn edges_acyclic(ts: &TransitionSystem, edge_ids: &[&str]) -> bool {
    let edges: Vec<(&str, &str)> = edge_ids
        .iter()
        .filter_map(|id| ts.edge(id).map(|e| (e.src.as_str(), e.dst.as_str())))
        .collect();
    if edges.iter().any(|(s, d)| s == d) {
        return false;
    }
    // Kahn peeling: cycles survive.
    let mut nodes: BTreeSet<&str> = edges.iter().flat_map(|(s, d)| [*s, *d]).collect();
    let mut live: Vec<(&str, &str)> = edges;
    while let Some(&leaf) = nodes
        .iter()
        .find(|n| !live.iter().any(|(_, d)| *d == **n))
    {
        nodes.remove(leaf);
        live.retain(|(s, _)| *s != leaf);
    }
    nodes.is_empty()
}
