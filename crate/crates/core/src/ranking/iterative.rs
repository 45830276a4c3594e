//! Iterative transition elimination.
//!
//! Starting from the loop's transition polyhedron, each round looks for an
//! affine function that is nonnegative on all enabled states and strictly
//! decreases on at least one remaining transition; those transitions are cut
//! off and the search repeats. Emptying the polyhedron yields a multiphase
//! certificate; stalling yields the remaining polyhedron as a recurrent set
//! witnessing non-termination.
//!
//! The "decreases somewhere" side is decided exactly: the cone of affine
//! forms that are nonpositive everywhere on the current polyhedron is
//! H-represented by eliminating the Farkas multipliers, and a candidate
//! eliminator exists iff some facet row of that cone can be violated while
//! staying nonnegative on the enabled states. Each violated row is one LP.

use super::synth::{LinExpr, TemplateLp};
use super::{find_lrf, find_mlrf_bounded, verify_recurrent};
use super::{LrfCert, MlrfCert, RankError, RecurrentSetWitness};
use crate::geometry::{
    AffineFunc, Constraint, Direction, OptOutcome, Polyhedron, Rational, Rel, Var,
};
use crate::model::{to_displacement, SlcLoop};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub enum IterativeOutcome {
    Mlrf(MlrfCert),
    Recurrent(RecurrentSetWitness),
    Unknown,
}

#[derive(Debug, Clone)]
pub enum BoundedOutcome {
    Terminating(LrfCert),
    Nonterminating { fixpoint: BTreeMap<Var, Rational> },
    NotApplicable,
}

/// Run the elimination rounds directly on the (x, x') representation.
pub fn find_mlrf_iterative(l: &SlcLoop, max_rounds: u32) -> Result<IterativeOutcome, RankError> {
    run_rounds(l, max_rounds, Space::Primed)
}

/// Same algorithm run in displacement representation (y = x' - x); the
/// recurrent set, if any, is mapped back to the (x, x') space.
pub fn find_mlrf_iterative_displaced(
    l: &SlcLoop,
    max_rounds: u32,
) -> Result<IterativeOutcome, RankError> {
    run_rounds(l, max_rounds, Space::Displacement)
}

enum Space {
    Primed,
    Displacement,
}

fn run_rounds(l: &SlcLoop, max_rounds: u32, space: Space) -> Result<IterativeOutcome, RankError> {
    // In primed space the decrease of rho = a.x + b along (x, x') is
    // a.x - a.x'; in displacement space it is -a.y.
    let (mut q, decrease_vars): (Polyhedron, Vec<(Var, Var)>) = match space {
        Space::Primed => (
            l.rel().clone(),
            l.vars().iter().map(|v| (v.clone(), v.primed())).collect(),
        ),
        Space::Displacement => {
            let d = to_displacement(l);
            let pairs = l
                .vars()
                .iter()
                .cloned()
                .zip(d.displacement_vars().iter().cloned())
                .collect();
            (d.rel().clone(), pairs)
        }
    };
    let displaced = matches!(space, Space::Displacement);
    let enabled_vars: Vec<Var> = l.vars().to_vec();
    let mut eliminated = 0u32;

    for round in 1..=max_rounds {
        if q.is_empty() {
            return Ok(assemble(l, eliminated));
        }
        let enabled = q.project(&enabled_vars)?;
        match find_eliminator(&q, &enabled, &decrease_vars, displaced)? {
            Some(rho) => {
                let cut = decrease_constraint(&rho, &decrease_vars, displaced);
                let smaller = q.and([cut])?;
                debug_assert!(
                    q.rows().iter().all(|r| smaller.entails(r)),
                    "each round must shrink the polyhedron monotonically"
                );
                q = smaller;
                eliminated += 1;
            }
            None => {
                let set = match space {
                    Space::Primed => q,
                    Space::Displacement => to_displacement(l)
                        .to_primed_space(&q)
                        .map_err(|_| RankError::InternalInconsistency)?,
                };
                let witness = RecurrentSetWitness {
                    set,
                    stalled_round: round,
                };
                assert!(
                    verify_recurrent(l, &witness),
                    "stalled polyhedron failed the recurrent-set check"
                );
                return Ok(IterativeOutcome::Recurrent(witness));
            }
        }
    }
    if q.is_empty() {
        return Ok(assemble(l, eliminated));
    }
    Ok(IterativeOutcome::Unknown)
}

/// After the rounds emptied the polyhedron with `k` eliminators, a
/// multiphase certificate of depth at most `k` exists; synthesize and verify
/// one through the nested template.
fn assemble(l: &SlcLoop, eliminators: u32) -> IterativeOutcome {
    match find_mlrf_bounded(l, eliminators.max(1)) {
        Some(cert) => IterativeOutcome::Mlrf(cert),
        None => IterativeOutcome::Unknown,
    }
}

/// `rho(x) - rho(x') <= 0` (resp. `-a.y <= 0`) as a row over q's space.
fn decrease_constraint(rho: &AffineFunc, pairs: &[(Var, Var)], displaced: bool) -> Constraint {
    let mut lhs = AffineFunc::zero();
    for (v, w) in pairs {
        let c = rho.coeff(v);
        if c.is_zero() {
            continue;
        }
        if displaced {
            lhs.add_term(w, -c);
        } else {
            lhs.add_term(v, c.clone());
            lhs.add_term(w, -c);
        }
    }
    Constraint::new(lhs, Rel::Le)
}

/// Search for rho nonnegative on the enabled states with
/// `rho(x) - rho(x') > 0` somewhere on `q`.
fn find_eliminator(
    q: &Polyhedron,
    enabled: &Polyhedron,
    pairs: &[(Var, Var)],
    displaced: bool,
) -> Result<Option<AffineFunc>, RankError> {
    let nonpositive_cone = forms_nonpositive_on(q)?;
    let program_vars: Vec<Var> = pairs.iter().map(|(v, _)| v.clone()).collect();

    // Each facet row of the cone, substituted with the decrease form of the
    // unknown template, becomes one probe LP; equality facets probe both
    // directions.
    let mut candidates: Vec<(usize, bool)> = Vec::new();
    for (i, row) in nonpositive_cone.rows().iter().enumerate() {
        match row.rel {
            Rel::Le | Rel::Lt => candidates.push((i, false)),
            Rel::Eq => {
                candidates.push((i, false));
                candidates.push((i, true));
            }
        }
    }
    for (row_idx, flipped) in candidates {
        let row = &nonpositive_cone.rows()[row_idx];
        let mut lp = TemplateLp::new();
        let rho = lp.new_func(&program_vars);
        lp.require_nonneg_on(enabled, &rho.at(|v| v.clone()));

        // Build row(g(rho)) where g maps the template to its decrease form:
        // coefficient +a_v on coordinate of v, -a_v on coordinate of the
        // partner (or just -a_v on the displacement coordinate).
        let mut expr = LinExpr::constant(row.lhs.constant_part().clone());
        for ((v, w), u) in pairs.iter().zip(program_vars.iter().map(|v| rho.coeffs[v])) {
            let mut c = Rational::zero();
            if !displaced {
                c += row.lhs.coeff(&coord_var(v));
            }
            c -= row.lhs.coeff(&coord_var(w));
            expr.add_scaled(u, c);
        }
        // Constant coordinate of the decrease form is zero, so the row's
        // coordinate for it contributes nothing beyond the row constant.
        if flipped {
            expr = expr.scale(&-Rational::one());
        }
        // Violation: row(g) >= 1, i.e. 1 - expr <= 0.
        lp.require_le_zero(LinExpr::constant(Rational::one()).minus(&expr));

        if let Some(solution) = lp.solve() {
            let f = lp.extract(&rho, &solution).clear_denominators();
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Synthetic coordinate variable for a program variable in form space.
fn coord_var(v: &Var) -> Var {
    Var::new(&format!("@c:{}", v.name()))
}

const FORM_CONST: &str = "@c:1";

/// H-representation of the cone of affine forms g with `g <= 0` everywhere
/// on `p` (taken over the closure; exact for nonempty `p`): by Farkas,
/// g = sum lambda_i row_i - c0 with lambda >= 0 on inequality rows and
/// c0 >= 0. The multipliers are eliminated by projection, leaving facet
/// constraints over the form coordinates.
fn forms_nonpositive_on(p: &Polyhedron) -> Result<Polyhedron, RankError> {
    let coord_vars: Vec<Var> = p.space().iter().map(coord_var).collect();
    let const_var = Var::new(FORM_CONST);
    let mult_vars: Vec<Var> = (0..p.rows().len())
        .map(|i| Var::new(&format!("@m:{i}")))
        .collect();
    let slack = Var::new("@m:c0");

    let mut space = coord_vars.clone();
    space.push(const_var.clone());
    space.extend(mult_vars.iter().cloned());
    space.push(slack.clone());

    let mut rows = Vec::new();
    for (v, cv) in p.space().iter().zip(&coord_vars) {
        // g_v - sum_i m_i row_i[v] = 0
        let mut lhs = AffineFunc::var(cv.clone());
        for (m, row) in mult_vars.iter().zip(p.rows()) {
            lhs.add_term(m, -row.lhs.coeff(v));
        }
        rows.push(Constraint::new(lhs, Rel::Eq));
    }
    // g_k - sum_i m_i row_i[k] + c0 = 0
    let mut lhs = AffineFunc::var(const_var.clone());
    for (m, row) in mult_vars.iter().zip(p.rows()) {
        lhs.add_term(m, -row.lhs.constant_part().clone());
    }
    lhs.add_term(&slack, Rational::one());
    rows.push(Constraint::new(lhs, Rel::Eq));
    // Multiplier signs.
    for (m, row) in mult_vars.iter().zip(p.rows()) {
        if row.rel != Rel::Eq {
            let mut neg = AffineFunc::zero();
            neg.add_term(m, -Rational::one());
            rows.push(Constraint::new(neg, Rel::Le));
        }
    }
    let mut neg = AffineFunc::zero();
    neg.add_term(&slack, -Rational::one());
    rows.push(Constraint::new(neg, Rel::Le));

    let system = Polyhedron::new(space, rows).expect("closed under construction");
    let mut keep = coord_vars;
    keep.push(const_var);
    // Redundant facet rows only add probes; the expensive per-row pruning
    // buys nothing here.
    Ok(system.project_unpruned(&keep)?)
}

/// Decision procedure for loops whose transition polyhedron is bounded:
/// such a loop is nonterminating iff it has a fixpoint transition, and
/// terminating iff it has a linear ranking function. Unbounded relations are
/// out of this procedure's scope.
pub fn decide_bounded(l: &SlcLoop) -> Result<BoundedOutcome, RankError> {
    let rel = l.rel();
    if rel.is_empty() {
        // Vacuously bounded and terminating.
        return Ok(BoundedOutcome::Terminating(LrfCert {
            rho: AffineFunc::zero(),
        }));
    }
    for v in rel.space() {
        let obj = AffineFunc::var(v.clone());
        for dir in [Direction::Maximize, Direction::Minimize] {
            match rel.optimize(&obj, dir) {
                OptOutcome::Unbounded => return Ok(BoundedOutcome::NotApplicable),
                OptOutcome::Infeasible => unreachable!("nonempty relation"),
                OptOutcome::Optimal { .. } => {}
            }
        }
    }
    let fixpoint_rows: Vec<Constraint> = l
        .vars()
        .iter()
        .map(|v| {
            let lhs = AffineFunc::var(v.primed()).sub(&AffineFunc::var(v.clone()));
            Constraint::new(lhs, Rel::Eq)
        })
        .collect();
    let fixpoints = rel.and(fixpoint_rows)?;
    if let Some(point) = fixpoints.sample_point() {
        let fixpoint: BTreeMap<Var, Rational> = l
            .vars()
            .iter()
            .map(|v| (v.clone(), point[v].clone()))
            .collect();
        return Ok(BoundedOutcome::Nonterminating { fixpoint });
    }
    match find_lrf(l) {
        Some(cert) => Ok(BoundedOutcome::Terminating(cert)),
        None => Err(RankError::InternalInconsistency),
    }
}
