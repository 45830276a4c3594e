//! Fourier-Motzkin variable elimination.
//!
//! Equality rows are eliminated by substitution, inequality rows by pairwise
//! combination; strictness propagates through combinations. Redundant rows
//! are pruned with per-row entailment checks.

use super::{AffineFunc, Constraint, GeomError, Polyhedron, Rational, Rel, Var};
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

pub(super) fn project(
    poly: &Polyhedron,
    keep: &[Var],
    cap: usize,
) -> Result<Polyhedron, GeomError> {
    project_impl(poly, keep, cap, true)
}

/// Projection without the final per-row pruning; the result may carry
/// redundant rows. Blowup control mid-elimination still applies.
pub(super) fn project_unpruned(
    poly: &Polyhedron,
    keep: &[Var],
    cap: usize,
) -> Result<Polyhedron, GeomError> {
    project_impl(poly, keep, cap, false)
}

fn project_impl(
    poly: &Polyhedron,
    keep: &[Var],
    cap: usize,
    prune_final: bool,
) -> Result<Polyhedron, GeomError> {
    let space: BTreeSet<&Var> = poly.space().iter().collect();
    for v in keep {
        if !space.contains(v) {
            return Err(GeomError::UnknownVariable(v.clone()));
        }
    }
    let keep_set: BTreeSet<&Var> = keep.iter().collect();
    let mut eliminate: Vec<Var> = poly
        .space()
        .iter()
        .filter(|v| !keep_set.contains(v))
        .cloned()
        .collect();
    let mut rows: Vec<Constraint> = poly.rows().to_vec();

    while !eliminate.is_empty() {
        // Cheapest variable first: fewest pairwise combinations.
        let next = eliminate
            .iter()
            .enumerate()
            .min_by_key(|(_, v)| {
                let pos = rows
                    .iter()
                    .filter(|r| r.rel != Rel::Eq && r.lhs.coeff(v).is_positive())
                    .count();
                let neg = rows
                    .iter()
                    .filter(|r| r.rel != Rel::Eq && r.lhs.coeff(v).is_negative())
                    .count();
                (pos * neg, (*v).clone())
            })
            .map(|(i, _)| i)
            .expect("nonempty");
        let var = eliminate.remove(next);
        rows = eliminate_var(rows, &var);
        if let Some(false) = constant_contradiction(&rows) {
            let lhs = AffineFunc::constant(Rational::from_integer(1.into()));
            return Polyhedron::new(keep.to_vec(), [Constraint::new(lhs, Rel::Le)]);
        }
        rows = dedupe(rows);
        if rows.len() > cap {
            return Err(GeomError::RowCap {
                rows: rows.len(),
                cap,
            });
        }
        if rows.len() > 32 {
            rows = prune_redundant(keep_or_current_space(poly, keep, &eliminate), rows);
        }
    }

    if prune_final {
        rows = prune_redundant(keep.to_vec(), rows);
    }
    Polyhedron::new(keep.to_vec(), rows)
}

/// Space still in play mid-elimination: keep plus not-yet-eliminated vars.
fn keep_or_current_space(poly: &Polyhedron, keep: &[Var], pending: &[Var]) -> Vec<Var> {
    let pending_set: BTreeSet<&Var> = pending.iter().collect();
    let keep_set: BTreeSet<&Var> = keep.iter().collect();
    poly.space()
        .iter()
        .filter(|v| keep_set.contains(v) || pending_set.contains(v))
        .cloned()
        .collect()
}

fn eliminate_var(rows: Vec<Constraint>, var: &Var) -> Vec<Constraint> {
    // Prefer substitution through an equality row mentioning the variable.
    let pivot = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rel == Rel::Eq && !r.lhs.coeff(var).is_zero())
        .min_by_key(|(_, r)| r.canonical_key())
        .map(|(i, _)| i);
    if let Some(pi) = pivot {
        let pivot_row = rows[pi].clone();
        let c = pivot_row.lhs.coeff(var);
        // lhs = 0 with coefficient c on var: var = -(lhs - c*var)/c
        let mut rest = pivot_row.lhs.clone();
        rest.add_term(var, -c.clone());
        let solved = rest.scale(&(-Rational::from_integer(1.into()) / c));
        return rows
            .into_iter()
            .enumerate()
            .filter(|(i, _)| *i != pi)
            .map(|(_, r)| r.substitute(var, &solved))
            .collect();
    }

    let mut lower = Vec::new(); // coefficient < 0
    let mut upper = Vec::new(); // coefficient > 0
    let mut out = Vec::new();
    for r in rows {
        let c = r.lhs.coeff(var);
        if c.is_zero() {
            out.push(r);
        } else if c.is_positive() {
            upper.push((r, c));
        } else {
            lower.push((r, c));
        }
    }
    for (u, cu) in &upper {
        for (l, cl) in &lower {
            // cu > 0, cl < 0: cancel var with |cl| * u + cu * l.
            let combined = u.lhs.scale(&cl.abs()).add(&l.lhs.scale(cu));
            debug_assert!(combined.coeff(var).is_zero());
            let rel = if u.rel == Rel::Lt || l.rel == Rel::Lt {
                Rel::Lt
            } else {
                Rel::Le
            };
            out.push(Constraint::new(combined, rel));
        }
    }
    out
}

/// Some(false) when a constant row is violated.
fn constant_contradiction(rows: &[Constraint]) -> Option<bool> {
    for r in rows {
        if let Some(false) = r.constant_truth() {
            return Some(false);
        }
    }
    None
}

fn dedupe(rows: Vec<Constraint>) -> Vec<Constraint> {
    let mut seen = BTreeSet::new();
    rows.into_iter()
        .filter(|r| r.constant_truth() != Some(true))
        .filter(|r| seen.insert(r.canonical_key()))
        .collect()
}

fn prune_redundant(space: Vec<Var>, rows: Vec<Constraint>) -> Vec<Constraint> {
    let mut kept = rows;
    let mut i = 0;
    while i < kept.len() {
        let candidate = kept[i].clone();
        let rest: Vec<Constraint> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| r.clone())
            .collect();
        let Ok(rest_poly) = Polyhedron::new(space.clone(), rest) else {
            i += 1;
            continue;
        };
        if rest_poly.entails(&candidate) {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}
