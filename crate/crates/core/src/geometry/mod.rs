//! Exact rational linear geometry.
//!
//! Affine functions, linear constraints (strict and non-strict), and
//! polyhedra over a named variable space, with LP-backed emptiness,
//! entailment and optimization plus Fourier-Motzkin projection. All
//! arithmetic is arbitrary-precision rational; results do not depend on
//! constraint order.

mod fm;
mod lp;
mod parse;

pub use parse::{parse_affine, parse_constraint, parse_constraints, ParseError};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type Rational = BigRational;

pub(crate) use lp::{LpProblem, LpResult, RowRel};

/// Hard ceiling on intermediate row counts during projection.
pub const DEFAULT_ROW_CAP: usize = 2000;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("projection exceeded the row cap ({rows} rows, cap {cap})")]
    RowCap { rows: usize, cap: usize },
    #[error("variable `{0}` is not in the polyhedron's space")]
    UnknownVariable(Var),
    #[error("spaces differ: expected {expected:?}, got {got:?}")]
    SpaceMismatch { expected: Vec<Var>, got: Vec<Var> },
}

/// A named variable. Primed variables carry a trailing apostrophe.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// The primed companion of this variable (`x` -> `x'`).
    pub fn primed(&self) -> Var {
        Var(Arc::from(format!("{}'", self.0)))
    }

    pub fn is_primed(&self) -> bool {
        self.0.ends_with('\'')
    }

    pub fn unprimed(&self) -> Var {
        Var(Arc::from(self.0.trim_end_matches('\'')))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({})", self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// An affine function `sum(coeff * var) + constant` with exact rational
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct AffineFunc {
    terms: BTreeMap<Var, Rational>,
    constant: Rational,
}

impl AffineFunc {
    pub fn zero() -> Self {
        AffineFunc::default()
    }

    pub fn constant(c: Rational) -> Self {
        AffineFunc {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(v, Rational::one());
        AffineFunc {
            terms,
            constant: Rational::zero(),
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Var, Rational)>, constant: Rational) -> Self {
        let mut f = AffineFunc {
            terms: BTreeMap::new(),
            constant,
        };
        for (v, c) in terms {
            f.add_term(&v, c);
        }
        f
    }

    pub fn coeff(&self, v: &Var) -> Rational {
        self.terms.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Var, &Rational)> {
        self.terms.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms.keys()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, v: &Var, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(v) {
            Some(cur) => {
                *cur += c;
                if cur.is_zero() {
                    self.terms.remove(v);
                }
            }
            None => {
                self.terms.insert(v.clone(), c);
            }
        }
    }

    pub fn add_constant(&mut self, c: Rational) {
        self.constant += c;
    }

    pub fn add(&self, other: &AffineFunc) -> AffineFunc {
        let mut out = self.clone();
        for (v, c) in other.terms.iter() {
            out.add_term(v, c.clone());
        }
        out.constant += other.constant.clone();
        out
    }

    pub fn sub(&self, other: &AffineFunc) -> AffineFunc {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, by: &Rational) -> AffineFunc {
        if by.is_zero() {
            return AffineFunc::zero();
        }
        AffineFunc {
            terms: self
                .terms
                .iter()
                .map(|(v, c)| (v.clone(), c.clone() * by.clone()))
                .collect(),
            constant: self.constant.clone() * by.clone(),
        }
    }

    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in self.terms.iter() {
            let val = point.get(v).cloned().unwrap_or_else(Rational::zero);
            acc += c.clone() * val;
        }
        acc
    }

    /// Replace every occurrence of `v` by the affine function `by`.
    pub fn substitute(&self, v: &Var, by: &AffineFunc) -> AffineFunc {
        let Some(c) = self.terms.get(v) else {
            return self.clone();
        };
        let c = c.clone();
        let mut out = self.clone();
        out.terms.remove(v);
        out = out.add(&by.scale(&c));
        out
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> AffineFunc {
        let mut out = AffineFunc::constant(self.constant.clone());
        for (v, c) in self.terms.iter() {
            let nv = map.get(v).cloned().unwrap_or_else(|| v.clone());
            out.add_term(&nv, c.clone());
        }
        out
    }

    /// Smallest positive rational `m` such that `m * self` has integer
    /// coefficients with gcd 1.
    fn primitive_multiplier(&self) -> Rational {
        let mut lcm_den = BigInt::one();
        let mut gcd_num = BigInt::zero();
        let mut visit = |q: &Rational| {
            lcm_den = num_integer::lcm(lcm_den.clone(), q.denom().clone());
            gcd_num = num_integer::gcd(gcd_num.clone(), q.numer().clone());
        };
        for c in self.terms.values() {
            visit(c);
        }
        visit(&self.constant);
        if gcd_num.is_zero() {
            return Rational::one();
        }
        Rational::new(lcm_den, gcd_num.abs())
    }

    /// Scale to primitive integer coefficients (positive scaling only).
    pub fn to_primitive(&self) -> AffineFunc {
        self.scale(&self.primitive_multiplier())
    }

    /// Multiply by the least common multiple of the denominators: an integer
    /// scaling factor >= 1, never a shrink.
    pub fn clear_denominators(&self) -> AffineFunc {
        let mut lcm = BigInt::one();
        for c in self.terms.values() {
            lcm = num_integer::lcm(lcm, c.denom().clone());
        }
        lcm = num_integer::lcm(lcm, self.constant.denom().clone());
        self.scale(&Rational::from_integer(lcm))
    }
}

impl fmt::Debug for AffineFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_affine(self))
    }
}

impl fmt::Display for AffineFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_affine(self))
    }
}

fn render_coeff_term(c: &Rational, v: &Var, first: bool, out: &mut String) {
    let mag = c.abs();
    if first {
        if c.is_negative() {
            out.push('-');
        }
    } else if c.is_negative() {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    if !mag.is_one() {
        out.push_str(&format!("{mag}*"));
    }
    out.push_str(v.name());
}

fn render_affine(f: &AffineFunc) -> String {
    let mut out = String::new();
    let mut first = true;
    for (v, c) in f.terms.iter() {
        render_coeff_term(c, v, first, &mut out);
        first = false;
    }
    if first {
        return f.constant.to_string();
    }
    if !f.constant.is_zero() {
        if f.constant.is_negative() {
            out.push_str(&format!(" - {}", f.constant.abs()));
        } else {
            out.push_str(&format!(" + {}", f.constant));
        }
    }
    out
}

/// Relation of a constraint's left-hand side to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    /// lhs <= 0
    Le,
    /// lhs = 0
    Eq,
    /// lhs < 0
    Lt,
}

/// A linear constraint `lhs rel 0`. `>=`/`>` inputs are normalized to
/// `<=`/`<` by negation at construction time.
#[derive(Clone, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: AffineFunc,
    pub rel: Rel,
}

impl Constraint {
    pub fn new(lhs: AffineFunc, rel: Rel) -> Self {
        Constraint { lhs, rel }
    }

    /// `a <= b`
    pub fn le(a: AffineFunc, b: AffineFunc) -> Self {
        Constraint::new(a.sub(&b), Rel::Le)
    }

    /// `a >= b`
    pub fn ge(a: AffineFunc, b: AffineFunc) -> Self {
        Constraint::new(b.sub(&a), Rel::Le)
    }

    /// `a < b`
    pub fn lt(a: AffineFunc, b: AffineFunc) -> Self {
        Constraint::new(a.sub(&b), Rel::Lt)
    }

    /// `a > b`
    pub fn gt(a: AffineFunc, b: AffineFunc) -> Self {
        Constraint::new(b.sub(&a), Rel::Lt)
    }

    /// `a = b`
    pub fn eq(a: AffineFunc, b: AffineFunc) -> Self {
        Constraint::new(a.sub(&b), Rel::Eq)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.lhs.vars()
    }

    /// Primitive-integer canonical key: (sorted integer coefficients,
    /// integer constant, relation). Two constraints with equal keys describe
    /// the same half-space / hyperplane.
    pub fn canonical_key(&self) -> (Vec<(Var, BigInt)>, BigInt, u8) {
        let prim = self.lhs.to_primitive();
        let mut prim = prim;
        // Equalities are sign-symmetric; fix the sign of the leading term.
        if self.rel == Rel::Eq {
            if let Some((_, c)) = prim.terms.iter().next() {
                if c.is_negative() {
                    prim = prim.scale(&-Rational::one());
                }
            }
        }
        let coeffs = prim
            .terms
            .iter()
            .map(|(v, c)| (v.clone(), c.numer().clone()))
            .collect();
        let k = prim.constant.numer().clone();
        let tag = match self.rel {
            Rel::Le => 0,
            Rel::Eq => 1,
            Rel::Lt => 2,
        };
        (coeffs, k, tag)
    }

    /// True when the constraint has no variables and is satisfied.
    pub(crate) fn constant_truth(&self) -> Option<bool> {
        if !self.lhs.is_constant() {
            return None;
        }
        let k = &self.lhs.constant;
        Some(match self.rel {
            Rel::Le => !k.is_positive(),
            Rel::Lt => k.is_negative(),
            Rel::Eq => k.is_zero(),
        })
    }

    pub fn satisfied_by(&self, point: &BTreeMap<Var, Rational>) -> bool {
        let v = self.lhs.eval(point);
        match self.rel {
            Rel::Le => !v.is_positive(),
            Rel::Lt => v.is_negative(),
            Rel::Eq => v.is_zero(),
        }
    }

    pub fn substitute(&self, v: &Var, by: &AffineFunc) -> Constraint {
        Constraint::new(self.lhs.substitute(v, by), self.rel)
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Constraint {
        Constraint::new(self.lhs.rename(map), self.rel)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Positive variable terms on the left; negated negative terms and
        // the constant on the right: `x' = x + 1`, `y <= z - 1`, `x >= 0`.
        let prim = self.lhs.to_primitive();
        if prim.is_constant() {
            let op = match self.rel {
                Rel::Le => "<=",
                Rel::Lt => "<",
                Rel::Eq => "=",
            };
            return write!(f, "{} {op} 0", prim.constant);
        }
        let flip = match self.rel {
            // Keep the defined (positive) side of an equation on the left.
            Rel::Eq => !prim.terms.values().any(|c| c.is_positive()),
            // Flip inequalities whose leading variable is negative.
            Rel::Le | Rel::Lt => prim
                .terms
                .iter()
                .next()
                .map(|(_, c)| c.is_negative())
                .unwrap_or(false),
        };
        let (lhs, op) = if flip {
            let op = match self.rel {
                Rel::Le => ">=",
                Rel::Lt => ">",
                Rel::Eq => "=",
            };
            (prim.scale(&-Rational::one()), op)
        } else {
            let op = match self.rel {
                Rel::Le => "<=",
                Rel::Lt => "<",
                Rel::Eq => "=",
            };
            (prim, op)
        };
        let mut left = String::new();
        let mut right = String::new();
        let mut lfirst = true;
        let mut rfirst = true;
        for (v, c) in lhs.terms.iter() {
            if c.is_positive() {
                render_coeff_term(c, v, lfirst, &mut left);
                lfirst = false;
            } else {
                render_coeff_term(&c.abs(), v, rfirst, &mut right);
                rfirst = false;
            }
        }
        let k = &lhs.constant;
        if !k.is_zero() {
            // The constant always moves to the right, negated.
            let moved = -k.clone();
            if rfirst {
                right.push_str(&moved.to_string());
                rfirst = false;
            } else if moved.is_negative() {
                right.push_str(&format!(" - {}", moved.abs()));
            } else {
                right.push_str(&format!(" + {moved}"));
            }
        }
        if rfirst {
            right.push('0');
        }
        if lfirst {
            left.push('0');
        }
        write!(f, "{left} {op} {right}")
    }
}

/// Direction for [`Polyhedron::optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Outcome of optimizing an affine objective over a polyhedron.
#[derive(Debug, Clone)]
pub enum OptOutcome {
    Infeasible,
    Unbounded,
    Optimal {
        value: Rational,
        witness: BTreeMap<Var, Rational>,
    },
}

/// Farkas-style certificate for a bound proved by [`Polyhedron::optimize_certified`]:
/// one multiplier per constraint row, nonnegative on inequality rows, such
/// that the multiplier combination of the rows yields `objective <= value`
/// (resp. `>=` when minimizing).
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub multipliers: Vec<Rational>,
}

/// A conjunction of linear constraints over an ordered variable space.
#[derive(Clone)]
pub struct Polyhedron {
    space: Vec<Var>,
    rows: Vec<Constraint>,
}

impl Polyhedron {
    /// Build a polyhedron, validating that every constraint only mentions
    /// variables of `space`. Rows are deduplicated by canonical form and
    /// trivially-true rows are dropped.
    pub fn new(
        space: Vec<Var>,
        rows: impl IntoIterator<Item = Constraint>,
    ) -> Result<Self, GeomError> {
        let index: BTreeSet<&Var> = space.iter().collect();
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for c in rows {
            for v in c.vars() {
                if !index.contains(v) {
                    return Err(GeomError::UnknownVariable(v.clone()));
                }
            }
            if c.constant_truth() == Some(true) {
                continue;
            }
            if seen.insert(c.canonical_key()) {
                kept.push(c);
            }
        }
        Ok(Polyhedron { space, rows: kept })
    }

    /// The full space `Q^n` over the given variables.
    pub fn universe(space: Vec<Var>) -> Self {
        Polyhedron {
            space,
            rows: Vec::new(),
        }
    }

    pub fn space(&self) -> &[Var] {
        &self.space
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    /// Conjoin additional constraints over the same space.
    pub fn and(&self, more: impl IntoIterator<Item = Constraint>) -> Result<Self, GeomError> {
        Polyhedron::new(
            self.space.clone(),
            self.rows.iter().cloned().chain(more),
        )
    }

    /// True when no rational point satisfies all constraints. Strict rows are
    /// decided exactly via a slack maximization, not by closure.
    pub fn is_empty(&self) -> bool {
        self.sample_point().is_none()
    }

    /// A rational point satisfying all constraints (strict ones strictly),
    /// or None when the polyhedron is empty.
    pub fn sample_point(&self) -> Option<BTreeMap<Var, Rational>> {
        for r in &self.rows {
            if r.constant_truth() == Some(false) {
                return None;
            }
        }
        let has_strict = self.rows.iter().any(|r| r.rel == Rel::Lt);
        let n = self.space.len();
        let cols = n + if has_strict { 1 } else { 0 };
        let mut lp = LpProblem::new(cols);
        for r in &self.rows {
            let mut coeffs = vec![Rational::zero(); cols];
            for (v, c) in r.lhs.terms() {
                let j = self.space.iter().position(|s| s == v).expect("validated");
                coeffs[j] = c.clone();
            }
            let rel = match r.rel {
                Rel::Le => RowRel::Le,
                Rel::Eq => RowRel::Eq,
                Rel::Lt => {
                    coeffs[n] = Rational::one();
                    RowRel::Le
                }
            };
            lp.push(coeffs, rel, -r.lhs.constant_part().clone());
        }
        if !has_strict {
            let point = lp.feasible_point()?;
            return Some(self.point_map(&point));
        }
        // Maximize the shared strict slack, capped at 1; feasible iff > 0.
        let mut eps_low = vec![Rational::zero(); cols];
        eps_low[n] = -Rational::one();
        lp.push(eps_low, RowRel::Le, Rational::zero());
        let mut eps_high = vec![Rational::zero(); cols];
        eps_high[n] = Rational::one();
        lp.push(eps_high, RowRel::Le, Rational::one());
        let mut obj = vec![Rational::zero(); cols];
        obj[n] = Rational::one();
        match lp.maximize(&obj) {
            LpResult::Optimal { value, point } if value.is_positive() => {
                Some(self.point_map(&point))
            }
            _ => None,
        }
    }

    fn point_map(&self, raw: &[Rational]) -> BTreeMap<Var, Rational> {
        self.space
            .iter()
            .cloned()
            .zip(raw.iter().cloned())
            .collect()
    }

    /// True when every point of the polyhedron satisfies `c`, decided by
    /// emptiness of `self /\ not c`.
    pub fn entails(&self, c: &Constraint) -> bool {
        let neg_le = |lhs: &AffineFunc| Constraint::new(lhs.scale(&-Rational::one()), Rel::Lt);
        let neg_lt = |lhs: &AffineFunc| Constraint::new(lhs.scale(&-Rational::one()), Rel::Le);
        let with = |extra: Constraint| {
            self.and([extra])
                .map(|p| p.is_empty())
                .unwrap_or(false)
        };
        match c.rel {
            Rel::Le => with(neg_le(&c.lhs)),
            Rel::Lt => with(neg_lt(&c.lhs)),
            Rel::Eq => {
                with(Constraint::new(c.lhs.clone(), Rel::Lt))
                    && with(neg_le(&c.lhs))
            }
        }
    }

    pub fn entails_all(&self, cs: &[Constraint]) -> bool {
        cs.iter().all(|c| self.entails(c))
    }

    /// Mutual entailment over a shared space.
    pub fn equivalent(&self, other: &Polyhedron) -> bool {
        self.space == other.space
            && self.entails_all(other.rows())
            && other.entails_all(self.rows())
    }

    /// Project onto `keep` by Fourier-Motzkin elimination with redundancy
    /// pruning. Exact for strict and non-strict rows.
    pub fn project(&self, keep: &[Var]) -> Result<Polyhedron, GeomError> {
        self.project_capped(keep, DEFAULT_ROW_CAP)
    }

    pub fn project_capped(&self, keep: &[Var], cap: usize) -> Result<Polyhedron, GeomError> {
        fm::project(self, keep, cap)
    }

    /// Projection that skips the final redundancy pruning; the rows may be
    /// redundant but the denoted set is the same. Used where the consumer
    /// only needs a sound H-representation.
    pub(crate) fn project_unpruned(&self, keep: &[Var]) -> Result<Polyhedron, GeomError> {
        fm::project_unpruned(self, keep, DEFAULT_ROW_CAP)
    }

    /// Exact optimum of `obj` over the polyhedron. With strict rows present
    /// the returned value is the supremum/infimum over the closure (emptiness
    /// is still decided exactly first), and the witness attains it in the
    /// closure.
    pub fn optimize(&self, obj: &AffineFunc, dir: Direction) -> OptOutcome {
        if self.is_empty() {
            return OptOutcome::Infeasible;
        }
        let n = self.space.len();
        let mut lp = LpProblem::new(n);
        for r in &self.rows {
            let mut coeffs = vec![Rational::zero(); n];
            for (v, c) in r.lhs.terms() {
                let j = self.space.iter().position(|s| s == v).expect("validated");
                coeffs[j] = c.clone();
            }
            let rel = match r.rel {
                Rel::Eq => RowRel::Eq,
                Rel::Le | Rel::Lt => RowRel::Le,
            };
            lp.push(coeffs, rel, -r.lhs.constant_part().clone());
        }
        let sign = match dir {
            Direction::Maximize => Rational::one(),
            Direction::Minimize => -Rational::one(),
        };
        let mut objective = vec![Rational::zero(); n];
        for (v, c) in obj.terms() {
            let Some(j) = self.space.iter().position(|s| s == v) else {
                return OptOutcome::Infeasible;
            };
            objective[j] = c.clone() * sign.clone();
        }
        match lp.maximize(&objective) {
            LpResult::Infeasible => OptOutcome::Infeasible,
            LpResult::Unbounded => OptOutcome::Unbounded,
            LpResult::Optimal { value, point } => OptOutcome::Optimal {
                value: value * sign + obj.constant_part().clone(),
                witness: self.point_map(&point),
            },
        }
    }

    /// Like [`optimize`](Self::optimize) but additionally produces the Farkas
    /// multiplier vector certifying the bound, found by solving the dual
    /// system exactly.
    pub fn optimize_certified(
        &self,
        obj: &AffineFunc,
        dir: Direction,
    ) -> (OptOutcome, Option<BoundCertificate>) {
        let outcome = self.optimize(obj, dir);
        let OptOutcome::Optimal { value, .. } = &outcome else {
            return (outcome, None);
        };
        // Find lambda >= 0 on inequality rows (free on equalities) with
        //   sum_i lambda_i * lhs_i[v] = sign * obj[v]        for every var,
        //   sum_i lambda_i * lhs_i[k] >= sign * (obj[k] - value),
        // which certifies obj <= value (max) resp. obj >= value (min):
        // on the polyhedron every lhs_i(x) <= 0, so
        // sign*obj(x) <= sign*obj[k] - sum lambda_i lhs_i[k] <= sign*value.
        let sign = match dir {
            Direction::Maximize => Rational::one(),
            Direction::Minimize => -Rational::one(),
        };
        let m = self.rows.len();
        let mut lp = LpProblem::new(m);
        for v in &self.space {
            let coeffs: Vec<Rational> = self.rows.iter().map(|r| r.lhs.coeff(v)).collect();
            lp.push(coeffs, RowRel::Eq, obj.coeff(v) * sign.clone());
        }
        let consts: Vec<Rational> = self
            .rows
            .iter()
            .map(|r| -r.lhs.constant_part().clone())
            .collect();
        let bound = (obj.constant_part().clone() - value.clone()) * sign.clone();
        lp.push(consts, RowRel::Le, -bound);
        for (i, r) in self.rows.iter().enumerate() {
            if r.rel != Rel::Eq {
                let mut coeffs = vec![Rational::zero(); m];
                coeffs[i] = -Rational::one();
                lp.push(coeffs, RowRel::Le, Rational::zero());
            }
        }
        let cert = lp
            .feasible_point()
            .map(|multipliers| BoundCertificate { multipliers });
        (outcome, cert)
    }
}

impl fmt::Debug for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

impl PartialEq for Polyhedron {
    /// Structural equality: same space, same rows up to order and canonical
    /// scaling. Use [`equivalent`](Self::equivalent) for semantic equality.
    fn eq(&self, other: &Self) -> bool {
        if self.space != other.space {
            return false;
        }
        let a: BTreeSet<_> = self.rows.iter().map(|r| r.canonical_key()).collect();
        let b: BTreeSet<_> = other.rows.iter().map(|r| r.canonical_key()).collect();
        a == b
    }
}

impl Eq for Polyhedron {}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Var {
        Var::new(name)
    }

    fn rat(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn poly(space: &[&str], texts: &[&str]) -> Polyhedron {
        let space: Vec<Var> = space.iter().map(|s| v(s)).collect();
        let rows: Vec<Constraint> = texts
            .iter()
            .map(|t| parse_constraint(t).expect("parse"))
            .collect();
        Polyhedron::new(space, rows).expect("build")
    }

    #[test]
    fn emptiness_contradictory_bounds() {
        assert!(poly(&["x"], &["x >= 1", "x <= 0"]).is_empty());
    }

    #[test]
    fn emptiness_strict_contradiction() {
        assert!(poly(&["x"], &["x < 0", "x > 0"]).is_empty());
        assert!(!poly(&["x"], &["x < 0"]).is_empty());
        assert!(!poly(&["x"], &["x < 1", "x > 0"]).is_empty());
    }

    #[test]
    fn q5_is_satisfiable() {
        let p = poly(
            &["x", "y", "z", "x'", "y'", "z'"],
            &["x >= 1", "y <= z - 1", "x' = x", "y' = y + 1", "z' = z"],
        );
        assert!(!p.is_empty());
        let pt = p.sample_point().unwrap();
        for r in p.rows() {
            assert!(r.satisfied_by(&pt), "row {r} violated by witness");
        }
    }

    #[test]
    fn entailment_basics() {
        assert!(poly(&["x"], &["x >= 2"]).entails(&parse_constraint("x >= 1").unwrap()));
        assert!(!poly(&["x"], &["x >= 0"]).entails(&parse_constraint("x >= 1").unwrap()));
        // y >= z is a stated conjunct of Q_7.
        let q7 = poly(
            &["x", "y", "z", "x'", "y'", "z'"],
            &["x >= 1", "y >= z", "x' = x", "y' = y", "z' = z"],
        );
        assert!(q7.entails(&parse_constraint("y >= z").unwrap()));
    }

    #[test]
    fn entailment_of_equalities() {
        let p = poly(&["x", "y"], &["x <= y", "y <= x"]);
        assert!(p.entails(&parse_constraint("x = y").unwrap()));
        assert!(!p.entails(&parse_constraint("x = 0").unwrap()));
    }

    #[test]
    fn projection_simple() {
        let p = poly(&["x", "y"], &["x <= y", "y <= 5"]);
        let q = p.project(&[v("x")]).unwrap();
        assert_eq!(q, poly(&["x"], &["x <= 5"]));
    }

    #[test]
    fn projection_combines_rows() {
        let p = poly(&["x", "y"], &["x + y >= 0", "x - y >= 0"]);
        let q = p.project(&[v("x")]).unwrap();
        assert_eq!(q, poly(&["x"], &["x >= 0"]));
    }

    #[test]
    fn projection_of_empty_is_empty() {
        let p = poly(&["x", "y"], &["x >= 1", "x <= 0"]);
        let q = p.project(&[v("y")]).unwrap();
        assert!(q.is_empty());
    }

    #[test]
    fn projection_keeps_strictness() {
        let p = poly(&["x", "y"], &["x < y", "y <= 3"]);
        let q = p.project(&[v("x")]).unwrap();
        assert!(q.entails(&parse_constraint("x < 3").unwrap()));
        assert!(!q.is_empty());
    }

    #[test]
    fn optimize_bounded_and_unbounded() {
        let p = poly(&["x"], &["x <= 3"]);
        match p.optimize(&AffineFunc::var(v("x")), Direction::Maximize) {
            OptOutcome::Optimal { value, witness } => {
                assert_eq!(value, rat(3));
                assert_eq!(witness[&v("x")], rat(3));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
        let p = poly(&["x"], &["x >= 0"]);
        assert!(matches!(
            p.optimize(&AffineFunc::var(v("x")), Direction::Maximize),
            OptOutcome::Unbounded
        ));
    }

    #[test]
    fn optimize_loop1_guard() {
        // min y - x over {x <= y} is 0.
        let p = poly(&["x", "y"], &["x <= y"]);
        let obj = AffineFunc::var(v("y")).sub(&AffineFunc::var(v("x")));
        match p.optimize(&obj, Direction::Minimize) {
            OptOutcome::Optimal { value, .. } => assert_eq!(value, rat(0)),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn certified_optimum_rechecks() {
        let p = poly(&["x", "y"], &["x + y <= 4", "x - y <= 2"]);
        let obj = AffineFunc::var(v("x"));
        let (outcome, cert) = p.optimize_certified(&obj, Direction::Maximize);
        let OptOutcome::Optimal { value, .. } = outcome else {
            panic!("expected optimum");
        };
        assert_eq!(value, rat(3));
        let cert = cert.expect("certificate");
        // Direct substitution: the multiplier combination of the rows must
        // reproduce the objective's coefficients and bound its constant.
        let mut combo = AffineFunc::zero();
        for (l, r) in cert.multipliers.iter().zip(p.rows()) {
            if r.rel != Rel::Eq {
                assert!(!l.is_negative(), "inequality multiplier must be >= 0");
            }
            combo = combo.add(&r.lhs.scale(l));
        }
        for (v, c) in obj.terms() {
            assert_eq!(combo.coeff(v), c.clone(), "coefficients must match");
        }
        assert!(combo.vars().all(|v| !obj.coeff(v).is_zero() || combo.coeff(v).is_zero()));
        assert!(
            *combo.constant_part() >= obj.constant_part().clone() - value,
            "constant part must certify the bound"
        );
    }

    #[test]
    fn constraint_display_round_trips() {
        for text in [
            "x' = x + 1",
            "x - y <= 5",
            "x >= 0",
            "2*x + 3*y < 7",
            "x = 1/2",
        ] {
            let c = parse_constraint(text).unwrap();
            let again = parse_constraint(&c.to_string()).unwrap();
            assert_eq!(c.canonical_key(), again.canonical_key(), "{text}");
        }
    }

    #[test]
    fn row_cap_is_a_hard_error() {
        let p = poly(
            &["x", "y", "z"],
            &["x <= y + z", "x >= y - z", "x <= 2*y", "x >= 0 - 2*y", "z <= 5"],
        );
        match p.project_capped(&[v("z")], 1) {
            Err(GeomError::RowCap { cap: 1, .. }) => {}
            other => panic!("expected a row-cap error, got {other:?}"),
        }
    }

    #[test]
    fn order_independence() {
        let a = poly(&["x", "y"], &["x <= y", "y <= 5", "x >= 0"]);
        let b = poly(&["x", "y"], &["y <= 5", "x >= 0", "x <= y"]);
        assert_eq!(a, b);
        assert_eq!(a.is_empty(), b.is_empty());
        let pa = a.project(&[v("x")]).unwrap();
        let pb = b.project(&[v("x")]).unwrap();
        assert_eq!(pa, pb);
    }
}
