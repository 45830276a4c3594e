//! Template-based synthesis via Farkas' lemma.
//!
//! A template is an affine function whose coefficients are LP unknowns.
//! "t >= 0 everywhere on P" is turned into linear constraints over the
//! unknowns plus fresh nonnegative multipliers (one per row of P), and the
//! whole system is solved by the exact simplex. Complete over the rationals
//! for nonempty carriers; empty carriers are handled up front.

use super::{
    at_least, at_primed, edges_acyclic, verify_lex, verify_lrf, verify_mlrf,
    LexCert, LexStage, LrfCert, MlrfCert,
};
use crate::geometry::{AffineFunc, Polyhedron, Rational, Rel, Var};
use crate::geometry::{LpProblem, RowRel};
use crate::model::{Scc, SlcLoop, TransitionSystem};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Affine expression over LP unknowns.
#[derive(Debug, Clone, Default)]
pub(crate) struct LinExpr {
    terms: BTreeMap<usize, Rational>,
    constant: Rational,
}

impl LinExpr {
    pub fn constant(k: Rational) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn unknown(u: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(u, Rational::one());
        LinExpr {
            terms,
            constant: Rational::zero(),
        }
    }

    pub fn add_scaled(&mut self, u: usize, by: Rational) {
        if by.is_zero() {
            return;
        }
        let entry = self.terms.entry(u).or_insert_with(Rational::zero);
        *entry += by;
        if entry.is_zero() {
            self.terms.remove(&u);
        }
    }

    pub fn plus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (u, c) in &other.terms {
            out.add_scaled(*u, c.clone());
        }
        out.constant += other.constant.clone();
        out
    }

    pub fn minus(&self, other: &LinExpr) -> LinExpr {
        self.plus(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, by: &Rational) -> LinExpr {
        if by.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            terms: self
                .terms
                .iter()
                .map(|(u, c)| (*u, c.clone() * by.clone()))
                .collect(),
            constant: self.constant.clone() * by.clone(),
        }
    }

    pub fn plus_const(&self, k: Rational) -> LinExpr {
        let mut out = self.clone();
        out.constant += k;
        out
    }
}

/// An affine function over program variables whose coefficients are
/// [`LinExpr`]s over the LP unknowns.
#[derive(Debug, Clone, Default)]
pub(crate) struct TemplateAffine {
    coeffs: BTreeMap<Var, LinExpr>,
    constant: LinExpr,
}

impl TemplateAffine {
    pub fn coeff(&self, v: &Var) -> LinExpr {
        self.coeffs.get(v).cloned().unwrap_or_default()
    }

    pub fn plus(&self, other: &TemplateAffine) -> TemplateAffine {
        let mut out = self.clone();
        for (v, e) in &other.coeffs {
            let entry = out.coeffs.entry(v.clone()).or_default();
            *entry = entry.plus(e);
        }
        out.constant = out.constant.plus(&other.constant);
        out
    }

    pub fn minus(&self, other: &TemplateAffine) -> TemplateAffine {
        self.plus(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, by: &Rational) -> TemplateAffine {
        TemplateAffine {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, e)| (v.clone(), e.scale(by)))
                .collect(),
            constant: self.constant.scale(by),
        }
    }

    pub fn plus_const(&self, k: Rational) -> TemplateAffine {
        let mut out = self.clone();
        out.constant = out.constant.plus_const(k);
        out
    }
}

/// A template function: one fresh unknown per program variable plus one for
/// the constant.
#[derive(Debug, Clone)]
pub(crate) struct TemplateFunc {
    pub coeffs: BTreeMap<Var, usize>,
    pub constant: usize,
}

impl TemplateFunc {
    /// The template read at the given variables (identity for `f(x)`).
    pub fn at(&self, rename: impl Fn(&Var) -> Var) -> TemplateAffine {
        TemplateAffine {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, u)| (rename(v), LinExpr::unknown(*u)))
                .collect(),
            constant: LinExpr::unknown(self.constant),
        }
    }

    /// `f(x) - f(x')`: coefficients appear positively on unprimed and
    /// negatively on primed variables; the constant cancels.
    pub fn decrease(&self) -> TemplateAffine {
        let mut coeffs = BTreeMap::new();
        for (v, u) in &self.coeffs {
            coeffs.insert(v.clone(), LinExpr::unknown(*u));
            coeffs.insert(v.primed(), LinExpr::unknown(*u).scale(&-Rational::one()));
        }
        TemplateAffine {
            coeffs,
            constant: LinExpr::default(),
        }
    }
}

/// Accumulates the synthesis LP.
#[derive(Debug, Default)]
pub(crate) struct TemplateLp {
    next: usize,
    rows: Vec<(LinExpr, RowRel)>, // expr <= 0 or expr = 0
}

impl TemplateLp {
    pub fn new() -> Self {
        TemplateLp::default()
    }

    pub fn fresh_free(&mut self) -> usize {
        let u = self.next;
        self.next += 1;
        u
    }

    pub fn fresh_nonneg(&mut self) -> usize {
        let u = self.fresh_free();
        // -u <= 0
        self.rows.push((
            LinExpr::unknown(u).scale(&-Rational::one()),
            RowRel::Le,
        ));
        u
    }

    pub fn new_func(&mut self, vars: &[Var]) -> TemplateFunc {
        let coeffs = vars
            .iter()
            .map(|v| (v.clone(), self.fresh_free()))
            .collect();
        TemplateFunc {
            coeffs,
            constant: self.fresh_free(),
        }
    }

    pub fn require_le_zero(&mut self, e: LinExpr) {
        self.rows.push((e, RowRel::Le));
    }

    pub fn require_eq_zero(&mut self, e: LinExpr) {
        self.rows.push((e, RowRel::Eq));
    }

    /// Farkas encoding of "t(x) >= 0 for all x in carrier". The carrier must
    /// be nonempty for completeness; strict rows are treated by closure,
    /// which is exact for entailment of non-strict consequences on nonempty
    /// sets.
    pub fn require_nonneg_on(&mut self, carrier: &Polyhedron, t: &TemplateAffine) {
        let mut mults = Vec::with_capacity(carrier.rows().len());
        for row in carrier.rows() {
            let u = match row.rel {
                Rel::Eq => self.fresh_free(),
                Rel::Le | Rel::Lt => self.fresh_nonneg(),
            };
            mults.push(u);
        }
        // Per variable: t[v] + sum_i mult_i * row_i[v] = 0.
        for v in carrier.space() {
            let mut e = t.coeff(v);
            for (u, row) in mults.iter().zip(carrier.rows()) {
                e.add_scaled(*u, row.lhs.coeff(v));
            }
            self.require_eq_zero(e);
        }
        // Constant: t[k] + sum_i mult_i * row_i[k] >= 0.
        let mut e = t.constant.clone();
        for (u, row) in mults.iter().zip(carrier.rows()) {
            e.add_scaled(*u, row.lhs.constant_part().clone());
        }
        self.require_le_zero(e.scale(&-Rational::one()));
    }

    /// Solve for feasibility; the returned assignment is deterministic
    /// (Bland's rule with a fixed unknown order).
    pub fn solve(&self) -> Option<Vec<Rational>> {
        let mut lp = LpProblem::new(self.next);
        for (e, rel) in &self.rows {
            let mut coeffs = vec![Rational::zero(); self.next];
            for (u, c) in &e.terms {
                coeffs[*u] = c.clone();
            }
            lp.push(coeffs, *rel, -e.constant.clone());
        }
        lp.feasible_point()
    }

    pub fn extract(&self, f: &TemplateFunc, solution: &[Rational]) -> AffineFunc {
        AffineFunc::from_terms(
            f.coeffs
                .iter()
                .map(|(v, u)| (v.clone(), solution[*u].clone())),
            solution[f.constant].clone(),
        )
    }
}

/// Multiply by the least common multiple of all denominators: an integer
/// scaling >= 1, which preserves every template condition used here.
fn clear_denominators(funcs: &mut [AffineFunc]) {
    let mut lcm = BigInt::one();
    for f in funcs.iter() {
        for (_, c) in f.terms() {
            lcm = lcm.lcm(c.denom());
        }
        lcm = lcm.lcm(f.constant_part().denom());
    }
    if lcm.is_one() {
        return;
    }
    let by = Rational::from_integer(lcm);
    for f in funcs.iter_mut() {
        *f = f.scale(&by);
    }
}

/// LP-based linear-ranking-function synthesis. Complete for rational-valued
/// loops: returns None only when no rational LRF exists. A loop with an
/// empty relation is vacuously ranked by the zero function.
pub fn find_lrf(l: &SlcLoop) -> Option<LrfCert> {
    if l.rel().is_empty() {
        return Some(LrfCert {
            rho: AffineFunc::zero(),
        });
    }
    let mut lp = TemplateLp::new();
    let rho = lp.new_func(l.vars());
    lp.require_nonneg_on(l.rel(), &rho.at(|v| v.clone()));
    lp.require_nonneg_on(l.rel(), &rho.decrease().plus_const(-Rational::one()));
    let solution = lp.solve()?;
    let mut funcs = [lp.extract(&rho, &solution)];
    clear_denominators(&mut funcs);
    let [rho] = funcs;
    assert!(verify_lrf(l, &rho), "synthesized LRF failed verification");
    Some(LrfCert { rho })
}

/// Bounded multiphase synthesis through the nested template:
///
///   f_1(x) - f_1(x') >= 1                              on rel
///   f_{i-1}(x) + f_i(x) - f_i(x') >= 1    (2 <= i)     on rel
///   f_d(x) >= 0                                        on rel
///
/// Depths 1..=d are swept in order, so the certificate has minimal nested
/// depth. Absence at depth d means no multiphase certificate of depth <= d
/// exists for rational-valued loops.
pub fn find_mlrf_bounded(l: &SlcLoop, d: u32) -> Option<MlrfCert> {
    if l.rel().is_empty() {
        return Some(MlrfCert {
            components: vec![AffineFunc::zero()],
        });
    }
    for depth in 1..=d.max(1) {
        if let Some(cert) = nested_at_depth(l, depth as usize) {
            return Some(cert);
        }
    }
    None
}

fn nested_at_depth(l: &SlcLoop, depth: usize) -> Option<MlrfCert> {
    let rel = l.rel();
    let mut lp = TemplateLp::new();
    let funcs: Vec<TemplateFunc> = (0..depth).map(|_| lp.new_func(l.vars())).collect();
    lp.require_nonneg_on(rel, &funcs[0].decrease().plus_const(-Rational::one()));
    for i in 1..depth {
        let cond = funcs[i - 1]
            .at(|v| v.clone())
            .plus(&funcs[i].decrease())
            .plus_const(-Rational::one());
        lp.require_nonneg_on(rel, &cond);
    }
    lp.require_nonneg_on(rel, &funcs[depth - 1].at(|v| v.clone()));
    let solution = lp.solve()?;
    let mut components: Vec<AffineFunc> =
        funcs.iter().map(|f| lp.extract(f, &solution)).collect();
    clear_denominators(&mut components);
    let cert = MlrfCert { components };
    assert!(
        verify_mlrf(l, &cert),
        "nested certificate failed multiphase verification"
    );
    Some(cert)
}

/// Incremental lexicographic synthesis for a strongly connected component.
///
/// Each stage synthesizes one affine function per location, non-increasing
/// across every remaining internal edge, strictly decreasing and nonnegative
/// at the source on at least one edge; all edges whose strict decrease and
/// boundedness the found functions entail are removed. Success once the
/// remaining internal edges are acyclic.
pub fn rank_scc_lex(ts: &TransitionSystem, scc: &Scc, max_stages: u32) -> Option<LexCert> {
    // Untakeable edges can never contribute a cycle and have no nonempty
    // carrier for the Farkas encoding.
    let mut remaining: Vec<String> = scc
        .edges
        .iter()
        .filter(|id| ts.edge(id).map(|e| !e.rel.is_empty()).unwrap_or(false))
        .cloned()
        .collect();
    let locations: Vec<String> = scc.locations.iter().cloned().collect();
    let mut stages = Vec::new();

    for _ in 0..max_stages {
        let ids: Vec<&str> = remaining.iter().map(|s| s.as_str()).collect();
        if edges_acyclic(ts, &ids) {
            break;
        }
        let stage = lex_stage(ts, &locations, &remaining)?;
        remaining.retain(|id| !stage.ranked_edges.contains(id));
        stages.push(stage);
    }

    let ids: Vec<&str> = remaining.iter().map(|s| s.as_str()).collect();
    if !edges_acyclic(ts, &ids) {
        return None;
    }
    let cert = LexCert { stages };
    debug_assert!(verify_lex(ts, scc, &cert));
    Some(cert)
}

fn lex_stage(ts: &TransitionSystem, locations: &[String], remaining: &[String]) -> Option<LexStage> {
    for candidate in remaining {
        let mut lp = TemplateLp::new();
        let mut funcs: BTreeMap<String, TemplateFunc> = BTreeMap::new();
        for l in locations {
            let f = lp.new_func(ts.vars());
            funcs.insert(l.clone(), f);
        }
        for id in remaining {
            let edge = ts.edge(id).expect("validated");
            let step = funcs[&edge.src]
                .at(|v| v.clone())
                .minus(&funcs[&edge.dst].at(|v| v.primed()));
            lp.require_nonneg_on(&edge.rel, &step);
        }
        let edge = ts.edge(candidate).expect("validated");
        let step = funcs[&edge.src]
            .at(|v| v.clone())
            .minus(&funcs[&edge.dst].at(|v| v.primed()));
        lp.require_nonneg_on(&edge.rel, &step.plus_const(-Rational::one()));
        lp.require_nonneg_on(&edge.rel, &funcs[&edge.src].at(|v| v.clone()));

        let Some(solution) = lp.solve() else {
            continue;
        };
        let mut extracted: Vec<AffineFunc> = locations
            .iter()
            .map(|l| lp.extract(&funcs[l], &solution))
            .collect();
        clear_denominators(&mut extracted);
        let functions: BTreeMap<String, AffineFunc> = locations
            .iter()
            .cloned()
            .zip(extracted)
            .collect();

        // Remove every edge on which strict decrease plus boundedness is
        // entailed by the functions just found, not only the candidate.
        let mut ranked = Vec::new();
        for id in remaining {
            let edge = ts.edge(id).expect("validated");
            let fs = &functions[&edge.src];
            let fd = &functions[&edge.dst];
            let step = fs.sub(&at_primed(fd));
            if edge.rel.entails(&at_least(&step, 1)) && edge.rel.entails(&at_least(fs, 0)) {
                ranked.push(id.clone());
            }
        }
        debug_assert!(ranked.contains(candidate));
        return Some(LexStage {
            ranked_edges: ranked,
            functions,
        });
    }
    None
}
