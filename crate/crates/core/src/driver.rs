//! Per-component termination analysis with configurable strategies and
//! control-flow-refinement schemes, plus an independent certificate checker.
//!
//! The analyzer never reports `terminating` without a certificate that its
//! own verifiers accept, and never `nonterminating` without a verified
//! recurrent set. Reports serialize to JSON deterministically (the timing
//! field aside).

use crate::cfr::{chc_to_ts, infer_properties, partial_evaluate, ts_to_chc, CfrError, PropertyMap};
use crate::geometry::{AffineFunc, Polyhedron, Rational};
use crate::model::{Edge, Model, ModelError, Scc, SlcLoop, TransitionSystem};
use crate::ranking::{
    find_lrf, find_mlrf_bounded, find_mlrf_iterative, rank_scc_lex, verify_lex, verify_lrf,
    verify_mlrf, verify_recurrent, IterativeOutcome, LexCert, LrfCert, MlrfCert, RankError,
    RecurrentSetWitness,
};
use num_traits::{One, ToPrimitive};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use std::time::Instant;
use thiserror::Error;

pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("component {{{scc}}}: {err}")]
    Rank { scc: String, err: RankError },
    #[error("refinement of {{{scc}}}: {err}")]
    Cfr { scc: String, err: CfrError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("certificate for {{{scc}}} failed: {what}")]
    Mismatch { scc: String, what: String },
    #[error("report does not fit the model: {0}")]
    Shape(String),
}

/// Ranking techniques, tried in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankClass {
    /// Single-stage linear ranking (per-location templates).
    Lrf,
    /// Incremental lexicographic ranking.
    Lex,
    /// Bounded-depth multiphase synthesis (self-loop components only).
    MlrfBounded,
    /// Iterative transition elimination; may produce a recurrent set.
    MlrfIterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CfrScheme {
    #[default]
    None,
    /// Refine the whole system before any ranking.
    Pre,
    /// Refine a failing component's subsystem and retry once.
    OnFailureScc,
}

#[derive(Debug, Clone)]
pub struct StrategyConfig {
    pub rank_classes: Vec<RankClass>,
    pub cfr_scheme: CfrScheme,
    pub max_mlrf_depth: u32,
    pub max_lex_stages: u32,
    pub max_iterative_rounds: u32,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            rank_classes: vec![
                RankClass::Lrf,
                RankClass::Lex,
                RankClass::MlrfBounded,
                RankClass::MlrfIterative,
            ],
            cfr_scheme: CfrScheme::None,
            max_mlrf_depth: 5,
            max_lex_stages: 5,
            max_iterative_rounds: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Terminating,
    Nonterminating,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Terminating => "terminating",
            Verdict::Nonterminating => "nonterminating",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Certificate {
    Lrf(LrfCert),
    Mlrf(MlrfCert),
    Lex(LexCert),
}

#[derive(Debug, Clone)]
pub struct SccReport {
    pub locations: Vec<String>,
    pub trivial: bool,
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
    pub recurrent: Option<RecurrentSetWitness>,
    /// Filled when the on-failure scheme refined this component.
    pub refinement: Option<Box<SccRefinement>>,
}

#[derive(Debug, Clone)]
pub struct SccRefinement {
    pub system: TransitionSystem,
    pub sccs: Vec<SccReport>,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub overall: Verdict,
    /// The refined system when the pre scheme ran.
    pub refined_system: Option<TransitionSystem>,
    pub sccs: Vec<SccReport>,
    pub timing_ms: u128,
}

/// Analyze a model. Loops go directly to the ranking operations in
/// `rank_classes` order; transition systems are decomposed into strongly
/// connected components first. The `pre` scheme refines the whole system up
/// front; `on-failure` refines only components that resisted every ranking
/// class, recursing exactly once.
pub fn analyze(model: &Model, cfg: &StrategyConfig) -> Result<AnalysisReport, DriverError> {
    let start = Instant::now();
    let mut report = match (model, cfg.cfr_scheme) {
        (Model::Loop(l), CfrScheme::Pre) => {
            let ts = l.as_transition_system();
            let refined = refine_whole(&ts)?;
            let mut r = analyze_ts(&refined, cfg, false)?;
            r.refined_system = Some(refined);
            r
        }
        (Model::Loop(l), _) => {
            let scc_report = analyze_loop(l, cfg)?;
            let overall = overall_of(std::slice::from_ref(&scc_report), true);
            AnalysisReport {
                overall,
                refined_system: None,
                sccs: vec![scc_report],
                timing_ms: 0,
            }
        }
        (Model::Ts(ts), CfrScheme::Pre) => {
            let refined = refine_whole(ts)?;
            let mut r = analyze_ts(&refined, cfg, false)?;
            r.refined_system = Some(refined);
            r
        }
        (Model::Ts(ts), _) => analyze_ts(ts, cfg, cfg.cfr_scheme == CfrScheme::OnFailureScc)?,
    };
    report.timing_ms = start.elapsed().as_millis();
    Ok(report)
}

fn scc_name(scc: &Scc) -> String {
    scc.locations
        .iter()
        .cloned()
        .collect::<Vec<_>>()
        .join(", ")
}

fn analyze_ts(
    ts: &TransitionSystem,
    cfg: &StrategyConfig,
    cfr_on_failure: bool,
) -> Result<AnalysisReport, DriverError> {
    let mut reports = Vec::new();
    for scc in ts.sccs() {
        let mut r = if scc.trivial {
            SccReport {
                locations: scc.locations.iter().cloned().collect(),
                trivial: true,
                verdict: Verdict::Terminating,
                certificate: None,
                recurrent: None,
                refinement: None,
            }
        } else {
            analyze_scc(ts, &scc, cfg)?
        };
        if r.verdict == Verdict::Unknown && cfr_on_failure && !scc.trivial {
            r.refinement = Some(Box::new(refine_and_retry(ts, &scc, cfg)?));
            let refinement = r.refinement.as_ref().expect("just set");
            r.verdict = overall_of(&refinement.sccs, false);
        }
        reports.push(r);
    }
    let init_nonterm = reports.iter().any(|r| {
        r.verdict == Verdict::Nonterminating && r.locations.iter().any(|l| l == ts.init())
    });
    let overall = overall_of(&reports, init_nonterm);
    Ok(AnalysisReport {
        overall,
        refined_system: None,
        sccs: reports,
        timing_ms: 0,
    })
}

/// Terminating iff all components are; nonterminating only when a verified
/// recurrent set is reachable under the arbitrary-initial-state semantics
/// (always for loops, init-containing components for systems).
fn overall_of(reports: &[SccReport], nonterm_reachable: bool) -> Verdict {
    if reports
        .iter()
        .any(|r| r.verdict == Verdict::Nonterminating)
        && nonterm_reachable
    {
        return Verdict::Nonterminating;
    }
    if reports.iter().all(|r| r.verdict == Verdict::Terminating) {
        Verdict::Terminating
    } else {
        Verdict::Unknown
    }
}

fn analyze_loop(l: &SlcLoop, cfg: &StrategyConfig) -> Result<SccReport, DriverError> {
    let mut report = SccReport {
        locations: vec!["loop".to_string()],
        trivial: false,
        verdict: Verdict::Unknown,
        certificate: None,
        recurrent: None,
        refinement: None,
    };
    for class in &cfg.rank_classes {
        match class {
            RankClass::Lrf => {
                if let Some(cert) = find_lrf(l) {
                    debug_assert!(verify_lrf(l, &cert.rho));
                    report.verdict = Verdict::Terminating;
                    report.certificate = Some(Certificate::Lrf(cert));
                    return Ok(report);
                }
            }
            RankClass::Lex => {
                let ts = l.as_transition_system();
                let scc = ts.sccs().into_iter().find(|s| !s.trivial);
                if let Some(scc) = scc {
                    if let Some(cert) = rank_scc_lex(&ts, &scc, cfg.max_lex_stages) {
                        debug_assert!(verify_lex(&ts, &scc, &cert));
                        report.verdict = Verdict::Terminating;
                        report.certificate = Some(Certificate::Lex(cert));
                        return Ok(report);
                    }
                } else {
                    // No cycle at all: empty relation.
                    report.verdict = Verdict::Terminating;
                    report.certificate = Some(Certificate::Lex(LexCert { stages: vec![] }));
                    return Ok(report);
                }
            }
            RankClass::MlrfBounded => {
                if let Some(cert) = find_mlrf_bounded(l, cfg.max_mlrf_depth) {
                    debug_assert!(verify_mlrf(l, &cert));
                    report.verdict = Verdict::Terminating;
                    report.certificate = Some(Certificate::Mlrf(cert));
                    return Ok(report);
                }
            }
            RankClass::MlrfIterative => {
                let outcome = find_mlrf_iterative(l, cfg.max_iterative_rounds)
                    .map_err(|err| DriverError::Rank {
                        scc: "loop".to_string(),
                        err,
                    })?;
                match outcome {
                    IterativeOutcome::Mlrf(cert) => {
                        debug_assert!(verify_mlrf(l, &cert));
                        report.verdict = Verdict::Terminating;
                        report.certificate = Some(Certificate::Mlrf(cert));
                        return Ok(report);
                    }
                    IterativeOutcome::Recurrent(w) => {
                        debug_assert!(verify_recurrent(l, &w));
                        report.verdict = Verdict::Nonterminating;
                        report.recurrent = Some(w);
                        return Ok(report);
                    }
                    IterativeOutcome::Unknown => {}
                }
            }
        }
    }
    Ok(report)
}

fn analyze_scc(
    ts: &TransitionSystem,
    scc: &Scc,
    cfg: &StrategyConfig,
) -> Result<SccReport, DriverError> {
    let mut report = SccReport {
        locations: scc.locations.iter().cloned().collect(),
        trivial: false,
        verdict: Verdict::Unknown,
        certificate: None,
        recurrent: None,
        refinement: None,
    };
    for class in &cfg.rank_classes {
        match class {
            RankClass::Lrf => {
                if let Some(cert) = rank_scc_lex(ts, scc, 1) {
                    debug_assert!(verify_lex(ts, scc, &cert));
                    report.verdict = Verdict::Terminating;
                    report.certificate = Some(Certificate::Lex(cert));
                    return Ok(report);
                }
            }
            RankClass::Lex => {
                if let Some(cert) = rank_scc_lex(ts, scc, cfg.max_lex_stages) {
                    debug_assert!(verify_lex(ts, scc, &cert));
                    report.verdict = Verdict::Terminating;
                    report.certificate = Some(Certificate::Lex(cert));
                    return Ok(report);
                }
            }
            // Multiphase synthesis applies to single self-loop components;
            // others are skipped rather than approximated.
            RankClass::MlrfBounded => {
                if let Some(l) = ts.scc_as_loop(scc) {
                    if let Some(cert) = find_mlrf_bounded(&l, cfg.max_mlrf_depth) {
                        debug_assert!(verify_mlrf(&l, &cert));
                        report.verdict = Verdict::Terminating;
                        report.certificate = Some(Certificate::Mlrf(cert));
                        return Ok(report);
                    }
                }
            }
            RankClass::MlrfIterative => {
                if let Some(l) = ts.scc_as_loop(scc) {
                    let outcome = find_mlrf_iterative(&l, cfg.max_iterative_rounds).map_err(
                        |err| DriverError::Rank {
                            scc: scc_name(scc),
                            err,
                        },
                    )?;
                    match outcome {
                        IterativeOutcome::Mlrf(cert) => {
                            debug_assert!(verify_mlrf(&l, &cert));
                            report.verdict = Verdict::Terminating;
                            report.certificate = Some(Certificate::Mlrf(cert));
                            return Ok(report);
                        }
                        IterativeOutcome::Recurrent(w) => {
                            debug_assert!(verify_recurrent(&l, &w));
                            report.verdict = Verdict::Nonterminating;
                            report.recurrent = Some(w);
                            return Ok(report);
                        }
                        IterativeOutcome::Unknown => {}
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Refine a whole system: properties are inferred per nontrivial component
/// and merged, the system round-trips through clauses and the partial
/// evaluator.
pub fn refine_whole(ts: &TransitionSystem) -> Result<TransitionSystem, DriverError> {
    let mut props = PropertyMap::new();
    for scc in ts.sccs().iter().filter(|s| !s.trivial) {
        for (pred, list) in infer_properties(ts, scc) {
            let entry = props.entry(pred).or_default();
            for c in list {
                if !entry.iter().any(|e| e.canonical_key() == c.canonical_key()) {
                    entry.push(c);
                }
            }
        }
    }
    let program = ts_to_chc(ts);
    let refined = partial_evaluate(&program, &props).map_err(|err| DriverError::Cfr {
        scc: ts.init().to_string(),
        err,
    })?;
    chc_to_ts(&refined).map_err(|err| DriverError::Cfr {
        scc: ts.init().to_string(),
        err,
    })
}

/// The failing component as a standalone system: a fresh entry location
/// with unconstrained edges into the component's entry locations.
fn scc_subsystem(ts: &TransitionSystem, scc: &Scc) -> Result<TransitionSystem, ModelError> {
    let mut init = "cfr_entry".to_string();
    while scc.locations.contains(&init) {
        init.push('_');
    }
    let mut entries: BTreeSet<String> = ts
        .edges()
        .iter()
        .filter(|e| scc.locations.contains(&e.dst) && !scc.locations.contains(&e.src))
        .map(|e| e.dst.clone())
        .collect();
    if scc.locations.contains(ts.init()) {
        entries.insert(ts.init().to_string());
    }
    if entries.is_empty() {
        entries.insert(scc.locations.iter().next().expect("nonempty").clone());
    }
    let space = crate::model::loop_space(ts.vars());
    let mut edges: Vec<Edge> = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        edges.push(Edge {
            id: format!("enter{i}"),
            src: init.clone(),
            dst: entry.clone(),
            rel: Polyhedron::universe(space.clone()),
        });
    }
    for id in &scc.edges {
        let e = ts.edge(id).expect("internal edge");
        edges.push(e.clone());
    }
    TransitionSystem::new(ts.vars().to_vec(), init, edges, vec![])
}

fn refine_and_retry(
    ts: &TransitionSystem,
    scc: &Scc,
    cfg: &StrategyConfig,
) -> Result<SccRefinement, DriverError> {
    let sub = scc_subsystem(ts, scc)?;
    let refined = refine_whole(&sub)?;
    // One refinement round per component: no further CFR below.
    let inner = analyze_ts(&refined, cfg, false)?;
    Ok(SccRefinement {
        system: refined,
        sccs: inner.sccs,
    })
}

/// Re-check every certificate and witness in a report from scratch against
/// the model, trusting only the exact-geometry entailment.
pub fn verify_report(model: &Model, report: &AnalysisReport) -> Result<(), VerifyError> {
    let system = match (model, &report.refined_system) {
        (_, Some(refined)) => refined.clone(),
        (Model::Ts(ts), None) => ts.clone(),
        (Model::Loop(l), None) => l.as_transition_system(),
    };
    if let Some(refined) = &report.refined_system {
        let original = match model {
            Model::Ts(ts) => ts.clone(),
            Model::Loop(l) => l.as_transition_system(),
        };
        check_refinement_strengthens(&original, refined)?;
    }
    verify_scc_reports(&system, &report.sccs)?;
    // A recurrent set upgrades the overall verdict only when its component
    // is entered directly with arbitrary initial values: a loop analyzed in
    // place, or a component containing the analyzed system's init.
    let plain_loop = matches!(model, Model::Loop(_)) && report.refined_system.is_none();
    let init_nonterm = report.sccs.iter().any(|r| {
        r.verdict == Verdict::Nonterminating
            && (plain_loop || r.locations.iter().any(|l| l == system.init()))
    });
    let expected = overall_of(&report.sccs, init_nonterm);
    if expected != report.overall {
        return Err(VerifyError::Shape(format!(
            "overall verdict {} does not follow from the component verdicts ({} expected)",
            report.overall.as_str(),
            expected.as_str()
        )));
    }
    Ok(())
}

/// Boolean face of [`verify_report`].
pub fn verify_certificate(model: &Model, report: &AnalysisReport) -> bool {
    verify_report(model, report).is_ok()
}

/// Every refined edge must strengthen the original edge it descends from
/// (specialization never widens behavior).
fn check_refinement_strengthens(
    original: &TransitionSystem,
    refined: &TransitionSystem,
) -> Result<(), VerifyError> {
    for e in refined.edges() {
        let base = origin_id(&e.id);
        if base.starts_with("enter") {
            continue;
        }
        let Some(src) = original.edge(&e.id).or_else(|| original.edge(base)) else {
            return Err(VerifyError::Shape(format!(
                "refined edge `{}` has no origin in the model",
                e.id
            )));
        };
        if !e.rel.entails_all(src.rel.rows()) {
            return Err(VerifyError::Mismatch {
                scc: e.id.clone(),
                what: "refined edge does not strengthen its origin".to_string(),
            });
        }
    }
    Ok(())
}

fn origin_id(id: &str) -> &str {
    id.split('#').next().unwrap_or(id)
}

fn verify_scc_reports(ts: &TransitionSystem, reports: &[SccReport]) -> Result<(), VerifyError> {
    let sccs = ts.sccs();
    if sccs.len() != reports.len() {
        return Err(VerifyError::Shape(format!(
            "{} components in the system, {} in the report",
            sccs.len(),
            reports.len()
        )));
    }
    for r in reports {
        let locs: BTreeSet<String> = r.locations.iter().cloned().collect();
        let Some(scc) = sccs.iter().find(|s| s.locations == locs) else {
            return Err(VerifyError::Shape(format!(
                "no component with locations {{{}}}",
                r.locations.join(", ")
            )));
        };
        verify_one(ts, scc, r)?;
    }
    Ok(())
}

fn verify_one(ts: &TransitionSystem, scc: &Scc, r: &SccReport) -> Result<(), VerifyError> {
    let name = scc_name(scc);
    let fail = |what: &str| VerifyError::Mismatch {
        scc: name.clone(),
        what: what.to_string(),
    };
    match r.verdict {
        Verdict::Terminating => {
            if scc.trivial {
                return Ok(());
            }
            if let Some(refinement) = &r.refinement {
                verify_scc_reports(&refinement.system, &refinement.sccs)?;
                check_refinement_strengthens_sub(ts, scc, &refinement.system)?;
                if overall_of(&refinement.sccs, false) != Verdict::Terminating {
                    return Err(fail("refined components do not all terminate"));
                }
                return Ok(());
            }
            match &r.certificate {
                Some(Certificate::Lex(cert)) => {
                    if !verify_lex(ts, scc, cert) {
                        return Err(fail("lexicographic certificate rejected"));
                    }
                }
                Some(Certificate::Lrf(cert)) => {
                    let Some(l) = ts.scc_as_loop(scc) else {
                        return Err(fail("linear certificate on a non-loop component"));
                    };
                    if !verify_lrf(&l, &cert.rho) {
                        return Err(fail("linear ranking function rejected"));
                    }
                }
                Some(Certificate::Mlrf(cert)) => {
                    let Some(l) = ts.scc_as_loop(scc) else {
                        return Err(fail("multiphase certificate on a non-loop component"));
                    };
                    if !verify_mlrf(&l, cert) {
                        return Err(fail("multiphase certificate rejected"));
                    }
                }
                None => return Err(fail("terminating verdict without a certificate")),
            }
        }
        Verdict::Nonterminating => {
            let Some(w) = &r.recurrent else {
                return Err(fail("nonterminating verdict without a recurrent set"));
            };
            let Some(l) = ts.scc_as_loop(scc) else {
                return Err(fail("recurrent set on a non-loop component"));
            };
            if !verify_recurrent(&l, w) {
                return Err(fail("recurrent set rejected"));
            }
        }
        Verdict::Unknown => {
            if let Some(refinement) = &r.refinement {
                verify_scc_reports(&refinement.system, &refinement.sccs)?;
            }
        }
    }
    Ok(())
}

fn check_refinement_strengthens_sub(
    ts: &TransitionSystem,
    scc: &Scc,
    refined: &TransitionSystem,
) -> Result<(), VerifyError> {
    for e in refined.edges() {
        let full = &e.id;
        let base = if scc.edges.iter().any(|id| id == full) {
            full.as_str()
        } else {
            origin_id(full)
        };
        if base.starts_with("enter") {
            continue;
        }
        if !scc.edges.iter().any(|id| id == base) {
            return Err(VerifyError::Shape(format!(
                "refined edge `{}` does not descend from the component",
                e.id
            )));
        }
        let src = ts.edge(base).expect("component edge");
        if !e.rel.entails_all(src.rel.rows()) {
            return Err(VerifyError::Mismatch {
                scc: e.id.clone(),
                what: "refined edge does not strengthen its origin".to_string(),
            });
        }
    }
    Ok(())
}

// --- JSON rendering -------------------------------------------------------

fn rational_value(q: &Rational) -> Value {
    if q.denom().is_one() {
        if let Some(n) = q.numer().to_i64() {
            return json!(n);
        }
    }
    json!(q.to_string())
}

pub fn affine_value(f: &AffineFunc) -> Value {
    let mut coeffs = Map::new();
    for (v, c) in f.terms() {
        coeffs.insert(v.name().to_string(), rational_value(c));
    }
    json!({
        "coeffs": Value::Object(coeffs),
        "constant": rational_value(f.constant_part()),
    })
}

fn polyhedron_value(p: &Polyhedron) -> Value {
    json!({
        "space": p.space().iter().map(|v| v.name().to_string()).collect::<Vec<_>>(),
        "constraints": p.rows().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

fn certificate_value(c: &Certificate) -> Value {
    match c {
        Certificate::Lrf(cert) => json!({
            "kind": "lrf",
            "rho": affine_value(&cert.rho),
        }),
        Certificate::Mlrf(cert) => json!({
            "kind": "mlrf",
            "components": cert.components.iter().map(affine_value).collect::<Vec<_>>(),
        }),
        Certificate::Lex(cert) => json!({
            "kind": "lex",
            "stages": cert.stages.iter().map(|s| {
                let mut funcs = Map::new();
                for (loc, f) in &s.functions {
                    funcs.insert(loc.clone(), affine_value(f));
                }
                json!({
                    "ranked_edges": s.ranked_edges,
                    "functions": Value::Object(funcs),
                })
            }).collect::<Vec<_>>(),
        }),
    }
}

fn recurrent_value(w: &RecurrentSetWitness) -> Value {
    let mut v = polyhedron_value(&w.set);
    let obj = v.as_object_mut().expect("object");
    obj.insert("kind".into(), json!("recurrent_set"));
    obj.insert("stalled_round".into(), json!(w.stalled_round));
    v
}

pub fn system_value(ts: &TransitionSystem) -> Value {
    json!({
        "vars": ts.vars().iter().map(|v| v.name().to_string()).collect::<Vec<_>>(),
        "init": ts.init(),
        "transitions": ts.edges().iter().map(|e| json!({
            "id": e.id,
            "src": e.src,
            "dst": e.dst,
            "constraints": e.rel.rows().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn scc_report_value(r: &SccReport) -> Value {
    json!({
        "locations": r.locations,
        "trivial": r.trivial,
        "verdict": r.verdict.as_str(),
        "certificate": r.certificate.as_ref().map(certificate_value),
        "recurrent_set": r.recurrent.as_ref().map(recurrent_value),
        "refinement": r.refinement.as_ref().map(|refi| json!({
            "system": system_value(&refi.system),
            "sccs": refi.sccs.iter().map(scc_report_value).collect::<Vec<_>>(),
        })),
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> Value {
        json!({
            "format": REPORT_FORMAT,
            "overall": self.overall.as_str(),
            "refined_system": self.refined_system.as_ref().map(system_value),
            "sccs": self.sccs.iter().map(scc_report_value).collect::<Vec<_>>(),
            "timing_ms": self.timing_ms as u64,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("overall: {}\n", self.overall.as_str()));
        if self.refined_system.is_some() {
            out.push_str("control-flow refinement: applied up front\n");
        }
        for (i, r) in self.sccs.iter().enumerate() {
            out.push_str(&format!(
                "component {}: {{{}}}{} -> {}\n",
                i,
                r.locations.join(", "),
                if r.trivial { " (trivial)" } else { "" },
                r.verdict.as_str()
            ));
            match &r.certificate {
                Some(Certificate::Lrf(c)) => {
                    out.push_str(&format!("  linear ranking function: {}\n", c.rho));
                }
                Some(Certificate::Mlrf(c)) => {
                    let parts: Vec<String> =
                        c.components.iter().map(|f| f.to_string()).collect();
                    out.push_str(&format!(
                        "  multiphase ranking function: <{}>\n",
                        parts.join(", ")
                    ));
                }
                Some(Certificate::Lex(c)) => {
                    for (k, stage) in c.stages.iter().enumerate() {
                        let funcs: Vec<String> = stage
                            .functions
                            .iter()
                            .map(|(l, f)| format!("{l}: {f}"))
                            .collect();
                        out.push_str(&format!(
                            "  stage {}: ranks [{}] with {}\n",
                            k + 1,
                            stage.ranked_edges.join(", "),
                            funcs.join("; ")
                        ));
                    }
                }
                None => {}
            }
            if let Some(w) = &r.recurrent {
                let rows: Vec<String> = w.set.rows().iter().map(|c| c.to_string()).collect();
                out.push_str(&format!("  recurrent set: {{{}}}\n", rows.join(", ")));
            }
            if let Some(refi) = &r.refinement {
                out.push_str(&format!(
                    "  refined into {} components\n",
                    refi.sccs.iter().filter(|s| !s.trivial).count()
                ));
            }
        }
        out.push_str(&format!("time: {} ms\n", self.timing_ms));
        out
    }
}
