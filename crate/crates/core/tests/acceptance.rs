//! Acceptance suite: one test per release criterion, each printing a
//! PASS line on success. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; any failure fails the build.
//!
//! All arithmetic is exact rational, so equality assertions carry no
//! tolerance anywhere.

use phaserank::cfr::{chc_to_ts, infer_properties, partial_evaluate, ts_to_chc};
use phaserank::driver::{
    analyze, verify_certificate, AnalysisReport, Certificate, CfrScheme, RankClass, SccReport,
    StrategyConfig, Verdict,
};
use phaserank::geometry::{parse_affine, parse_constraint, AffineFunc, Rational, Var};
use phaserank::model::{isomorphic, parse_document, Model, SlcLoop, TransitionSystem};
use phaserank::oracle::{run_box, run_state, steps_curve, BoxConfig, StateOutcome};
use phaserank::ranking::{
    decide_bounded, find_lrf, find_mlrf_bounded, find_mlrf_iterative, verify_lrf, verify_mlrf,
    verify_recurrent, BoundedOutcome, IterativeOutcome, MlrfCert, RecurrentSetWitness,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn fixture(name: &str) -> Model {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).expect("fixture readable");
    parse_document(&text).expect("fixture parses")
}

fn fig1() -> TransitionSystem {
    match fixture("fig1_ts.json") {
        Model::Ts(ts) => ts,
        _ => panic!("fig1 fixture must be a transition system"),
    }
}

fn loop1() -> SlcLoop {
    match fixture("loop1.json") {
        Model::Loop(l) => l,
        _ => panic!("loop1 fixture must be a loop"),
    }
}

fn loop2() -> SlcLoop {
    match fixture("loop2.json") {
        Model::Loop(l) => l,
        _ => panic!("loop2 fixture must be a loop"),
    }
}

fn fixpoint_loop() -> SlcLoop {
    match fixture("fixpoint.json") {
        Model::Loop(l) => l,
        _ => panic!("fixpoint fixture must be a loop"),
    }
}

fn cfg(classes: &[RankClass], scheme: CfrScheme) -> StrategyConfig {
    StrategyConfig {
        rank_classes: classes.to_vec(),
        cfr_scheme: scheme,
        ..StrategyConfig::default()
    }
}

/// The refined two-phase system of the running example, built from its
/// published location and edge structure (names are arbitrary; comparison
/// is up to isomorphism).
fn expected_refined_fig1() -> TransitionSystem {
    let doc = r#"{
        "vars": ["x", "y", "z"],
        "init": "m0",
        "transitions": [
            {"id": "e0", "src": "m0", "dst": "a1", "constraints": ["x' = x", "y' = y", "z' = z"]},
            {"id": "e1", "src": "a1", "dst": "a2", "constraints": ["x >= 1", "x' = x", "y' = y", "z' = z"]},
            {"id": "e2", "src": "a1", "dst": "a3", "constraints": ["x <= 0", "x' = x", "y' = y", "z' = z"]},
            {"id": "e5", "src": "a2", "dst": "b1", "constraints": ["x >= 1", "y <= z - 1", "x' = x", "y' = y + 1", "z' = z"]},
            {"id": "e6", "src": "a2", "dst": "c1", "constraints": ["x >= 1", "y >= z", "x' = x - 1", "y' = y", "z' = z"]},
            {"id": "e1b", "src": "b1", "dst": "a2", "constraints": ["x >= 1", "x' = x", "y' = y", "z' = z"]},
            {"id": "e7", "src": "c1", "dst": "c2", "constraints": ["x >= 1", "y >= z", "x' = x", "y' = y", "z' = z"]},
            {"id": "e8", "src": "c1", "dst": "c3", "constraints": ["x <= 0", "y >= z", "x' = x", "y' = y", "z' = z"]},
            {"id": "e6b", "src": "c2", "dst": "c1", "constraints": ["x >= 1", "y >= z", "x' = x - 1", "y' = y", "z' = z"]}
        ]
    }"#;
    match parse_document(doc).expect("expected system parses") {
        Model::Ts(ts) => ts,
        _ => unreachable!(),
    }
}

#[test]
fn criterion_1_fig1_end_to_end_with_pre_refinement() {
    let start = Instant::now();
    let model = Model::Ts(fig1());
    let report = analyze(&model, &cfg(&[RankClass::Lrf], CfrScheme::Pre)).expect("analysis runs");
    assert_eq!(report.overall, Verdict::Terminating, "must prove termination");

    let refined = report.refined_system.as_ref().expect("pre scheme refines");
    assert_eq!(refined.locations().len(), 8, "eight refined locations");
    assert!(
        isomorphic(refined, &expected_refined_fig1()),
        "refined system must match the two-phase structure up to renaming"
    );

    let nontrivial: Vec<&SccReport> = report.sccs.iter().filter(|r| !r.trivial).collect();
    assert_eq!(nontrivial.len(), 2, "two refined loop components");
    for r in &nontrivial {
        assert_eq!(r.verdict, Verdict::Terminating);
        match &r.certificate {
            Some(Certificate::Lex(c)) => assert_eq!(c.stages.len(), 1, "one stage each"),
            other => panic!("expected a one-stage certificate, got {other:?}"),
        }
    }
    assert!(verify_certificate(&model, &report), "checker accepts");
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 5,
        "end-to-end run took {elapsed:?}, budget is 5 s"
    );
    println!("ACCEPT 1 PASS: pre-refinement proves the two-phase system with 1-stage certificates ({elapsed:?})");
}

#[test]
fn criterion_2_fig1_controls() {
    let model = Model::Ts(fig1());
    let plain = analyze(&model, &cfg(&[RankClass::Lrf], CfrScheme::None)).unwrap();
    assert_eq!(plain.overall, Verdict::Unknown, "single-stage ranking alone must fail");

    let lex = analyze(&model, &cfg(&[RankClass::Lex], CfrScheme::None)).unwrap();
    assert_eq!(lex.overall, Verdict::Terminating);
    let scc = lex.sccs.iter().find(|r| !r.trivial).expect("loop component");
    match &scc.certificate {
        Some(Certificate::Lex(c)) => assert_eq!(c.stages.len(), 2, "two lexicographic stages"),
        other => panic!("expected a lexicographic certificate, got {other:?}"),
    }
    assert!(verify_certificate(&model, &lex));
    println!("ACCEPT 2 PASS: unknown without refinement under plain ranking; 2-stage lexicographic proof verified");
}

#[test]
fn criterion_3_chc_listings() {
    let ts = fig1();
    let program = ts_to_chc(&ts);
    assert_eq!(program.clauses.len(), 5, "five clauses");
    assert_eq!(program.preds.len(), 4);
    // Clause constraints are exactly the edge polyhedra.
    for (clause, edge) in program.clauses.iter().zip(ts.edges()) {
        assert_eq!(clause.head, edge.src);
        assert_eq!(clause.body, vec![edge.dst.clone()]);
        assert_eq!(clause.rel, edge.rel, "clause carries the edge constraint");
    }

    let scc = ts.sccs().into_iter().find(|s| !s.trivial).unwrap();
    let props = infer_properties(&ts, &scc);
    let texts: Vec<String> = props["n1"].iter().map(|c| c.to_string()).collect();
    assert_eq!(texts, vec!["x >= 1", "y >= z"], "inferred loop-head properties");

    let specialized = partial_evaluate(&program, &props).expect("specialization runs");
    assert_eq!(specialized.clauses.len(), 9, "nine specialized clauses");
    assert_eq!(specialized.preds.len(), 8, "eight predicate versions");
    let as_ts = chc_to_ts(&specialized).expect("linear program");
    assert!(
        isomorphic(&as_ts, &expected_refined_fig1()),
        "specialized program matches the published listing up to version renaming"
    );
    // Strengthened constraints: the guard-carrying clauses now include the
    // loop-head facts.
    let q7 = parse_constraint("y >= z").unwrap();
    let strengthened = specialized
        .clauses
        .iter()
        .filter(|c| c.rel.entails(&q7))
        .count();
    assert!(strengthened >= 4, "y >= z propagated into the second phase");
    println!("ACCEPT 3 PASS: clause listing and 9-clause specialization reproduced exactly");
}

#[test]
fn criterion_4_loops_lrf_and_mlrf() {
    let l1 = loop1();
    let cert = find_lrf(&l1).expect("first loop has a linear ranking function");
    assert!(verify_lrf(&l1, &cert.rho));
    assert!(verify_lrf(&l1, &parse_affine("y - x").unwrap()));

    let l2 = loop2();
    assert!(find_lrf(&l2).is_none(), "three-phase loop has no linear rank");
    let cert = find_mlrf_bounded(&l2, 3).expect("depth 3 suffices");
    assert!(verify_mlrf(&l2, &cert));
    let zyx = MlrfCert {
        components: vec![
            parse_affine("z").unwrap(),
            parse_affine("y").unwrap(),
            parse_affine("x").unwrap(),
        ],
    };
    assert!(verify_mlrf(&l2, &zyx), "the textbook <z, y, x> certificate verifies");
    assert!(find_mlrf_bounded(&l2, 1).is_none(), "depth 1 is not enough");
    println!("ACCEPT 4 PASS: linear and multiphase certificates behave as published on both loops");
}

#[test]
fn criterion_5_iterative_algorithm() {
    let l2 = loop2();
    match find_mlrf_iterative(&l2, 10).expect("no resource trouble") {
        IterativeOutcome::Mlrf(cert) => assert!(verify_mlrf(&l2, &cert)),
        other => panic!("expected a multiphase certificate, got {other:?}"),
    }

    let fp = fixpoint_loop();
    let witness = match find_mlrf_iterative(&fp, 10).unwrap() {
        IterativeOutcome::Recurrent(w) => w,
        other => panic!("expected a recurrent set, got {other:?}"),
    };
    assert!(verify_recurrent(&fp, &witness));
    let lasso = run_state(
        &Model::Loop(fp),
        BoxConfig {
            bound: 5,
            max_steps: 50,
        },
        &[0],
    );
    assert_eq!(lasso, StateOutcome::Nonterminated, "oracle sees the lasso from x = 0");
    println!("ACCEPT 5 PASS: elimination finds a verified multiphase certificate and a verified recurrent set");
}

/// Random loop whose relation is a box plus a few extra rows; always a
/// bounded polyhedron.
fn random_bounded_loop(rng: &mut StdRng) -> SlcLoop {
    let n = rng.gen_range(1..=3);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut texts: Vec<String> = Vec::new();
    for primed in [false, true] {
        for v in &vars {
            let lo = rng.gen_range(-2..=2);
            let hi = rng.gen_range(lo..=2);
            let mark = if primed { "'" } else { "" };
            texts.push(format!("{v}{mark} >= {lo}"));
            texts.push(format!("{v}{mark} <= {hi}"));
        }
    }
    let extra = rng.gen_range(0..=3);
    for _ in 0..extra {
        let mut lhs = String::from("0");
        for v in &vars {
            let c: i64 = rng.gen_range(-2..=2);
            let mark = if rng.gen_bool(0.5) { "'" } else { "" };
            if c >= 0 {
                lhs.push_str(&format!(" + {c}*{v}{mark}"));
            } else {
                lhs.push_str(&format!(" - {}*{v}{mark}", -c));
            }
        }
        let k: i64 = rng.gen_range(-2..=2);
        texts.push(format!("{lhs} <= {k}"));
    }
    let rows: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
    SlcLoop::from_texts(&vars, &rows).expect("generated loop is well-formed")
}

fn has_fixpoint(l: &SlcLoop) -> bool {
    let rows: Vec<_> = l
        .vars()
        .iter()
        .map(|v| {
            parse_constraint(&format!("{}' = {}", v.name(), v.name())).expect("fixpoint row")
        })
        .collect();
    !l.rel().and(rows).expect("same space").is_empty()
}

#[test]
fn criterion_6_bounded_dichotomy() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x0b5e55ed);
    for i in 0..100 {
        let l = random_bounded_loop(&mut rng);
        let fixpoint = has_fixpoint(&l);
        let lrf = find_lrf(&l);
        assert!(
            fixpoint != lrf.is_some(),
            "loop {i}: exactly one of fixpoint/ranking must hold ({})",
            phaserank::model::serialize_model(&Model::Loop(l.clone()))
        );
        match decide_bounded(&l).expect("dichotomy procedure never errors here") {
            BoundedOutcome::Terminating(cert) => {
                assert!(!fixpoint, "loop {i}");
                assert!(verify_lrf(&l, &cert.rho) || l.rel().is_empty());
            }
            BoundedOutcome::Nonterminating { fixpoint: point } => {
                assert!(fixpoint, "loop {i}");
                // The witness is a genuine fixpoint transition.
                let mut full = point.clone();
                for v in l.vars() {
                    full.insert(v.primed(), point[v].clone());
                }
                for row in l.rel().rows() {
                    assert!(row.satisfied_by(&full), "loop {i}: witness violates {row}");
                }
            }
            BoundedOutcome::NotApplicable => panic!("loop {i}: generated loops are bounded"),
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "dichotomy sweep took {elapsed:?}");
    println!("ACCEPT 6 PASS: 100 bounded loops all satisfy the fixpoint/ranking dichotomy ({elapsed:?})");
}

#[test]
fn criterion_7_linear_bound_empiricism() {
    let l2 = loop2();
    let cfg = BoxConfig {
        bound: 3000,
        max_steps: 500,
    };
    let curve = steps_curve(&l2, |k| vec![0, 0, k], 1..=10, cfg);
    let frozen: Vec<usize> = vec![6, 9, 12, 15, 18, 21, 24, 27, 30, 33];
    let counts: Vec<usize> = curve
        .iter()
        .map(|(k, out)| match out {
            StateOutcome::Terminated { steps } => *steps,
            other => panic!("k = {k}: expected termination, got {other:?}"),
        })
        .collect();
    assert_eq!(counts, frozen, "regression against the frozen oracle run");
    for w in counts.windows(3) {
        let d1 = w[1] as i64 - w[0] as i64;
        let d2 = w[2] as i64 - w[1] as i64;
        assert!((d2 - d1).abs() <= 2, "second difference exceeds 2: {w:?}");
    }
    let single = run_state(&Model::Loop(l2), cfg, &[0, 0, 3]);
    assert_eq!(
        single,
        StateOutcome::Terminated { steps: 12 },
        "frozen trajectory length from (0, 0, 3)"
    );
    println!("ACCEPT 7 PASS: iteration counts grow linearly (second differences 0) and match the frozen run");
}

/// The documented mutation: add 1 to the coefficient of the first model
/// variable in the first component of the certificate (first stage function
/// at the smallest location for lexicographic certificates; first constraint
/// of a recurrent set). A +1 on a constant could produce another valid
/// certificate, which no sound checker may reject; the leading-coefficient
/// mutation genuinely invalidates every fixture certificate.
fn mutate_report(report: &AnalysisReport, first_var: &Var) -> AnalysisReport {
    fn bump(f: &AffineFunc, v: &Var) -> AffineFunc {
        let mut out = f.clone();
        out.add_term(v, Rational::from_integer(1.into()));
        out
    }
    fn mutate_scc(r: &SccReport, v: &Var) -> SccReport {
        let mut r = r.clone();
        match &mut r.certificate {
            Some(Certificate::Lrf(c)) => c.rho = bump(&c.rho, v),
            Some(Certificate::Mlrf(c)) => c.components[0] = bump(&c.components[0], v),
            Some(Certificate::Lex(c)) => {
                if let Some(stage) = c.stages.first_mut() {
                    if let Some((_, f)) = stage.functions.iter_mut().next() {
                        *f = bump(f, v);
                    }
                }
            }
            None => {}
        }
        if let Some(w) = &mut r.recurrent {
            let mut rows: Vec<_> = w.set.rows().to_vec();
            if let Some(first) = rows.first_mut() {
                let mut lhs = first.lhs.clone();
                lhs.add_term(v, Rational::from_integer(1.into()));
                *first = phaserank::geometry::Constraint::new(lhs, first.rel);
            }
            w.set = phaserank::geometry::Polyhedron::new(w.set.space().to_vec(), rows)
                .expect("same space");
        }
        if let Some(refinement) = &mut r.refinement {
            refinement.sccs = refinement.sccs.iter().map(|s| mutate_scc(s, v)).collect();
        }
        r
    }
    let mut out = report.clone();
    out.sccs = report
        .sccs
        .iter()
        .map(|r| mutate_scc(r, first_var))
        .collect();
    out
}

#[test]
fn criterion_8_mutation_rejection() {
    let cases: Vec<(Model, StrategyConfig)> = vec![
        (Model::Ts(fig1()), cfg(&[RankClass::Lex], CfrScheme::None)),
        (Model::Ts(fig1()), cfg(&[RankClass::Lrf], CfrScheme::Pre)),
        (Model::Loop(loop1()), cfg(&[RankClass::Lrf], CfrScheme::None)),
        (
            Model::Loop(loop2()),
            cfg(&[RankClass::MlrfBounded], CfrScheme::None),
        ),
        (
            Model::Loop(fixpoint_loop()),
            cfg(&[RankClass::MlrfIterative], CfrScheme::None),
        ),
    ];
    for (i, (model, config)) in cases.iter().enumerate() {
        let report = analyze(model, config).expect("analysis runs");
        assert_ne!(report.overall, Verdict::Unknown, "case {i} must decide");
        assert!(
            verify_certificate(model, &report),
            "case {i}: pristine report verifies"
        );
        let first_var = match model {
            Model::Ts(ts) => ts.vars()[0].clone(),
            Model::Loop(l) => l.vars()[0].clone(),
        };
        let mutated = mutate_report(&report, &first_var);
        assert!(
            !verify_certificate(model, &mutated),
            "case {i}: mutated certificate must be rejected"
        );
    }
    println!("ACCEPT 8 PASS: every +1 coefficient mutation is rejected by the checker");
}

#[test]
fn criterion_9_cfr_preserves_oracle_verdicts() {
    let cfg_box = BoxConfig {
        bound: 5,
        max_steps: 60,
    };
    for name in [
        "fig1_ts.json",
        "loop1.json",
        "loop2.json",
        "fixpoint.json",
        "countdown.json",
        "two_loops.json",
        "nonterm_ts.json",
    ] {
        let model = fixture(name);
        let ts = match &model {
            Model::Ts(ts) => ts.clone(),
            Model::Loop(l) => l.as_transition_system(),
        };
        let refined = phaserank::driver::refine_whole(&ts).expect("refinement runs");
        let before = run_box(&model, cfg_box);
        let after = run_box(&Model::Ts(refined), cfg_box);
        assert_eq!(
            before.outcomes, after.outcomes,
            "{name}: oracle verdicts must be identical before and after refinement"
        );
    }
    println!("ACCEPT 9 PASS: refinement preserves all box-oracle verdicts on the fixture corpus");
}

/// Verified recurrent sets must be realizable: from every integer point of
/// the witness's enabled-state projection inside the box, the oracle finds a
/// lasso. Companion to criterion 5.
#[test]
fn recurrent_witness_points_all_diverge() {
    let fp = fixpoint_loop();
    let witness: RecurrentSetWitness = match find_mlrf_iterative(&fp, 10).unwrap() {
        IterativeOutcome::Recurrent(w) => w,
        other => panic!("expected a recurrent set, got {other:?}"),
    };
    let enabled = witness.set.project(fp.vars()).expect("projection");
    let cfg_box = BoxConfig {
        bound: 4,
        max_steps: 40,
    };
    for x in -4..=4i64 {
        let point = [(fp.vars()[0].clone(), Rational::from_integer(x.into()))]
            .into_iter()
            .collect();
        if enabled.rows().iter().all(|c| c.satisfied_by(&point)) {
            let out = run_state(&Model::Loop(fp.clone()), cfg_box, &[x]);
            assert_eq!(out, StateOutcome::Nonterminated, "witness point x = {x}");
        }
    }
    println!("ACCEPT 5b PASS: every boxed witness point diverges under the oracle");
}
