//! Control-flow refinement: transition systems to linear constrained Horn
//! clauses, property-guided polyvariant partial evaluation, and back.
//!
//! The clause convention mirrors edges directly: one predicate per location
//! over the system's variables, one clause per edge whose head reads the
//! unprimed and whose body atom reads the primed variables. Partial
//! evaluation specializes predicates by satisfiable combinations of
//! property literals; since every specialized clause only strengthens its
//! source clause, the transformation is semantics-preserving by
//! construction.

use crate::geometry::{AffineFunc, Constraint, GeomError, Polyhedron, Rational, Rel, Var};
use crate::model::{loop_space, Edge, ModelError, Scc, TransitionSystem};
use num_traits::One;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Versions allowed per base predicate before partial evaluation refuses to
/// continue.
pub const DEFAULT_VERSION_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum CfrError {
    #[error("clause {index} of `{head}` has {arity} body atoms; linear programs allow at most one")]
    NonLinearClause {
        head: String,
        index: usize,
        arity: usize,
    },
    #[error("clause {index} of `{head}` has no body atom and no transition-system counterpart")]
    MissingBody { head: String, index: usize },
    #[error("predicate `{pred}` exceeded the version cap ({cap})")]
    VersionCap { pred: String, cap: usize },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A linear constrained Horn clause `head(x) <- C, body(x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: String,
    /// Constraint over the unprimed (head) and primed (body) variables.
    pub rel: Polyhedron,
    /// Zero or one atom; more is malformed here.
    pub body: Vec<String>,
    /// Edge id this clause descends from, for provenance across refinement.
    pub origin: Option<String>,
}

/// A linear CHC program mirroring a transition system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChcProgram {
    pub vars: Vec<Var>,
    pub preds: Vec<String>,
    pub entry: String,
    pub clauses: Vec<Clause>,
}

impl ChcProgram {
    pub fn clauses_of<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = &'a Clause> + 'a {
        self.clauses.iter().filter(move |c| c.head == pred)
    }
}

/// Properties (constraints over the unprimed variables) attached to
/// predicates; drives the polyvariant splitting.
pub type PropertyMap = BTreeMap<String, Vec<Constraint>>;

/// Property-file form: `{"n1": ["x >= 1", "y >= z"]}`.
pub fn properties_to_json(props: &PropertyMap) -> serde_json::Value {
    let mut obj = serde_json::Map::new();
    for (pred, list) in props {
        obj.insert(
            pred.clone(),
            serde_json::Value::Array(
                list.iter()
                    .map(|c| serde_json::Value::String(c.to_string()))
                    .collect(),
            ),
        );
    }
    serde_json::Value::Object(obj)
}

/// Parse a property file; constraint strings use the shared grammar.
pub fn properties_from_json(text: &str) -> Result<PropertyMap, ModelError> {
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(text).map_err(|e| ModelError::Syntax {
            line: e.line(),
            col: e.column(),
            msg: e.to_string(),
        })?;
    let mut out = PropertyMap::new();
    for (pred, texts) in raw {
        let mut list = Vec::new();
        for t in texts {
            let c = crate::geometry::parse_constraint(&t).map_err(|err| {
                ModelError::Constraint {
                    context: format!("property of `{pred}`, in `{t}`"),
                    err,
                }
            })?;
            list.push(c);
        }
        out.insert(pred, list);
    }
    Ok(out)
}

/// One predicate per location, one clause per edge, entry at init.
/// Semantics-preserving: derivations of the program correspond to runs of
/// the system.
pub fn ts_to_chc(ts: &TransitionSystem) -> ChcProgram {
    ChcProgram {
        vars: ts.vars().to_vec(),
        preds: ts.locations().to_vec(),
        entry: ts.init().to_string(),
        clauses: ts
            .edges()
            .iter()
            .map(|e| Clause {
                head: e.src.clone(),
                rel: e.rel.clone(),
                body: vec![e.dst.clone()],
                origin: Some(e.id.clone()),
            })
            .collect(),
    }
}

/// One location per predicate, one edge per clause, init at entry.
pub fn chc_to_ts(p: &ChcProgram) -> Result<TransitionSystem, CfrError> {
    let mut edges = Vec::new();
    let mut used_ids: BTreeSet<String> = BTreeSet::new();
    for (index, clause) in p.clauses.iter().enumerate() {
        match clause.body.len() {
            1 => {}
            0 => {
                return Err(CfrError::MissingBody {
                    head: clause.head.clone(),
                    index,
                })
            }
            n => {
                return Err(CfrError::NonLinearClause {
                    head: clause.head.clone(),
                    index,
                    arity: n,
                })
            }
        }
        let base = clause
            .origin
            .clone()
            .unwrap_or_else(|| format!("c{index}"));
        let mut id = base.clone();
        let mut k = 1;
        while !used_ids.insert(id.clone()) {
            k += 1;
            id = format!("{base}#{k}");
        }
        edges.push(Edge {
            id,
            src: clause.head.clone(),
            dst: clause.body[0].clone(),
            rel: clause.rel.clone(),
        });
    }
    Ok(TransitionSystem::new(
        p.vars.clone(),
        p.entry.clone(),
        edges,
        p.preds.clone(),
    )?)
}

/// Integer-shift negation of a property literal: `t <= 0` becomes
/// `t >= 1` when the canonical form is integral (matching integer guards),
/// and the strict complement otherwise.
fn negate_property(c: &Constraint) -> Constraint {
    let neg = c.lhs.scale(&-Rational::one());
    match c.rel {
        Rel::Lt => Constraint::new(neg, Rel::Le),
        Rel::Le | Rel::Eq => {
            let prim = c.lhs.to_primitive();
            if prim == c.lhs {
                // Already integral: not(t <= 0) is t - 1 >= 0.
                Constraint::new(neg.add(&AffineFunc::constant(Rational::one())), Rel::Le)
            } else {
                Constraint::new(neg, Rel::Lt)
            }
        }
    }
}

/// Harvest guard constraints (rows over unprimed variables only) from the
/// component's internal edges and attach them to its entry locations.
/// Duplicates are dropped; of two complementary half-planes only the
/// canonically smaller representative is kept.
pub fn infer_properties(ts: &TransitionSystem, scc: &Scc) -> PropertyMap {
    let props = harvest_guards(ts, scc);
    let mut map = PropertyMap::new();
    for entry in entry_locations(ts, scc) {
        map.insert(entry, props.clone());
    }
    map
}

/// Experimental variant: attach the harvested properties to every location
/// of the component rather than only its entries.
pub fn infer_properties_all_locations(ts: &TransitionSystem, scc: &Scc) -> PropertyMap {
    let props = harvest_guards(ts, scc);
    scc.locations
        .iter()
        .map(|l| (l.clone(), props.clone()))
        .collect()
}

fn entry_locations(ts: &TransitionSystem, scc: &Scc) -> Vec<String> {
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
        if let Some(first) = scc.locations.iter().next() {
            entries.insert(first.clone());
        }
    }
    entries.into_iter().collect()
}

fn harvest_guards(ts: &TransitionSystem, scc: &Scc) -> Vec<Constraint> {
    let mut candidates: Vec<Constraint> = Vec::new();
    let mut seen = BTreeSet::new();
    for id in &scc.edges {
        let Some(edge) = ts.edge(id) else { continue };
        for row in edge.rel.rows() {
            if row.lhs.is_constant() || row.vars().any(|v| v.is_primed()) {
                continue;
            }
            let split: Vec<Constraint> = match row.rel {
                // An equality guard contributes both half-planes.
                Rel::Eq => vec![
                    Constraint::new(row.lhs.clone(), Rel::Le),
                    Constraint::new(row.lhs.scale(&-Rational::one()), Rel::Le),
                ],
                _ => vec![row.clone()],
            };
            for c in split {
                if seen.insert(c.canonical_key()) {
                    candidates.push(c);
                }
            }
        }
    }
    // Collapse complementary pairs, keeping the canonically smaller side.
    let keys: BTreeSet<_> = candidates.iter().map(|c| c.canonical_key()).collect();
    let mut kept = Vec::new();
    for c in candidates {
        let neg = negate_property(&c);
        if keys.contains(&neg.canonical_key()) && neg.canonical_key() < c.canonical_key() {
            continue;
        }
        kept.push(c);
    }
    kept.sort_by_key(|c| c.canonical_key());
    kept
}

/// Polyvariant forward specialization guided by property literals.
///
/// The worklist starts at the entry with the empty context. For a version
/// `(q, phi)` and each clause `q <- C, r`, the reachable context of `r` is
/// the projection of `phi /\ C` onto the primed variables; the target
/// version of `r` is keyed by the set of property literals that context
/// decides (entails as stated or refuted via integer-shift negation).
/// Specialized clauses carry `C` strengthened with the source context;
/// unsatisfiable combinations are dropped. The literal pool is the union of
/// all mapped properties, so versions of downstream predicates split along
/// the same facts the loop heads were split by.
pub fn partial_evaluate(p: &ChcProgram, props: &PropertyMap) -> Result<ChcProgram, CfrError> {
    partial_evaluate_capped(p, props, DEFAULT_VERSION_CAP)
}

pub fn partial_evaluate_capped(
    p: &ChcProgram,
    props: &PropertyMap,
    cap: usize,
) -> Result<ChcProgram, CfrError> {
    for (index, clause) in p.clauses.iter().enumerate() {
        if clause.body.len() > 1 {
            return Err(CfrError::NonLinearClause {
                head: clause.head.clone(),
                index,
                arity: clause.body.len(),
            });
        }
    }
    let mut pool: Vec<Constraint> = Vec::new();
    let mut pool_keys = BTreeSet::new();
    for list in props.values() {
        for c in list {
            let split: Vec<Constraint> = match c.rel {
                Rel::Eq => vec![
                    Constraint::new(c.lhs.clone(), Rel::Le),
                    Constraint::new(c.lhs.scale(&-Rational::one()), Rel::Le),
                ],
                _ => vec![c.clone()],
            };
            for s in split {
                if pool_keys.insert(s.canonical_key()) {
                    pool.push(s);
                }
            }
        }
    }
    pool.sort_by_key(|c| c.canonical_key());

    type Key = Vec<(Vec<(Var, num_bigint::BigInt)>, num_bigint::BigInt, u8)>;
    struct Version {
        name: String,
        literals: Vec<Constraint>,
    }
    let mut versions: BTreeMap<(String, Key), Version> = BTreeMap::new();
    let mut order: Vec<(String, Key)> = Vec::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut used_names: BTreeSet<String> = p.preds.iter().cloned().collect();
    let mut queue: VecDeque<(String, Key)> = VecDeque::new();

    let unprimed: Vec<Var> = p.vars.clone();
    let primed: Vec<Var> = p.vars.iter().map(|v| v.primed()).collect();
    let back: BTreeMap<Var, Var> = p.vars.iter().map(|v| (v.primed(), v.clone())).collect();
    let space = loop_space(&p.vars);

    let intern = |pred: &str,
                      literals: Vec<Constraint>,
                      versions: &mut BTreeMap<(String, Key), Version>,
                      order: &mut Vec<(String, Key)>,
                      counts: &mut BTreeMap<String, usize>,
                      used_names: &mut BTreeSet<String>,
                      queue: &mut VecDeque<(String, Key)>|
     -> Result<String, CfrError> {
        let key: Key = literals.iter().map(|c| c.canonical_key()).collect();
        let slot = (pred.to_string(), key.clone());
        if let Some(v) = versions.get(&slot) {
            return Ok(v.name.clone());
        }
        let count = counts.entry(pred.to_string()).or_insert(0);
        *count += 1;
        if *count > cap {
            return Err(CfrError::VersionCap {
                pred: pred.to_string(),
                cap,
            });
        }
        let mut name = format!("{pred}_{count}");
        while !used_names.insert(name.clone()) {
            name.push('_');
        }
        versions.insert(
            slot.clone(),
            Version {
                name: name.clone(),
                literals,
            },
        );
        order.push(slot.clone());
        queue.push_back(slot);
        Ok(name)
    };

    let entry_name = intern(
        &p.entry,
        Vec::new(),
        &mut versions,
        &mut order,
        &mut counts,
        &mut used_names,
        &mut queue,
    )?;

    let mut out_clauses = Vec::new();
    while let Some(slot) = queue.pop_front() {
        let (pred, _) = &slot;
        let (head_name, context) = {
            let v = &versions[&slot];
            (v.name.clone(), v.literals.clone())
        };
        for clause in p.clauses_of(pred) {
            let combined = clause.rel.and(context.iter().cloned())?;
            if combined.is_empty() {
                continue;
            }
            if clause.body.is_empty() {
                out_clauses.push(Clause {
                    head: head_name.clone(),
                    rel: combined,
                    body: vec![],
                    origin: clause.origin.clone(),
                });
                continue;
            }
            let target_pred = &clause.body[0];
            let reach = combined.project(&primed)?;
            let reach = Polyhedron::new(
                unprimed.clone(),
                reach.rows().iter().map(|c| c.rename(&back)),
            )?;
            let mut decided = Vec::new();
            for prop in &pool {
                if reach.entails(prop) {
                    decided.push(prop.clone());
                } else {
                    let neg = negate_property(prop);
                    if reach.entails(&neg) {
                        decided.push(neg);
                    }
                }
            }
            let target_name = intern(
                target_pred,
                decided,
                &mut versions,
                &mut order,
                &mut counts,
                &mut used_names,
                &mut queue,
            )?;
            out_clauses.push(Clause {
                head: head_name.clone(),
                rel: combined,
                body: vec![target_name],
                origin: clause.origin.clone(),
            });
        }
    }
    debug_assert!(out_clauses.iter().all(|c| c.rel.space() == space.as_slice()));

    Ok(ChcProgram {
        vars: p.vars.clone(),
        preds: order.iter().map(|slot| versions[slot].name.clone()).collect(),
        entry: entry_name,
        clauses: out_clauses,
    })
}

/// Render in clause-per-line text form, folding identity updates into
/// repeated argument names: `q_n2(x, y, z) :- {y <= z - 1, y1 = y + 1}, q_n1(x, y1, z).`
pub fn dump_chc(p: &ChcProgram) -> String {
    let mut out = String::new();
    for clause in &p.clauses {
        let head_args: Vec<String> = p.vars.iter().map(|v| v.name().to_string()).collect();
        out.push_str(&format!(
            "{}({})",
            pred_symbol(&clause.head),
            head_args.join(", ")
        ));
        out.push_str(" :- ");
        if let Some(body) = clause.body.first() {
            let mut rename: BTreeMap<Var, Var> = BTreeMap::new();
            let mut body_args = Vec::new();
            let mut skip_keys = BTreeSet::new();
            for v in &p.vars {
                let identity = Constraint::new(
                    AffineFunc::var(v.primed()).sub(&AffineFunc::var(v.clone())),
                    Rel::Eq,
                );
                if clause.rel.entails(&identity) {
                    rename.insert(v.primed(), v.clone());
                    body_args.push(v.name().to_string());
                    skip_keys.insert(identity.canonical_key());
                } else {
                    let fresh = next_state_name(v, &p.vars);
                    rename.insert(v.primed(), Var::new(&fresh));
                    body_args.push(fresh);
                }
            }
            let rows: Vec<String> = clause
                .rel
                .rows()
                .iter()
                .filter(|c| !skip_keys.contains(&c.canonical_key()))
                .map(|c| c.rename(&rename).to_string())
                .collect();
            if !rows.is_empty() {
                out.push_str(&format!("{{{}}}, ", rows.join(", ")));
            }
            out.push_str(&format!(
                "{}({}).\n",
                pred_symbol(body),
                body_args.join(", ")
            ));
        } else {
            let rows: Vec<String> = clause.rel.rows().iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{{{}}}.\n", rows.join(", ")));
        }
    }
    out
}

fn pred_symbol(pred: &str) -> String {
    let sanitized: String = pred
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("q_{sanitized}")
}

fn next_state_name(v: &Var, vars: &[Var]) -> String {
    let mut name = format!("{}1", v.name());
    while vars.iter().any(|w| w.name() == name) {
        name.push('_');
    }
    name
}
