//! Transition systems, single-path linear-constraint loops, their JSON
//! format, SCC decomposition, and the displacement change of variables.
//!
//! A loop document is `{"vars": [...], "loop": ["x' = x - 1", ...]}`; a
//! transition system is `{"vars": [...], "init": "...", "transitions":
//! [{"id", "src", "dst", "constraints": [...]}]}`. Primed variables carry a
//! trailing apostrophe. Initial-state semantics: the system is entered at
//! `init` with arbitrary variable values.

use crate::geometry::{
    parse_constraint, AffineFunc, Constraint, GeomError, ParseError, Polyhedron, Var,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{context}: {err}")]
    Constraint { context: String, err: ParseError },
    #[error("{context}: unknown variable `{var}` (declare it in \"vars\")")]
    UnknownVariable { context: String, var: String },
    #[error("duplicate transition id `{0}`")]
    DuplicateEdgeId(String),
    #[error("a model needs at least one variable")]
    NoVariables,
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("document must contain either \"loop\" or \"init\"/\"transitions\"")]
    UnrecognizedShape,
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// A single-path linear-constraint loop: one transition relation given as a
/// polyhedron over the unprimed and primed variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SlcLoop {
    vars: Vec<Var>,
    rel: Polyhedron,
}

impl SlcLoop {
    /// `rel`'s space must be exactly `vars` followed by their primed
    /// companions, in order.
    pub fn new(vars: Vec<Var>, rel: Polyhedron) -> Result<Self, ModelError> {
        if vars.is_empty() {
            return Err(ModelError::NoVariables);
        }
        let expected = loop_space(&vars);
        if rel.space() != expected.as_slice() {
            return Err(ModelError::Geometry(GeomError::SpaceMismatch {
                expected,
                got: rel.space().to_vec(),
            }));
        }
        Ok(SlcLoop { vars, rel })
    }

    pub fn from_texts(vars: &[&str], constraints: &[&str]) -> Result<Self, ModelError> {
        let vars: Vec<Var> = vars.iter().map(|v| Var::new(v)).collect();
        let rel = parse_relation(&vars, constraints.iter().copied(), "loop")?;
        SlcLoop::new(vars, rel)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rel(&self) -> &Polyhedron {
        &self.rel
    }

    /// The same loop with a replaced relation (space must match).
    pub fn with_rel(&self, rel: Polyhedron) -> Result<Self, ModelError> {
        SlcLoop::new(self.vars.clone(), rel)
    }

    /// Enabled states: the projection of the relation onto the unprimed
    /// variables.
    pub fn enabled_states(&self) -> Result<Polyhedron, GeomError> {
        self.rel.project(&self.vars)
    }

    /// View the loop as a one-location transition system with a single
    /// self-loop edge.
    pub fn as_transition_system(&self) -> TransitionSystem {
        TransitionSystem {
            vars: self.vars.clone(),
            locations: vec!["loop".to_string()],
            init: "loop".to_string(),
            edges: vec![Edge {
                id: "step".to_string(),
                src: "loop".to_string(),
                dst: "loop".to_string(),
                rel: self.rel.clone(),
            }],
        }
    }
}

/// The canonical space of a loop or edge relation: vars then primed vars.
pub fn loop_space(vars: &[Var]) -> Vec<Var> {
    vars.iter()
        .cloned()
        .chain(vars.iter().map(|v| v.primed()))
        .collect()
}

fn parse_relation<'a>(
    vars: &[Var],
    texts: impl Iterator<Item = &'a str>,
    context: &str,
) -> Result<Polyhedron, ModelError> {
    let space = loop_space(vars);
    let allowed: BTreeSet<&Var> = space.iter().collect();
    let mut rows = Vec::new();
    for text in texts {
        let c = parse_constraint(text).map_err(|err| ModelError::Constraint {
            context: format!("{context}, in `{text}`"),
            err,
        })?;
        for v in c.vars() {
            if !allowed.contains(v) {
                return Err(ModelError::UnknownVariable {
                    context: format!("{context}, in `{text}`"),
                    var: v.name().to_string(),
                });
            }
        }
        rows.push(c);
    }
    Ok(Polyhedron::new(space, rows)?)
}

/// A transition-system edge: a polyhedron over vars and primed vars relating
/// pre- and post-states.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub rel: Polyhedron,
}

/// A control-flow graph with numerical variables.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSystem {
    vars: Vec<Var>,
    locations: Vec<String>,
    init: String,
    edges: Vec<Edge>,
}

impl TransitionSystem {
    pub fn new(
        vars: Vec<Var>,
        init: String,
        edges: Vec<Edge>,
        extra_locations: Vec<String>,
    ) -> Result<Self, ModelError> {
        if vars.is_empty() {
            return Err(ModelError::NoVariables);
        }
        let mut names = BTreeSet::new();
        for v in &vars {
            if !names.insert(v.clone()) {
                return Err(ModelError::DuplicateVariable(v.name().to_string()));
            }
        }
        let expected = loop_space(&vars);
        let mut ids = BTreeSet::new();
        for e in &edges {
            if !ids.insert(e.id.clone()) {
                return Err(ModelError::DuplicateEdgeId(e.id.clone()));
            }
            if e.rel.space() != expected.as_slice() {
                return Err(ModelError::Geometry(GeomError::SpaceMismatch {
                    expected: expected.clone(),
                    got: e.rel.space().to_vec(),
                }));
            }
        }
        let mut locations = Vec::new();
        let mut seen = BTreeSet::new();
        let mut add = |l: &str, locations: &mut Vec<String>| {
            if seen.insert(l.to_string()) {
                locations.push(l.to_string());
            }
        };
        add(&init, &mut locations);
        for e in &edges {
            add(&e.src, &mut locations);
            add(&e.dst, &mut locations);
        }
        for l in extra_locations {
            add(&l, &mut locations);
        }
        Ok(TransitionSystem {
            vars,
            locations,
            init,
            edges,
        })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn init(&self) -> &str {
        &self.init
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn outgoing<'a>(&'a self, loc: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.src == loc)
    }

    /// Strongly connected components in reverse topological order (Tarjan).
    /// A component is trivial when it is a single location without a
    /// self-loop.
    pub fn sccs(&self) -> Vec<Scc> {
        tarjan(self)
    }

    /// The loop relation of a component that is a single location with
    /// exactly one internal edge, if the component has that shape.
    pub fn scc_as_loop(&self, scc: &Scc) -> Option<SlcLoop> {
        if scc.locations.len() != 1 || scc.edges.len() != 1 {
            return None;
        }
        let edge = self.edge(&scc.edges[0])?;
        SlcLoop::new(self.vars.clone(), edge.rel.clone()).ok()
    }
}

/// A strongly connected component: its locations and internal edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scc {
    pub locations: BTreeSet<String>,
    /// Ids of edges with both endpoints inside the component.
    pub edges: Vec<String>,
    /// Single location without a self-loop.
    pub trivial: bool,
}

fn tarjan(ts: &TransitionSystem) -> Vec<Scc> {
    struct State<'a> {
        ts: &'a TransitionSystem,
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        on_stack: BTreeSet<&'a str>,
        stack: Vec<&'a str>,
        next: usize,
        out: Vec<Scc>,
    }

    enum Frame<'a> {
        Enter(&'a str),
        Resume(&'a str, usize),
    }

    fn run<'a>(st: &mut State<'a>, root: &'a str) {
        let mut frames = vec![Frame::Enter(root)];
        while let Some(frame) = frames.pop() {
            match frame {
                Frame::Enter(v) => {
                    if st.index.contains_key(v) {
                        continue;
                    }
                    st.index.insert(v, st.next);
                    st.low.insert(v, st.next);
                    st.next += 1;
                    st.stack.push(v);
                    st.on_stack.insert(v);
                    frames.push(Frame::Resume(v, 0));
                }
                Frame::Resume(v, mut child) => {
                    let succs: Vec<&str> = st
                        .ts
                        .edges
                        .iter()
                        .filter(|e| e.src == v)
                        .map(|e| e.dst.as_str())
                        .collect();
                    let mut descended = false;
                    while child < succs.len() {
                        let w = succs[child];
                        child += 1;
                        if !st.index.contains_key(w) {
                            frames.push(Frame::Resume(v, child));
                            frames.push(Frame::Enter(w));
                            descended = true;
                            break;
                        }
                        if st.on_stack.contains(w) {
                            let lw = st.index[w];
                            let lv = st.low[v];
                            st.low.insert(v, lv.min(lw));
                        }
                    }
                    if descended {
                        continue;
                    }
                    // All children done: fold low links of tree children.
                    for w in &succs {
                        if (st.on_stack.contains(*w) || st.low.contains_key(*w))
                            && st.on_stack.contains(*w) {
                                let lw = st.low[*w];
                                let lv = st.low[v];
                                st.low.insert(v, lv.min(lw));
                            }
                    }
                    if st.low[v] == st.index[v] {
                        let mut members = BTreeSet::new();
                        while let Some(w) = st.stack.pop() {
                            st.on_stack.remove(w);
                            members.insert(w.to_string());
                            if w == v {
                                break;
                            }
                        }
                        let edges: Vec<String> = st
                            .ts
                            .edges
                            .iter()
                            .filter(|e| members.contains(&e.src) && members.contains(&e.dst))
                            .map(|e| e.id.clone())
                            .collect();
                        let trivial = members.len() == 1 && edges.is_empty();
                        st.out.push(Scc {
                            locations: members,
                            edges,
                            trivial,
                        });
                    }
                }
            }
        }
    }

    let mut st = State {
        ts,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on_stack: BTreeSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for l in &ts.locations {
        run(&mut st, l);
    }
    st.out
}

/// A loop in displacement representation: the primed variables are replaced
/// by per-variable displacements (`x' = x + y_x`).
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementLoop {
    vars: Vec<Var>,
    displacement_vars: Vec<Var>,
    rel: Polyhedron,
}

impl DisplacementLoop {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn displacement_vars(&self) -> &[Var] {
        &self.displacement_vars
    }

    pub fn rel(&self) -> &Polyhedron {
        &self.rel
    }

    /// Map a set over (vars, displacements) back to (vars, primed vars) via
    /// the substitution `y_i = x'_i - x_i`.
    pub fn to_primed_space(&self, set: &Polyhedron) -> Result<Polyhedron, ModelError> {
        let space = loop_space(&self.vars);
        let rows: Vec<Constraint> = set
            .rows()
            .iter()
            .map(|c| {
                let mut c = c.clone();
                for (v, d) in self.vars.iter().zip(&self.displacement_vars) {
                    let diff = AffineFunc::var(v.primed()).sub(&AffineFunc::var(v.clone()));
                    c = c.substitute(d, &diff);
                }
                c
            })
            .collect();
        Ok(Polyhedron::new(space, rows)?)
    }
}

/// Rewrite a loop into displacement representation by substituting
/// `x'_i := x_i + y_i`. A pure linear rewrite; points correspond
/// bijectively.
pub fn to_displacement(l: &SlcLoop) -> DisplacementLoop {
    let taken: BTreeSet<String> = l
        .vars
        .iter()
        .flat_map(|v| [v.name().to_string(), v.primed().name().to_string()])
        .collect();
    let displacement_vars: Vec<Var> = l
        .vars
        .iter()
        .map(|v| {
            let mut name = format!("y_{}", v.name());
            while taken.contains(&name) {
                name.push('_');
            }
            Var::new(&name)
        })
        .collect();
    let space: Vec<Var> = l
        .vars
        .iter()
        .cloned()
        .chain(displacement_vars.iter().cloned())
        .collect();
    let rows: Vec<Constraint> = l
        .rel
        .rows()
        .iter()
        .map(|c| {
            let mut c = c.clone();
            for (v, d) in l.vars.iter().zip(&displacement_vars) {
                let sum = AffineFunc::var(v.clone()).add(&AffineFunc::var(d.clone()));
                c = c.substitute(&v.primed(), &sum);
            }
            c
        })
        .collect();
    let rel = Polyhedron::new(space, rows).expect("substitution stays in space");
    DisplacementLoop {
        vars: l.vars.clone(),
        displacement_vars,
        rel,
    }
}

/// Either input shape accepted by the analyzer.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Loop(SlcLoop),
    Ts(TransitionSystem),
}

#[derive(Serialize, Deserialize)]
struct TransitionDoc {
    id: String,
    src: String,
    dst: String,
    constraints: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transitions: Option<Vec<TransitionDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    #[serde(rename = "loop")]
    loop_: Option<Vec<String>>,
}

/// Parse a UTF-8 JSON document into a validated model.
pub fn parse_document(text: &str) -> Result<Model, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        col: e.column(),
        msg: e.to_string(),
    })?;
    let vars: Vec<Var> = doc.vars.iter().map(|v| Var::new(v)).collect();
    match (doc.loop_, doc.init, doc.transitions) {
        (Some(texts), None, None) => {
            let rel = parse_relation(&vars, texts.iter().map(|s| s.as_str()), "loop")?;
            Ok(Model::Loop(SlcLoop::new(vars, rel)?))
        }
        (None, Some(init), transitions) => {
            let mut edges = Vec::new();
            for t in transitions.unwrap_or_default() {
                let context = format!("transition `{}`", t.id);
                let rel =
                    parse_relation(&vars, t.constraints.iter().map(|s| s.as_str()), &context)?;
                edges.push(Edge {
                    id: t.id,
                    src: t.src,
                    dst: t.dst,
                    rel,
                });
            }
            Ok(Model::Ts(TransitionSystem::new(vars, init, edges, vec![])?))
        }
        _ => Err(ModelError::UnrecognizedShape),
    }
}

/// Serialize a model back to its JSON document; `parse_document` of the
/// result equals the input up to constraint order.
pub fn serialize_model(model: &Model) -> String {
    let doc = match model {
        Model::Loop(l) => ModelDoc {
            vars: l.vars.iter().map(|v| v.name().to_string()).collect(),
            init: None,
            transitions: None,
            loop_: Some(l.rel.rows().iter().map(|c| c.to_string()).collect()),
        },
        Model::Ts(ts) => ModelDoc {
            vars: ts.vars.iter().map(|v| v.name().to_string()).collect(),
            init: Some(ts.init.clone()),
            transitions: Some(
                ts.edges
                    .iter()
                    .map(|e| TransitionDoc {
                        id: e.id.clone(),
                        src: e.src.clone(),
                        dst: e.dst.clone(),
                        constraints: e.rel.rows().iter().map(|c| c.to_string()).collect(),
                    })
                    .collect(),
            ),
            loop_: None,
        },
    };
    serde_json::to_string_pretty(&doc).expect("model document serializes")
}

/// Equality up to location renaming: a bijection on locations mapping init
/// to init such that edges correspond with structurally equal polyhedra
/// (up to constraint order and scaling).
pub fn isomorphic(a: &TransitionSystem, b: &TransitionSystem) -> bool {
    if a.vars != b.vars
        || a.locations.len() != b.locations.len()
        || a.edges.len() != b.edges.len()
    {
        return false;
    }

    fn edges_match(
        a: &TransitionSystem,
        b: &TransitionSystem,
        map: &BTreeMap<&str, &str>,
    ) -> bool {
        for ea in &a.edges {
            let (Some(ms), Some(md)) = (map.get(ea.src.as_str()), map.get(ea.dst.as_str()))
            else {
                continue;
            };
            let found = b
                .edges
                .iter()
                .any(|eb| eb.src == *ms && eb.dst == *md && eb.rel == ea.rel);
            if !found {
                return false;
            }
        }
        true
    }

    fn assign<'a>(
        a: &'a TransitionSystem,
        b: &'a TransitionSystem,
        order: &[&'a str],
        map: &mut BTreeMap<&'a str, &'a str>,
        used: &mut BTreeSet<&'a str>,
    ) -> bool {
        let Some(next) = order.iter().find(|l| !map.contains_key(*l)) else {
            // Complete assignment: check multiplicity both ways.
            for eb in &b.edges {
                let found = a.edges.iter().any(|ea| {
                    map[ea.src.as_str()] == eb.src
                        && map[ea.dst.as_str()] == eb.dst
                        && ea.rel == eb.rel
                });
                if !found {
                    return false;
                }
            }
            return true;
        };
        for cand in &b.locations {
            if used.contains(cand.as_str()) {
                continue;
            }
            map.insert(next, cand.as_str());
            used.insert(cand.as_str());
            if edges_match(a, b, map) && assign(a, b, order, map, used) {
                return true;
            }
            map.remove(*next);
            used.remove(cand.as_str());
        }
        false
    }

    let order: Vec<&str> = a.locations.iter().map(|s| s.as_str()).collect();
    let mut map = BTreeMap::new();
    let mut used = BTreeSet::new();
    map.insert(a.init.as_str(), b.init.as_str());
    used.insert(b.init.as_str());
    if !edges_match(a, b, &map) {
        return false;
    }
    assign(a, b, &order, &mut map, &mut used)
}
