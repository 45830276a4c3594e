//! Bounded exhaustive execution over integer boxes.
//!
//! Ground truth for tests: the nondeterministic successor graph over integer
//! states inside `[-B, B]^n` is explored fully. A repeated state on some
//! path is a lasso (non-termination); a path that can leave the box makes
//! the verdict inconclusive rather than guessed.

use crate::geometry::{OptOutcome, Polyhedron, Rational, Var};
use crate::geometry::{AffineFunc, Direction};
use crate::model::{Model, SlcLoop, TransitionSystem};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
pub struct BoxConfig {
    /// States range over `[-bound, bound]` per variable.
    pub bound: i64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateOutcome {
    /// Every path reaches a state with no enabled edge; `steps` is the
    /// longest path length.
    Terminated { steps: usize },
    /// Some path repeats a (location, state) pair.
    Nonterminated,
    /// Some path can leave the box; inconclusive.
    Escaped,
    /// The longest box-confined path exceeds the step budget; inconclusive.
    Budget,
}

/// Per-initial-state outcomes at the initial location.
#[derive(Debug, Clone)]
pub struct OracleVerdict {
    pub outcomes: BTreeMap<Vec<i64>, StateOutcome>,
}

impl OracleVerdict {
    /// True when no initial state inside the box was classified
    /// nonterminated.
    pub fn no_lasso(&self) -> bool {
        self.outcomes
            .values()
            .all(|o| *o != StateOutcome::Nonterminated)
    }
}

type Node = (usize, Vec<i64>);

#[derive(Debug, Clone, Copy)]
struct Info {
    lasso: bool,
    escape: bool,
    longest: usize,
}

struct Explorer<'a> {
    ts: &'a TransitionSystem,
    bound: i64,
    loc_index: BTreeMap<&'a str, usize>,
    info: BTreeMap<Node, Info>,
    gray: BTreeMap<Node, ()>,
}

impl<'a> Explorer<'a> {
    fn new(ts: &'a TransitionSystem, bound: i64) -> Self {
        let loc_index = ts
            .locations()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        Explorer {
            ts,
            bound,
            loc_index,
            info: BTreeMap::new(),
            gray: BTreeMap::new(),
        }
    }

    /// Integer successor states of (loc, vals) inside the box, plus an
    /// escape flag.
    ///
    /// The box truncates the successor relation: out-of-box points of a
    /// slice that also has in-box successors are pruned. An edge whose slice
    /// is satisfiable but yields no in-box integer successor while extending
    /// beyond the box means the run necessarily leaves the tracked state
    /// space there; such states are flagged and make verdicts inconclusive
    /// instead of being misread as blocked.
    fn successors(&self, node: &Node) -> (Vec<Node>, bool) {
        let (loc, vals) = node;
        let loc_name = &self.ts.locations()[*loc];
        let primed: Vec<Var> = self.ts.vars().iter().map(|v| v.primed()).collect();
        let mut succs = Vec::new();
        let mut escape = false;
        for edge in self.ts.outgoing(loc_name) {
            // Slice the edge polyhedron at the current state.
            let rows: Vec<_> = edge
                .rel
                .rows()
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    for (v, val) in self.ts.vars().iter().zip(vals.iter()) {
                        c = c.substitute(v, &AffineFunc::constant(Rational::from_integer((*val).into())));
                    }
                    c
                })
                .collect();
            let Ok(slice) = Polyhedron::new(primed.clone(), rows) else {
                continue;
            };
            if slice.is_empty() {
                continue;
            }
            // Per-variable integer ranges inside the box, noting escapes.
            let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(primed.len());
            let mut slice_escapes = false;
            for pv in &primed {
                let obj = AffineFunc::var(pv.clone());
                let lo = match slice.optimize(&obj, Direction::Minimize) {
                    OptOutcome::Optimal { value, .. } => {
                        if value < Rational::from_integer((-self.bound).into()) {
                            slice_escapes = true;
                        }
                        ceil_i64(&value).max(-self.bound)
                    }
                    OptOutcome::Unbounded => {
                        slice_escapes = true;
                        -self.bound
                    }
                    OptOutcome::Infeasible => {
                        ranges.clear();
                        break;
                    }
                };
                let hi = match slice.optimize(&obj, Direction::Maximize) {
                    OptOutcome::Optimal { value, .. } => {
                        if value > Rational::from_integer(self.bound.into()) {
                            slice_escapes = true;
                        }
                        floor_i64(&value).min(self.bound)
                    }
                    OptOutcome::Unbounded => {
                        slice_escapes = true;
                        self.bound
                    }
                    OptOutcome::Infeasible => {
                        ranges.clear();
                        break;
                    }
                };
                ranges.push((lo, hi));
            }
            if ranges.len() != primed.len() || ranges.iter().any(|(lo, hi)| lo > hi) {
                escape |= slice_escapes;
                continue;
            }
            let dst = self.loc_index[edge.dst.as_str()];
            let mut found = 0usize;
            enumerate_points(&ranges, &mut |point| {
                let assignment: BTreeMap<Var, Rational> = primed
                    .iter()
                    .cloned()
                    .zip(point.iter().map(|p| Rational::from_integer((*p).into())))
                    .collect();
                if slice.rows().iter().all(|c| c.satisfied_by(&assignment)) {
                    succs.push((dst, point.to_vec()));
                    found += 1;
                }
            });
            if found == 0 && slice_escapes {
                escape = true;
            }
        }
        (succs, escape)
    }

    /// Full exploration from a node with an explicit DFS stack; lassos are
    /// detected via the gray set, and longest path lengths are folded over
    /// the lasso-free part.
    fn explore(&mut self, root: Node) -> Info {
        if let Some(i) = self.info.get(&root) {
            return *i;
        }
        struct Frame {
            node: Node,
            succs: Vec<Node>,
            next: usize,
            acc: Info,
        }
        let mut stack: Vec<Frame> = Vec::new();
        let (succs, escape) = self.successors(&root);
        self.gray.insert(root.clone(), ());
        stack.push(Frame {
            node: root.clone(),
            succs,
            next: 0,
            acc: Info {
                lasso: false,
                escape,
                longest: 0,
            },
        });
        while let Some(top) = stack.last_mut() {
            if top.next < top.succs.len() {
                let child = top.succs[top.next].clone();
                top.next += 1;
                if let Some(ci) = self.info.get(&child) {
                    top.acc.lasso |= ci.lasso;
                    top.acc.escape |= ci.escape;
                    top.acc.longest = top.acc.longest.max(ci.longest + 1);
                } else if self.gray.contains_key(&child) {
                    top.acc.lasso = true;
                } else {
                    let (succs, escape) = self.successors(&child);
                    self.gray.insert(child.clone(), ());
                    stack.push(Frame {
                        node: child,
                        succs,
                        next: 0,
                        acc: Info {
                            lasso: false,
                            escape,
                            longest: 0,
                        },
                    });
                }
            } else {
                let done = stack.pop().expect("nonempty");
                self.gray.remove(&done.node);
                self.info.insert(done.node, done.acc);
                if let Some(parent) = stack.last_mut() {
                    parent.acc.lasso |= done.acc.lasso;
                    parent.acc.escape |= done.acc.escape;
                    parent.acc.longest = parent.acc.longest.max(done.acc.longest + 1);
                }
            }
        }
        self.info[&root]
    }
}

fn ceil_i64(q: &Rational) -> i64 {
    big_to_i64(&q.ceil().to_integer())
}

fn floor_i64(q: &Rational) -> i64 {
    big_to_i64(&q.floor().to_integer())
}

fn big_to_i64(b: &BigInt) -> i64 {
    b.to_i64().unwrap_or(if b.is_negative() { i64::MIN / 2 } else { i64::MAX / 2 })
}

fn enumerate_points(ranges: &[(i64, i64)], visit: &mut impl FnMut(&[i64])) {
    let mut point = vec![0i64; ranges.len()];
    fn rec(ranges: &[(i64, i64)], idx: usize, point: &mut Vec<i64>, visit: &mut impl FnMut(&[i64])) {
        if idx == ranges.len() {
            visit(point);
            return;
        }
        for v in ranges[idx].0..=ranges[idx].1 {
            point[idx] = v;
            rec(ranges, idx + 1, point, visit);
        }
    }
    rec(ranges, 0, &mut point, visit);
}

fn verdict(info: Info, max_steps: usize) -> StateOutcome {
    if info.lasso {
        StateOutcome::Nonterminated
    } else if info.escape {
        StateOutcome::Escaped
    } else if info.longest > max_steps {
        StateOutcome::Budget
    } else {
        StateOutcome::Terminated {
            steps: info.longest,
        }
    }
}

fn as_ts(model: &Model) -> TransitionSystem {
    match model {
        Model::Ts(ts) => ts.clone(),
        Model::Loop(l) => l.as_transition_system(),
    }
}

/// Explore from a single initial state (at the initial location).
pub fn run_state(model: &Model, cfg: BoxConfig, from: &[i64]) -> StateOutcome {
    let ts = as_ts(model);
    assert_eq!(from.len(), ts.vars().len(), "initial state arity");
    let mut ex = Explorer::new(&ts, cfg.bound);
    let init = ex.loc_index[ts.init()];
    if from.iter().any(|v| v.abs() > cfg.bound) {
        return StateOutcome::Escaped;
    }
    let info = ex.explore((init, from.to_vec()));
    verdict(info, cfg.max_steps)
}

/// Explore every initial state of the box at the initial location. The
/// exploration graph is shared across initial states.
pub fn run_box(model: &Model, cfg: BoxConfig) -> OracleVerdict {
    let ts = as_ts(model);
    let mut ex = Explorer::new(&ts, cfg.bound);
    let init = ex.loc_index[ts.init()];
    let n = ts.vars().len();
    let ranges: Vec<(i64, i64)> = vec![(-cfg.bound, cfg.bound); n];
    let mut outcomes = BTreeMap::new();
    enumerate_points(&ranges, &mut |point| {
        let info = ex.explore((init, point.to_vec()));
        outcomes.insert(point.to_vec(), verdict(info, cfg.max_steps));
    });
    OracleVerdict { outcomes }
}

/// Maximal step counts of a parameterized family of initial states.
pub fn steps_curve(
    l: &SlcLoop,
    family: impl Fn(i64) -> Vec<i64>,
    range: std::ops::RangeInclusive<i64>,
    cfg: BoxConfig,
) -> Vec<(i64, StateOutcome)> {
    let model = Model::Loop(l.clone());
    range
        .map(|k| (k, run_state(&model, cfg, &family(k))))
        .collect()
}
