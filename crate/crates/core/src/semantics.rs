//! Operational semantics: enabled activities and derivation graphs.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Action, ActionSet, Activity, ModelEnv, Term};
use crate::rate::{shared_rate, to_fraction_string, Rate};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub activity: Activity,
    pub target: Term,
    pub multiplicity: usize,
}

/// The multiset of activities a component can perform next, with their
/// derivatives. Identical `(activity, target)` pairs are merged.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransitionMultiset {
    entries: IndexMap<(Activity, Term), usize>,
}

impl TransitionMultiset {
    fn push(&mut self, activity: Activity, target: Term, multiplicity: usize) {
        *self.entries.entry((activity, target)).or_insert(0) += multiplicity;
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        self.entries.iter().map(|((activity, target), &multiplicity)| Transition {
            activity: activity.clone(),
            target: target.clone(),
            multiplicity,
        })
    }

    /// Current action types.
    pub fn action_types(&self) -> ActionSet {
        self.entries.keys().map(|(a, _)| a.action.clone()).collect()
    }

    /// Multiplicity-weighted rate sum of the `action` entries; `None` when the
    /// action is not enabled.
    pub fn apparent_rate(&self, action: &Action) -> Result<Option<Rate>> {
        let mut total: Option<Rate> = None;
        for ((activity, _), &mult) in &self.entries {
            if &activity.action != action {
                continue;
            }
            let contribution = activity.rate.scale(mult);
            total = Some(match total {
                None => contribution,
                Some(sum) => sum
                    .checked_add(&contribution)
                    .ok_or_else(|| Error::MixedRates { action: action.to_string() })?,
            });
        }
        Ok(total)
    }
}

/// Activities enabled in `term`, following the structural rules of the
/// calculus.
pub fn enabled(env: &ModelEnv, term: &Term) -> Result<TransitionMultiset> {
    let mut out = TransitionMultiset::default();
    match term {
        Term::Nil => {}
        Term::Prefix(activity, body) => out.push(activity.clone(), (**body).clone(), 1),
        Term::Const(name) => return enabled(env, env.definition(name)?),
        Term::Choice(left, right) => {
            for t in enabled(env, left)?.iter().chain(enabled(env, right)?.iter()) {
                out.push(t.activity, t.target, t.multiplicity);
            }
        }
        Term::Hide(body, set) => {
            for t in enabled(env, body)?.iter() {
                let activity = if set.contains(&t.activity.action) {
                    Activity::new(Action::tau(), t.activity.rate)
                } else {
                    t.activity
                };
                out.push(activity, Term::Hide(Arc::new(t.target), set.clone()), t.multiplicity);
            }
        }
        Term::Coop(left, set, right) => {
            let from_left = enabled(env, left)?;
            let from_right = enabled(env, right)?;
            for t in from_left.iter().filter(|t| !set.contains(&t.activity.action)) {
                let target = Term::Coop(Arc::new(t.target), set.clone(), Arc::clone(right));
                out.push(t.activity, target, t.multiplicity);
            }
            for t in from_right.iter().filter(|t| !set.contains(&t.activity.action)) {
                let target = Term::Coop(Arc::clone(left), set.clone(), Arc::new(t.target));
                out.push(t.activity, target, t.multiplicity);
            }
            for action in set {
                let (Some(apparent_left), Some(apparent_right)) =
                    (from_left.apparent_rate(action)?, from_right.apparent_rate(action)?)
                else {
                    continue;
                };
                for l in from_left.iter().filter(|t| &t.activity.action == action) {
                    for r in from_right.iter().filter(|t| &t.activity.action == action) {
                        let rate = shared_rate(&l.activity.rate, &r.activity.rate, &apparent_left, &apparent_right)?;
                        let target = Term::coop(l.target.clone(), set.clone(), r.target);
                        out.push(Activity::new(action.clone(), rate), target, l.multiplicity * r.multiplicity);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Apparent rate of `action` in `term`; `None` when it is not enabled.
pub fn apparent_rate(env: &ModelEnv, term: &Term, action: &Action) -> Result<Option<Rate>> {
    enabled(env, term)?.apparent_rate(action)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub action: Action,
    pub rate: Rate,
    pub dst: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DeriveOptions {
    pub max_states: usize,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        DeriveOptions { max_states: 100_000 }
    }
}

/// Reachable derivatives of a component and the arcs between them.
///
/// State 0 is the initial component; states appear in breadth-first
/// discovery order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationGraph {
    states: Vec<Term>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
}

impl DerivationGraph {
    pub fn states(&self) -> &[Term] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &Term {
        &self.states[index]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing[state].iter().map(|&e| &self.edges[e])
    }

    pub fn index_of(&self, term: &Term) -> Option<usize> {
        self.states.iter().position(|s| s == term)
    }

    /// Multiplicity-weighted sum of all outgoing rates; `None` for a state
    /// without arcs.
    pub fn exit_rate(&self, state: usize) -> Result<Option<Rate>> {
        let mut total: Option<Rate> = None;
        for edge in self.outgoing(state) {
            let contribution = edge.rate.scale(edge.multiplicity);
            total = Some(match total {
                None => contribution,
                Some(sum) => sum
                    .checked_add(&contribution)
                    .ok_or_else(|| Error::MixedRates { action: edge.action.to_string() })?,
            });
        }
        Ok(total)
    }

    /// Enabled action types of a state.
    pub fn action_types(&self, state: usize) -> ActionSet {
        self.outgoing(state).map(|e| e.action.clone()).collect()
    }

    /// DOT rendering: one node per state, one arrow per edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph derivation {\n");
        for (i, state) in self.states.iter().enumerate() {
            let _ = writeln!(out, "  s{i} [label=\"{}\"];", escape(&state.to_string()));
        }
        for edge in &self.edges {
            let _ = writeln!(
                out,
                "  s{} -> s{} [label=\"{}, {} \u{d7}{}\"];",
                edge.src,
                edge.dst,
                escape(edge.action.name()),
                escape(&edge.rate.to_string()),
                edge.multiplicity
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            states: self.states.iter().map(|s| s.to_string()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    src: e.src,
                    dst: e.dst,
                    action: e.action.to_string(),
                    passive: e.rate.is_passive(),
                    rate: to_fraction_string(e.rate.value()),
                    multiplicity: e.multiplicity,
                })
                .collect(),
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphJson {
    pub states: Vec<String>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeJson {
    pub src: usize,
    pub dst: usize,
    pub action: String,
    pub passive: bool,
    pub rate: String,
    pub multiplicity: usize,
}

/// Derivation graph of the environment's system component.
pub fn derive(env: &ModelEnv) -> Result<DerivationGraph> {
    derive_term(env, &env.root, &DeriveOptions::default())
}

/// Derivation graph of an arbitrary component over `env`'s definitions.
pub fn derive_term(env: &ModelEnv, root: &Term, options: &DeriveOptions) -> Result<DerivationGraph> {
    let mut states = vec![root.clone()];
    let mut index: HashMap<Term, usize> = HashMap::from([(root.clone(), 0)]);
    let mut edges = Vec::new();
    let mut outgoing = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(src) = queue.pop_front() {
        let mut out_edges = Vec::new();
        for t in enabled(env, &states[src])?.iter() {
            let dst = match index.get(&t.target) {
                Some(&dst) => dst,
                None => {
                    if states.len() >= options.max_states {
                        return Err(Error::StateCap { cap: options.max_states });
                    }
                    let dst = states.len();
                    index.insert(t.target.clone(), dst);
                    states.push(t.target);
                    queue.push_back(dst);
                    dst
                }
            };
            out_edges.push(edges.len());
            edges.push(Edge {
                src,
                action: t.activity.action,
                rate: t.activity.rate,
                dst,
                multiplicity: t.multiplicity,
            });
        }
        debug_assert_eq!(outgoing.len(), src);
        outgoing.push(out_edges);
    }
    Ok(DerivationGraph { states, edges, outgoing })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completeness {
    pub complete: bool,
    /// States with a passive arc, i.e. no finite exit rate.
    pub offenders: Vec<usize>,
    /// States without arcs. Reported, but they do not break completeness.
    pub absorbing: Vec<usize>,
}

/// Whether every arc carries an active rate.
pub fn is_complete(graph: &DerivationGraph) -> Completeness {
    let mut offenders = Vec::new();
    let mut absorbing = Vec::new();
    for state in 0..graph.len() {
        let mut arcs = graph.outgoing(state).peekable();
        if arcs.peek().is_none() {
            absorbing.push(state);
        } else if arcs.any(|e| !e.rate.is_active()) {
            offenders.push(state);
        }
    }
    Completeness { complete: offenders.is_empty(), offenders, absorbing }
}

/// `Ok(())` when the graph is complete, otherwise an error naming the
/// offending states.
pub fn require_complete(graph: &DerivationGraph) -> Result<()> {
    let report = is_complete(graph);
    if report.complete {
        Ok(())
    } else {
        Err(Error::Incomplete { states: report.offenders.iter().map(|&s| graph.state(s).to_string()).collect() })
    }
}
