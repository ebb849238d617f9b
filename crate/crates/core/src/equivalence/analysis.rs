use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::model::{Action, Term};
use crate::rate::{Rate, Rational};
use crate::semantics::{require_complete, DerivationGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Single,
    Left,
    Right,
}

impl Origin {
    pub fn name(self) -> &'static str {
        match self {
            Origin::Single => "single",
            Origin::Left => "left",
            Origin::Right => "right",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StateInfo {
    pub term: Term,
    pub label: String,
    pub origin: Origin,
    /// Index in the owning derivation graph.
    pub local: usize,
}

/// Aggregated arc between two states for one action, scaled to an integer.
#[derive(Clone, Debug)]
pub(crate) struct Arc {
    pub other: usize,
    pub action: usize,
    pub weight: BigInt,
}

/// One or two complete derivation graphs side by side, with disjoint state
/// ranges and no arcs between them.
///
/// Rates are stored as integers over a common denominator so that clause
/// sums are exact and cheap.
#[derive(Clone, Debug)]
pub struct AnalysisGraph {
    states: Vec<StateInfo>,
    actions: Vec<Action>,
    scale: BigInt,
    pub(crate) out_arcs: Vec<Vec<Arc>>,
    pub(crate) in_arcs: Vec<Vec<Arc>>,
    roots: Vec<usize>,
}

impl AnalysisGraph {
    pub fn single(graph: &DerivationGraph) -> Result<AnalysisGraph> {
        AnalysisGraph::build(&[(graph, Origin::Single)])
    }

    pub fn union(left: &DerivationGraph, right: &DerivationGraph) -> Result<AnalysisGraph> {
        AnalysisGraph::build(&[(left, Origin::Left), (right, Origin::Right)])
    }

    fn build(parts: &[(&DerivationGraph, Origin)]) -> Result<AnalysisGraph> {
        for (graph, _) in parts {
            require_complete(graph)?;
        }
        let mut actions: Vec<Action> =
            parts.iter().flat_map(|(g, _)| g.edges().iter().map(|e| e.action.clone())).collect();
        actions.sort();
        actions.dedup();

        let mut scale = BigInt::one();
        for (graph, _) in parts {
            for edge in graph.edges() {
                scale = scale.lcm(edge.rate.value().denom());
            }
        }

        let mut states = Vec::new();
        let mut roots = Vec::new();
        let mut aggregated: BTreeMap<(usize, usize, usize), BigInt> = BTreeMap::new();
        for (graph, origin) in parts {
            let offset = states.len();
            roots.push(offset);
            for (local, term) in graph.states().iter().enumerate() {
                states.push(StateInfo { term: term.clone(), label: term.to_string(), origin: *origin, local });
            }
            for edge in graph.edges() {
                let action = actions.binary_search(&edge.action).expect("action collected above");
                let Rate::Active(value) = &edge.rate else { unreachable!("graph checked complete") };
                let weight = (value * Rational::from_integer(scale.clone())).to_integer() * BigInt::from(edge.multiplicity);
                *aggregated.entry((offset + edge.src, offset + edge.dst, action)).or_default() += weight;
            }
        }

        let mut out_arcs = vec![Vec::new(); states.len()];
        let mut in_arcs = vec![Vec::new(); states.len()];
        for ((src, dst, action), weight) in aggregated {
            out_arcs[src].push(Arc { other: dst, action, weight: weight.clone() });
            in_arcs[dst].push(Arc { other: src, action, weight });
        }
        Ok(AnalysisGraph { states, actions, scale, out_arcs, in_arcs, roots })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, index: usize) -> &StateInfo {
        &self.states[index]
    }

    pub fn states(&self) -> &[StateInfo] {
        &self.states
    }

    /// Initial state of each constituent graph.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Action types labelling some arc, sorted by name.
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub(crate) fn action(&self, index: usize) -> &Action {
        &self.actions[index]
    }

    fn action_index(&self, action: &Action) -> Option<usize> {
        self.actions.binary_search(action).ok()
    }

    pub(crate) fn unscale(&self, weight: &BigInt) -> Rational {
        Rational::new(weight.clone(), self.scale.clone())
    }

    fn sum<'a>(&self, arcs: impl Iterator<Item = &'a Arc>) -> Rational {
        let total: BigInt = arcs.fold(BigInt::zero(), |acc, arc| acc + &arc.weight);
        self.unscale(&total)
    }

    /// `q[P, a]`, self-loops included.
    pub fn outgoing(&self, state: usize, action: &Action) -> Rational {
        let Some(a) = self.action_index(action) else { return Rational::zero() };
        self.sum(self.out_arcs[state].iter().filter(|arc| arc.action == a))
    }

    /// `q[S, P, a]` where `S` is given as a membership predicate.
    pub fn from_set(&self, set: impl Fn(usize) -> bool, state: usize, action: &Action) -> Rational {
        let Some(a) = self.action_index(action) else { return Rational::zero() };
        self.sum(self.in_arcs[state].iter().filter(|arc| arc.action == a && set(arc.other)))
    }

    /// `q[P, S, a]` where `S` is given as a membership predicate.
    pub fn to_set(&self, state: usize, set: impl Fn(usize) -> bool, action: &Action) -> Rational {
        let Some(a) = self.action_index(action) else { return Rational::zero() };
        self.sum(self.out_arcs[state].iter().filter(|arc| arc.action == a && set(arc.other)))
    }
}
