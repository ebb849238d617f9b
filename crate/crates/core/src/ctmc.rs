//! Underlying Markov chain: rate queries, generator matrix and steady state.
//!
//! Rate queries count self-loop arcs (they matter to the equivalence
//! clauses); the generator ignores them.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Action;
use crate::rate::{to_fraction_string, Rate, Rational};
use crate::semantics::{DerivationGraph, Edge};

fn edge_value(graph: &DerivationGraph, edge: &Edge) -> Result<Rational> {
    match &edge.rate {
        Rate::Active(v) => Ok(v * Rational::from_integer(BigInt::from(edge.multiplicity))),
        Rate::Passive(_) => Err(Error::Incomplete { states: vec![graph.state(edge.src).to_string()] }),
    }
}

fn check_index(graph: &DerivationGraph, index: usize) -> Result<()> {
    if index < graph.len() {
        Ok(())
    } else {
        Err(Error::StateIndex(index))
    }
}

/// The rate sums used by the equivalence definitions.
#[derive(Clone, Debug)]
pub enum RateQuery<'a> {
    /// `q(i, j)`, zero when `i == j`.
    Transition { from: usize, to: usize },
    /// `q(i, j, a)`.
    Conditional { from: usize, to: usize, action: &'a Action },
    /// `q[i, a]`.
    Outgoing { from: usize, action: &'a Action },
    /// `q[i, S, a]`.
    ToSet { from: usize, set: &'a BTreeSet<usize>, action: &'a Action },
    /// `q[S, i, a]`.
    FromSet { set: &'a BTreeSet<usize>, to: usize, action: &'a Action },
}

pub fn rate_query(graph: &DerivationGraph, query: &RateQuery<'_>) -> Result<Rational> {
    let mut total = Rational::zero();
    match query {
        RateQuery::Transition { from, to } => {
            check_index(graph, *from)?;
            check_index(graph, *to)?;
            if from == to {
                return Ok(total);
            }
            for edge in graph.outgoing(*from).filter(|e| e.dst == *to) {
                total += edge_value(graph, edge)?;
            }
        }
        RateQuery::Conditional { from, to, action } => {
            check_index(graph, *from)?;
            check_index(graph, *to)?;
            for edge in graph.outgoing(*from).filter(|e| e.dst == *to && &e.action == *action) {
                total += edge_value(graph, edge)?;
            }
        }
        RateQuery::Outgoing { from, action } => {
            check_index(graph, *from)?;
            for edge in graph.outgoing(*from).filter(|e| &e.action == *action) {
                total += edge_value(graph, edge)?;
            }
        }
        RateQuery::ToSet { from, set, action } => {
            check_index(graph, *from)?;
            for edge in graph.outgoing(*from).filter(|e| set.contains(&e.dst) && &e.action == *action) {
                total += edge_value(graph, edge)?;
            }
        }
        RateQuery::FromSet { set, to, action } => {
            check_index(graph, *to)?;
            for &src in *set {
                check_index(graph, src)?;
                for edge in graph.outgoing(src).filter(|e| e.dst == *to && &e.action == *action) {
                    total += edge_value(graph, edge)?;
                }
            }
        }
    }
    Ok(total)
}

/// Infinitesimal generator of a complete derivation graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    entries: Vec<Vec<Rational>>,
}

impl Generator {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.entries.iter().map(|row| row.iter().map(to_fraction_string).collect()).collect()
    }
}

pub fn generator(graph: &DerivationGraph) -> Result<Generator> {
    let n = graph.len();
    let mut entries = vec![vec![Rational::zero(); n]; n];
    for edge in graph.edges() {
        let value = edge_value(graph, edge)?;
        if edge.src != edge.dst {
            entries[edge.src][edge.dst] += value;
        }
    }
    for (i, row) in entries.iter_mut().enumerate() {
        let off_diagonal: Rational = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum();
        row[i] = -off_diagonal;
    }
    Ok(Generator { entries })
}

/// Strongly connected components in a deterministic order: members sorted,
/// components sorted by least member.
fn components(graph: &DerivationGraph) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..graph.len()).map(|_| g.add_node(())).collect();
    for edge in graph.edges() {
        g.add_edge(nodes[edge.src], nodes[edge.dst], ());
    }
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut members: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            members.sort_unstable();
            members
        })
        .collect();
    sccs.sort();
    sccs
}

pub fn is_irreducible(graph: &DerivationGraph) -> bool {
    components(graph).len() <= 1
}

/// `Ok(())` for an irreducible graph, otherwise an error naming the first
/// component (by least member) that cannot be left.
pub fn require_irreducible(graph: &DerivationGraph) -> Result<()> {
    let sccs = components(graph);
    if sccs.len() <= 1 {
        return Ok(());
    }
    let mut owner = vec![0; graph.len()];
    for (c, members) in sccs.iter().enumerate() {
        for &m in members {
            owner[m] = c;
        }
    }
    let bottom = sccs
        .iter()
        .enumerate()
        .find(|(c, members)| members.iter().all(|&s| graph.outgoing(s).all(|e| owner[e.dst] == *c)))
        .map(|(_, members)| members)
        .expect("a finite graph with several components has a bottom component");
    Err(Error::Reducible { component: bottom.iter().map(|&s| graph.state(s).to_string()).collect() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteadyState {
    pub probabilities: Vec<Rational>,
}

impl SteadyState {
    pub fn to_strings(&self) -> Vec<String> {
        self.probabilities.iter().map(to_fraction_string).collect()
    }
}

/// Exact stationary distribution of an irreducible complete chain.
///
/// Solves `pi Q = 0` with the last balance equation replaced by the
/// normalisation `sum(pi) = 1`, using fraction-free elimination.
pub fn steady_state(gen: &Generator, graph: &DerivationGraph) -> Result<SteadyState> {
    require_irreducible(graph)?;
    let n = gen.len();
    // rows of the transposed generator, each scaled to integers; column n holds the right-hand side
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<Rational> = if i + 1 == n {
            vec![Rational::one(); n + 1]
        } else {
            let mut r: Vec<Rational> = (0..n).map(|j| gen.entry(j, i).clone()).collect();
            r.push(Rational::zero());
            r
        };
        let lcm = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        m.push(
            row.iter_mut()
                .map(|v| (v.clone() * Rational::from_integer(lcm.clone())).to_integer())
                .collect(),
        );
    }

    let mut previous = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&r| !m[r][k].is_zero()).ok_or(Error::Singular)?;
        m.swap(k, pivot);
        for i in k + 1..n {
            for j in k + 1..=n {
                let value = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &previous;
                m[i][j] = value;
            }
            m[i][k] = BigInt::zero();
        }
        previous = m[k][k].clone();
    }

    let mut x = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rational::from_integer(m[i][n].clone());
        for j in i + 1..n {
            acc -= Rational::from_integer(m[i][j].clone()) * &x[j];
        }
        x[i] = acc / Rational::from_integer(m[i][i].clone());
    }
    Ok(SteadyState { probabilities: x })
}

/// Residual tolerance accepted by [`steady_state_float`].
pub const FLOAT_RESIDUAL_TOLERANCE: f64 = 1e-12;

/// Floating-point stationary distribution for large chains, using partial
/// pivoting. Fails with [`Error::Singular`] if the residual of `pi Q`
/// exceeds [`FLOAT_RESIDUAL_TOLERANCE`] relative to the largest rate.
pub fn steady_state_float(gen: &Generator, graph: &DerivationGraph) -> Result<Vec<f64>> {
    require_irreducible(graph)?;
    let n = gen.len();
    let q: Vec<Vec<f64>> = gen
        .rows()
        .iter()
        .map(|row| row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if i + 1 == n {
                vec![1.0; n + 1]
            } else {
                let mut r: Vec<f64> = (0..n).map(|j| q[j][i]).collect();
                r.push(0.0);
                r
            }
        })
        .collect();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))
            .ok_or(Error::Singular)?;
        if m[pivot][k] == 0.0 {
            return Err(Error::Singular);
        }
        m.swap(k, pivot);
        let (upper, lower) = m.split_at_mut(k + 1);
        let pivot_row = &upper[k];
        for row in lower.iter_mut() {
            let factor = row[k] / pivot_row[k];
            for (cell, p) in row[k..].iter_mut().zip(&pivot_row[k..]) {
                *cell -= factor * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for j in i + 1..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    let scale = q.iter().flatten().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for j in 0..n {
        let residual: f64 = x.iter().zip(&q).map(|(xi, row)| xi * row[j]).sum();
        if residual.abs() > FLOAT_RESIDUAL_TOLERANCE * scale {
            return Err(Error::Singular);
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CtmcJson {
    pub states: Vec<String>,
    pub generator: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<Vec<String>>,
}

impl CtmcJson {
    pub fn new(graph: &DerivationGraph, gen: &Generator, steady: Option<&SteadyState>) -> CtmcJson {
        CtmcJson {
            states: graph.states().iter().map(|s| s.to_string()).collect(),
            generator: gen.to_strings(),
            steady_state: steady.map(SteadyState::to_strings),
        }
    }
}
