//! Rate-based equivalences over PEPA components.
//!
//! Four kinds are supported:
//!
//! * **exact**: per action, equal total outgoing rate and equal incoming rate
//!   from every class;
//! * **weak-exact**: as exact for visible actions; for `tau`, equal incoming
//!   rate from every other class, and equal "incoming from own class minus
//!   outgoing" for the shared class;
//! * **weak-exact up to H**: weak-exact with every action in `H` treated like
//!   `tau`, each action separately;
//! * **lumpable**: equal outgoing rate into every class, with `tau` moves
//!   inside the own class exempt.
//!
//! [`coarsest`] computes the largest relation of a kind by signature
//! refinement from a single block. [`check_partition`] evaluates the defining
//! clauses directly and reports the first violation; it is the certificate
//! check for every result.

mod analysis;
mod partition;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ActionSet, ModelEnv, Term};
use crate::rate::{to_fraction_string, Rational};
use crate::semantics::{derive_term, DeriveOptions};

pub use analysis::{AnalysisGraph, Origin, StateInfo};
pub use partition::{Partition, UnionFind};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EquivalenceKind {
    Exact,
    WeakExact,
    Lumpable,
    WeakExactUpToH(ActionSet),
}

impl EquivalenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            EquivalenceKind::Exact => "exact",
            EquivalenceKind::WeakExact => "weak-exact",
            EquivalenceKind::Lumpable => "lumpable",
            EquivalenceKind::WeakExactUpToH(_) => "weak-exact-up-to-h",
        }
    }

    /// Per action index of `graph`: whether the action gets the relaxed
    /// (tau-like) clauses.
    fn weak_actions(&self, graph: &AnalysisGraph) -> Vec<bool> {
        graph
            .actions()
            .iter()
            .map(|a| match self {
                EquivalenceKind::Exact => false,
                EquivalenceKind::WeakExact | EquivalenceKind::Lumpable => a.is_tau(),
                EquivalenceKind::WeakExactUpToH(high) => a.is_tau() || high.contains(a),
            })
            .collect()
    }
}

impl fmt::Display for EquivalenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which defining clause a rate sum belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// `q[P, a] = q[Q, a]`
    Outgoing,
    /// `q[S, P, a] = q[S, Q, a]`
    Incoming,
    /// `q[S, P, a] - q[P, a] = q[S, Q, a] - q[Q, a]` for the class `S` of `P` and `Q`
    OwnBlock,
    /// `q[P, S, a] = q[Q, S, a]`
    OutgoingToBlock,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Outgoing => "q[P,a] = q[Q,a]",
            Clause::Incoming => "q[S,P,a] = q[S,Q,a]",
            Clause::OwnBlock => "q[S,P,a] - q[P,a] = q[S,Q,a] - q[Q,a]",
            Clause::OutgoingToBlock => "q[P,S,a] = q[Q,S,a]",
        })
    }
}

/// Clause key: action index, clause, class id (0 for `Outgoing`).
type Key = (usize, Clause, usize);
type Signature = Vec<(Key, BigInt)>;

struct Evaluator<'g> {
    graph: &'g AnalysisGraph,
    weak: Vec<bool>,
    lumpable: bool,
}

impl<'g> Evaluator<'g> {
    fn new(graph: &'g AnalysisGraph, kind: &EquivalenceKind) -> Evaluator<'g> {
        Evaluator { graph, weak: kind.weak_actions(graph), lumpable: *kind == EquivalenceKind::Lumpable }
    }

    /// Every rate sum the kind's clauses compare for `state`, against the
    /// classes of `classes`. Zero entries are omitted.
    fn signature(&self, classes: &Partition, state: usize) -> Signature {
        let own = classes.block_of(state);
        let mut sums: BTreeMap<Key, BigInt> = BTreeMap::new();
        if self.lumpable {
            for arc in &self.graph.out_arcs[state] {
                let target = classes.block_of(arc.other);
                if self.weak[arc.action] && target == own {
                    continue;
                }
                *sums.entry((arc.action, Clause::OutgoingToBlock, target)).or_default() += &arc.weight;
            }
        } else {
            for arc in &self.graph.out_arcs[state] {
                let (clause, class) = if self.weak[arc.action] { (Clause::OwnBlock, own) } else { (Clause::Outgoing, 0) };
                *sums.entry((arc.action, clause, class)).or_default() -= &arc.weight;
            }
            for arc in &self.graph.in_arcs[state] {
                let source = classes.block_of(arc.other);
                let clause = if self.weak[arc.action] && source == own { Clause::OwnBlock } else { Clause::Incoming };
                *sums.entry((arc.action, clause, source)).or_default() += &arc.weight;
            }
            // outgoing totals were accumulated negated so the own-block entry is in - out
            for ((_, clause, _), value) in sums.iter_mut() {
                if *clause == Clause::Outgoing {
                    *value = -std::mem::take(value);
                }
            }
        }
        sums.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    fn violation(
        &self,
        classes: &Partition,
        left: usize,
        right: usize,
        sig_left: &Signature,
        sig_right: &Signature,
    ) -> Option<Violation> {
        let zero = BigInt::zero();
        let lookup = |sig: &Signature, key: &Key| -> BigInt {
            sig.binary_search_by(|(k, _)| k.cmp(key)).map(|i| sig[i].1.clone()).unwrap_or_else(|_| zero.clone())
        };
        let mut keys: Vec<&Key> = sig_left.iter().chain(sig_right.iter()).map(|(k, _)| k).collect();
        keys.sort();
        keys.dedup();
        let key = keys.into_iter().find(|k| lookup(sig_left, k) != lookup(sig_right, k))?;
        let (action, clause, class) = *key;
        Some(Violation {
            left,
            right,
            action: self.graph.action(action).to_string(),
            clause,
            class: (clause != Clause::Outgoing).then(|| classes.block(class).to_vec()),
            left_rate: self.graph.unscale(&lookup(sig_left, key)),
            right_rate: self.graph.unscale(&lookup(sig_right, key)),
        })
    }
}

/// A failed clause for a pair of related states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub left: usize,
    pub right: usize,
    pub action: String,
    pub clause: Clause,
    /// Members of the class `S` the clause ranges over, when it has one.
    pub class: Option<Vec<usize>>,
    pub left_rate: Rational,
    pub right_rate: Rational,
}

impl Violation {
    pub fn to_json(&self, graph: &AnalysisGraph) -> ViolationJson {
        ViolationJson {
            state: graph.state(self.left).label.clone(),
            other_state: graph.state(self.right).label.clone(),
            action: self.action.clone(),
            clause: self.clause,
            class: self.class.as_ref().map(|c| c.iter().map(|&s| graph.state(s).label.clone()).collect()),
            left_rate: to_fraction_string(&self.left_rate),
            right_rate: to_fraction_string(&self.right_rate),
        }
    }

    /// One-line human description.
    pub fn describe(&self, graph: &AnalysisGraph) -> String {
        let class = match &self.class {
            Some(members) => format!(
                " with S = {{{}}}",
                members.iter().map(|&s| graph.state(s).label.as_str()).collect::<Vec<_>>().join(", ")
            ),
            None => String::new(),
        };
        format!(
            "{} fails for P = {}, Q = {}, a = {}{}: {} vs {}",
            self.clause,
            graph.state(self.left).label,
            graph.state(self.right).label,
            self.action,
            class,
            self.left_rate,
            self.right_rate
        )
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationJson {
    pub state: String,
    pub other_state: String,
    pub action: String,
    pub clause: Clause,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<Vec<String>>,
    pub left_rate: String,
    pub right_rate: String,
}

fn check_size(graph: &AnalysisGraph, partition: &Partition) -> Result<()> {
    if partition.num_states() == graph.len() {
        Ok(())
    } else {
        Err(Error::InvalidPartition(format!(
            "partition covers {} states, graph has {}",
            partition.num_states(),
            graph.len()
        )))
    }
}

/// Check the kind's clauses for every pair related by `pairs`, with the
/// classes `S` taken from `classes`. Returns the first violation: least
/// block, then least partner of the block's least member, then action name,
/// then clause and class.
pub fn check_clauses(
    graph: &AnalysisGraph,
    kind: &EquivalenceKind,
    pairs: &Partition,
    classes: &Partition,
) -> Result<Option<Violation>> {
    check_size(graph, pairs)?;
    check_size(graph, classes)?;
    if !pairs.refines(classes) {
        return Err(Error::InvalidPartition("related pairs are not inside the classes".into()));
    }
    let eval = Evaluator::new(graph, kind);
    for block in pairs.blocks() {
        let rep = block[0];
        let mut sig_rep = None;
        for &other in &block[1..] {
            let sig_rep = sig_rep.get_or_insert_with(|| eval.signature(classes, rep));
            let sig_other = eval.signature(classes, other);
            if *sig_rep != sig_other {
                return Ok(eval.violation(classes, rep, other, sig_rep, &sig_other));
            }
        }
    }
    Ok(None)
}

/// Check whether `partition` is an equivalence of the given kind.
pub fn check_partition(graph: &AnalysisGraph, partition: &Partition, kind: &EquivalenceKind) -> Result<Option<Violation>> {
    check_clauses(graph, kind, partition, partition)
}

/// Successive partitions of signature refinement, from `initial` to the
/// fixpoint (both included).
pub fn refinement_rounds(graph: &AnalysisGraph, kind: &EquivalenceKind, initial: &Partition) -> Result<Vec<Partition>> {
    check_size(graph, initial)?;
    let eval = Evaluator::new(graph, kind);
    let mut rounds = vec![initial.clone()];
    loop {
        let current = rounds.last().expect("non-empty");
        let labels: Vec<(usize, Signature)> =
            (0..graph.len()).map(|s| (current.block_of(s), eval.signature(current, s))).collect();
        let next = Partition::from_labels(&labels);
        if next.num_blocks() == current.num_blocks() {
            break;
        }
        rounds.push(next);
    }
    Ok(rounds)
}

/// Largest equivalence of the given kind that refines `initial`.
pub fn coarsest_from(graph: &AnalysisGraph, kind: &EquivalenceKind, initial: &Partition) -> Result<Partition> {
    let result = refinement_rounds(graph, kind, initial)?.pop().expect("non-empty");
    debug_assert!(check_partition(graph, &result, kind)?.is_none(), "refinement fixpoint violates {kind}");
    Ok(result)
}

/// Largest equivalence of the given kind over the graph's states.
pub fn coarsest(graph: &AnalysisGraph, kind: &EquivalenceKind) -> Result<Partition> {
    coarsest_from(graph, kind, &Partition::single_block(graph.len()))
}

/// Outcome of comparing two components.
#[derive(Clone, Debug)]
pub struct EquivalenceVerdict {
    pub related: bool,
    pub kind: EquivalenceKind,
    pub graph: AnalysisGraph,
    pub certificate: Partition,
    /// For unrelated components: the clause that first separated them.
    pub witness: Option<Violation>,
}

impl EquivalenceVerdict {
    pub fn certificate_json(&self) -> CertificateJson {
        certificate_json(&self.graph, &self.certificate)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateJson {
    pub blocks: Vec<Vec<CertificateState>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateState {
    pub term: String,
    pub origin: Origin,
}

pub fn certificate_json(graph: &AnalysisGraph, partition: &Partition) -> CertificateJson {
    CertificateJson {
        blocks: partition
            .blocks()
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|&s| CertificateState { term: graph.state(s).label.clone(), origin: graph.state(s).origin })
                    .collect()
            })
            .collect(),
    }
}

/// Decide whether two components are related by the largest equivalence of
/// the given kind over their joint state space.
pub fn equivalent(
    env_left: &ModelEnv,
    left: &Term,
    env_right: &ModelEnv,
    right: &Term,
    kind: &EquivalenceKind,
) -> Result<EquivalenceVerdict> {
    let options = DeriveOptions::default();
    let graph_left = derive_term(env_left, left, &options)?;
    let graph_right = derive_term(env_right, right, &options)?;
    let graph = AnalysisGraph::union(&graph_left, &graph_right)?;
    let (root_left, root_right) = (graph.roots()[0], graph.roots()[1]);

    let rounds = refinement_rounds(&graph, kind, &Partition::single_block(graph.len()))?;
    let certificate = rounds.last().expect("non-empty").clone();
    debug_assert!(check_partition(&graph, &certificate, kind)?.is_none());
    let related = certificate.same_block(root_left, root_right);

    let witness = if related {
        None
    } else {
        let eval = Evaluator::new(&graph, kind);
        rounds
            .windows(2)
            .find(|w| w[0].same_block(root_left, root_right) && !w[1].same_block(root_left, root_right))
            .and_then(|w| {
                let sig_left = eval.signature(&w[0], root_left);
                let sig_right = eval.signature(&w[0], root_right);
                eval.violation(&w[0], root_left, root_right, &sig_left, &sig_right)
            })
    };
    Ok(EquivalenceVerdict { related, kind: kind.clone(), graph, certificate, witness })
}

/// Whether `relation` is a weak-exact equivalence up to the weak-exact
/// equivalence `base`: its pairs satisfy the weak-exact clauses with classes
/// taken from the join of `relation` and `base`.
pub fn is_up_to_we(graph: &AnalysisGraph, relation: &Partition, base: &Partition) -> Result<bool> {
    check_size(graph, relation)?;
    check_size(graph, base)?;
    if check_partition(graph, base, &EquivalenceKind::WeakExact)?.is_some() {
        return Err(Error::InvalidPartition("base is not a weak-exact equivalence".into()));
    }
    let join = relation.join(base);
    Ok(check_clauses(graph, &EquivalenceKind::WeakExact, relation, &join)?.is_none())
}

/// Pairs of distinct states in the same block, in index order.
pub fn related_pairs(partition: &Partition) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for block in partition.blocks() {
        for (i, &a) in block.iter().enumerate() {
            for &b in &block[i + 1..] {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Group states by the block they end up in, as a map from state to block
/// id. Useful for comparing partitions over differently ordered graphs.
pub fn block_map(partition: &Partition) -> HashMap<usize, usize> {
    (0..partition.num_states()).map(|s| (s, partition.block_of(s))).collect()
}
