//! Brute-force reference computations and seeded random models.
//!
//! Nothing here is meant for real inputs. [`largest_by_enumeration`] walks
//! every set partition of a small state space; [`random_model`] and
//! [`random_high_environment`] feed the property suites.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctmc::is_irreducible;
use crate::equivalence::{check_partition, equivalent, AnalysisGraph, EquivalenceKind, Partition, UnionFind};
use crate::error::{Error, Result};
use crate::model::{validate, Action, ActionSet, ModelEnv, Term};
use crate::rate::{int, Rate, Rational};
use crate::semantics::{derive_term, is_complete, DeriveOptions};

/// Hard limit for [`largest_by_enumeration`]; Bell(10) = 115975.
pub const ENUMERATION_LIMIT: usize = 10;

/// Largest state budget [`random_model`] accepts.
pub const MAX_GENERATED_STATES: usize = 64;

const MAX_ATTEMPTS: usize = 2000;

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub largest: Partition,
    /// Partitions visited; equals the Bell number of the state count.
    pub visited: u64,
    /// Partitions that passed the clause check.
    pub kept: u64,
}

/// Union of every equivalence of the given kind, found by trying all set
/// partitions, then closed transitively. Fails if the closure is not itself
/// an equivalence of that kind.
pub fn largest_by_enumeration(graph: &AnalysisGraph, kind: &EquivalenceKind) -> Result<Partition> {
    Ok(enumerate_equivalences(graph, kind)?.largest)
}

pub fn enumerate_equivalences(graph: &AnalysisGraph, kind: &EquivalenceKind) -> Result<Enumeration> {
    let n = graph.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard { states: n, limit: ENUMERATION_LIMIT });
    }
    let mut union = UnionFind::new(n);
    let (mut visited, mut kept) = (0u64, 0u64);
    for_each_set_partition(n, |labels| {
        visited += 1;
        let candidate = Partition::from_labels(labels);
        if check_partition(graph, &candidate, kind)?.is_none() {
            kept += 1;
            for block in candidate.blocks() {
                for &s in &block[1..] {
                    union.union(block[0], s);
                }
            }
        }
        Ok(())
    })?;
    let largest = union.into_partition();
    if check_partition(graph, &largest, kind)?.is_some() {
        return Err(Error::UnionNotClosed { kind: kind.to_string() });
    }
    Ok(Enumeration { largest, visited, kept })
}

/// Visit every set partition of `0..n` as a restricted growth string.
fn for_each_set_partition(n: usize, mut visit: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if n == 0 {
        return visit(&[]);
    }
    let mut labels = vec![0usize; n];
    // max_prefix[i] = max(labels[0..i])
    let mut max_prefix = vec![0usize; n];
    loop {
        visit(&labels)?;
        // rightmost position that can still grow
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(());
            }
            if labels[i] <= max_prefix[i] {
                break;
            }
            i -= 1;
        }
        labels[i] += 1;
        for j in i + 1..n {
            labels[j] = 0;
            max_prefix[j] = max_prefix[j - 1].max(labels[j - 1]);
        }
    }
}

/// Bell number, for sanity checks on small `n`.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().expect("non-empty")];
        for value in &row {
            let last = *next.last().expect("non-empty");
            next.push(last + value);
        }
        row = next;
    }
    row[0]
}

/// Knobs for [`random_model`].
#[derive(Clone, Debug)]
pub struct GeneratorParams {
    pub seed: u64,
    pub max_states: usize,
    pub action_pool: Vec<Action>,
    pub rate_choices: Vec<Rational>,
    pub include_passive: bool,
    /// High set declared on the generated model.
    pub high: ActionSet,
    /// Allow a cooperation (and possibly hiding) of two sequential parts at
    /// the root.
    pub compose: bool,
    /// Only keep models whose chain is irreducible.
    pub strongly_connected: bool,
    /// High activities only ever loop back to the state they leave.
    pub high_self_loops_only: bool,
    /// Compositions put two copies of the same component side by side,
    /// which produces many equivalent states.
    pub symmetric: bool,
}

impl GeneratorParams {
    /// Pool `{l, m, tau, h}` with high `{h}`, rates `{1, 2}`.
    pub fn new(seed: u64, max_states: usize) -> GeneratorParams {
        GeneratorParams {
            seed,
            max_states,
            action_pool: ["l", "m", "tau", "h"].into_iter().map(Action::new).collect(),
            rate_choices: vec![int(1), int(2)],
            include_passive: false,
            high: [Action::new("h")].into_iter().collect(),
            compose: false,
            strongly_connected: false,
            high_self_loops_only: false,
            symmetric: false,
        }
    }

    pub fn with_pool(mut self, names: &[&str]) -> GeneratorParams {
        self.action_pool = names.iter().map(|&n| Action::new(n)).collect();
        self
    }

    fn check(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::GeneratorParams(msg.into()));
        if self.max_states == 0 || self.max_states > MAX_GENERATED_STATES {
            return fail(&format!("maxStates must be between 1 and {MAX_GENERATED_STATES}"));
        }
        if self.action_pool.is_empty() {
            return fail("action pool is empty");
        }
        if self.rate_choices.is_empty() || self.rate_choices.iter().any(|r| *r <= int(0)) {
            return fail("rate choices must be positive and non-empty");
        }
        if self.high.iter().any(Action::is_tau) {
            return fail("tau cannot be high");
        }
        Ok(())
    }
}

struct Builder<'p> {
    params: &'p GeneratorParams,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn rate(&mut self) -> Rational {
        self.params.rate_choices.choose(&mut self.rng).expect("non-empty").clone()
    }

    /// A sequential component with constants `{prefix}0..{prefix}{n-1}`.
    fn sequential(&mut self, prefix: &str, size: usize, defs: &mut BTreeMap<String, Term>) {
        let pool = self.params.action_pool.clone();
        let passive: ActionSet = if self.params.include_passive {
            pool.iter().filter(|a| !a.is_tau() && self.rng.gen_bool(0.3)).cloned().collect()
        } else {
            ActionSet::new()
        };
        let name = |i: usize| format!("{prefix}{i}");
        for i in 0..size {
            let branches = self.rng.gen_range(1..=3);
            let mut body: Option<Term> = None;
            for b in 0..branches {
                let action = pool.choose(&mut self.rng).expect("non-empty").clone();
                let high = self.params.high.contains(&action);
                let target = if high && self.params.high_self_loops_only {
                    i
                } else if b == 0 && self.params.strongly_connected {
                    (i + 1) % size
                } else {
                    self.rng.gen_range(0..size)
                };
                let rate = if passive.contains(&action) { Rate::passive() } else { Rate::active(self.rate()) };
                let prefix = Term::prefix(action, rate, Term::constant(name(target)));
                body = Some(match body {
                    None => prefix,
                    Some(rest) => Term::choice(rest, prefix),
                });
            }
            defs.insert(name(i), body.expect("at least one branch"));
        }
    }

    fn attempt(&mut self) -> ModelEnv {
        let max = self.params.max_states;
        let mut defs = BTreeMap::new();
        let compose = self.params.compose && max >= 4 && self.rng.gen_bool(0.5);
        let root = if compose {
            let left = self.rng.gen_range(1..=(max / 2).clamp(1, 6));
            self.sequential("A", left, &mut defs);
            if self.params.symmetric && left * left <= max {
                let copies: Vec<(String, Term)> =
                    defs.iter().map(|(name, body)| (name.replacen('A', "B", 1), rename(body, "A", "B"))).collect();
                defs.extend(copies);
            } else {
                let right = self.rng.gen_range(1..=(max / left).clamp(1, 6));
                self.sequential("B", right, &mut defs);
            }
            let visible: Vec<Action> = self.params.action_pool.iter().filter(|a| !a.is_tau()).cloned().collect();
            let coop: ActionSet = visible.iter().filter(|_| self.rng.gen_bool(0.4)).cloned().collect();
            let mut root = Term::coop(Term::constant("A0"), coop, Term::constant("B0"));
            if self.rng.gen_bool(0.3) {
                let hidden: ActionSet = visible.iter().filter(|_| self.rng.gen_bool(0.3)).cloned().collect();
                root = Term::hide(root, hidden);
            }
            root
        } else {
            let size = self.rng.gen_range(1..=max.min(12));
            self.sequential("S", size, &mut defs);
            Term::constant("S0")
        };
        ModelEnv::new(defs, root, self.params.high.clone())
    }

    fn acceptable(&self, env: &ModelEnv) -> bool {
        if !validate(env).is_empty() {
            return false;
        }
        let options = DeriveOptions { max_states: self.params.max_states };
        let Ok(graph) = derive_term(env, &env.root, &options) else { return false };
        if !self.params.include_passive && !is_complete(&graph).complete {
            return false;
        }
        !self.params.strongly_connected || is_irreducible(&graph)
    }
}

/// Replace the leading `from` of every constant name with `to`.
fn rename(term: &Term, from: &str, to: &str) -> Term {
    match term {
        Term::Nil => Term::Nil,
        Term::Const(name) => match name.strip_prefix(from) {
            Some(rest) => Term::constant(format!("{to}{rest}")),
            None => term.clone(),
        },
        Term::Prefix(activity, body) => {
            Term::prefix(activity.action.clone(), activity.rate.clone(), rename(body, from, to))
        }
        Term::Choice(l, r) => Term::choice(rename(l, from, to), rename(r, from, to)),
        Term::Hide(body, set) => Term::hide(rename(body, from, to), set.clone()),
        Term::Coop(l, set, r) => Term::coop(rename(l, from, to), set.clone(), rename(r, from, to)),
    }
}

/// A random model; the same parameters always give the same model.
pub fn random_model(params: &GeneratorParams) -> Result<ModelEnv> {
    params.check()?;
    let mut builder = Builder { params, rng: ChaCha8Rng::seed_from_u64(params.seed) };
    for _ in 0..MAX_ATTEMPTS {
        let env = builder.attempt();
        if builder.acceptable(&env) {
            return Ok(env);
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_ATTEMPTS })
}

/// A high component of at most `max_states` sequential states using only
/// `high` actions, named `{name}0..`. Per action the rates are either all
/// passive or all active.
pub fn random_high_environment(
    rng: &mut impl Rng,
    name: &str,
    high: &ActionSet,
    max_states: usize,
    rate_choices: &[Rational],
) -> (BTreeMap<String, Term>, Term) {
    let actions: Vec<Action> = high.iter().cloned().collect();
    let mut defs = BTreeMap::new();
    if actions.is_empty() || max_states == 0 {
        return (defs, Term::Nil);
    }
    let passive: ActionSet = actions.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    let size = rng.gen_range(1..=max_states);
    for i in 0..size {
        let mut body: Option<Term> = None;
        for _ in 0..rng.gen_range(1..=2) {
            let action = actions.choose(rng).expect("non-empty").clone();
            let rate = if passive.contains(&action) {
                Rate::passive()
            } else {
                Rate::active(rate_choices.choose(rng).cloned().unwrap_or_else(|| int(1)))
            };
            let prefix = Term::prefix(action, rate, Term::constant(format!("{name}{}", rng.gen_range(0..size))));
            body = Some(match body {
                None => prefix,
                Some(rest) => Term::choice(rest, prefix),
            });
        }
        defs.insert(format!("{name}{i}"), body.expect("at least one branch"));
    }
    (defs, Term::constant(format!("{name}0")))
}

/// A pair `P ≈we Q` whose prefixed forms `(a, r).P` and `(a, r).Q` are not
/// related, found by random search.
#[derive(Clone, Debug)]
pub struct PrefixCounterexample {
    pub env: ModelEnv,
    pub left: Term,
    pub right: Term,
    pub action: Action,
    pub rate: Rational,
}

/// Search random small models for a [`PrefixCounterexample`]. Each candidate
/// is confirmed against [`largest_by_enumeration`] on the union graph.
pub fn search_prefix_counterexample(seed: u64, budget: usize) -> Result<Option<PrefixCounterexample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = DeriveOptions { max_states: 5 };
    for _ in 0..budget {
        let mut params = GeneratorParams::new(rng.gen(), 5).with_pool(&["a", "tau"]);
        params.high = ActionSet::new();
        let env = random_model(&params)?;
        let graph = derive_term(&env, &env.root, &options)?;
        for i in 0..graph.len() {
            for j in i + 1..graph.len() {
                let (p, q) = (graph.state(i), graph.state(j));
                if !equivalent(&env, p, &env, q, &EquivalenceKind::WeakExact)?.related {
                    continue;
                }
                for action in ["a", "tau"].map(Action::new) {
                    let rate = params.rate_choices.choose(&mut rng).expect("non-empty").clone();
                    let wrap = |t: &Term| Term::prefix(action.clone(), Rate::active(rate.clone()), t.clone());
                    let (lp, lq) = (wrap(p), wrap(q));
                    let verdict = equivalent(&env, &lp, &env, &lq, &EquivalenceKind::WeakExact)?;
                    if verdict.related {
                        continue;
                    }
                    let oracle = largest_by_enumeration(&verdict.graph, &EquivalenceKind::WeakExact)?;
                    let roots = verdict.graph.roots();
                    if !oracle.same_block(roots[0], roots[1]) {
                        return Ok(Some(PrefixCounterexample {
                            env,
                            left: p.clone(),
                            right: q.clone(),
                            action,
                            rate,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;
    use crate::semantics::derive;

    fn union(left: &str, right: &str) -> AnalysisGraph {
        let l = derive(&parse_model(left).unwrap()).unwrap();
        let r = derive(&parse_model(right).unwrap()).unwrap();
        AnalysisGraph::union(&l, &r).unwrap()
    }

    #[test]
    fn bell_numbers() {
        assert_eq!((0..=10).map(bell).collect::<Vec<_>>(), [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975]);
    }

    #[test]
    fn visits_every_partition_once() {
        for n in 0..=7 {
            let mut seen = std::collections::HashSet::new();
            for_each_set_partition(n, |labels| {
                assert!(seen.insert(labels.to_vec()));
                Ok(())
            })
            .unwrap();
            assert_eq!(seen.len() as u64, bell(n));
        }
    }

    #[test]
    fn enumeration_examples() {
        let g = union("X=(a,1).X; system X;", "Y=(a,1).Y; system Y;");
        let e = enumerate_equivalences(&g, &EquivalenceKind::WeakExact).unwrap();
        assert_eq!(e.largest, Partition::single_block(2));
        assert_eq!((e.visited, e.kept), (2, 2));

        let g = union("X=(a,1).X; system X;", "Y=(a,2).Y; system Y;");
        let e = enumerate_equivalences(&g, &EquivalenceKind::Exact).unwrap();
        assert_eq!(e.largest, Partition::discrete(2));
        // only the identity survives
        assert_eq!(e.kept, 1);
    }

    #[test]
    fn guard_is_enforced() {
        let text = "S0=(a,1).S1; S1=(a,1).S2; S2=(a,1).S3; S3=(a,1).S4; S4=(a,1).S5; S5=(a,1).S0; system S0;";
        let g = union(text, text);
        assert!(matches!(
            largest_by_enumeration(&g, &EquivalenceKind::Exact),
            Err(Error::EnumerationGuard { states: 12, limit: 10 })
        ));
    }

    #[test]
    fn generator_is_deterministic() {
        for seed in 0..20 {
            let mut p = GeneratorParams::new(seed, 8);
            p.compose = true;
            assert_eq!(random_model(&p).unwrap(), random_model(&p).unwrap());
        }
    }

    #[test]
    fn generator_respects_limits() {
        for seed in 0..30 {
            let p = GeneratorParams::new(seed, 1);
            let env = random_model(&p).unwrap();
            assert_eq!(derive(&env).unwrap().len(), 1);

            let mut p = GeneratorParams::new(seed, 12);
            p.compose = true;
            p.strongly_connected = seed % 2 == 0;
            let env = random_model(&p).unwrap();
            let g = derive(&env).unwrap();
            assert!(g.len() <= 12);
            assert!(is_complete(&g).complete);
            assert!(validate(&env).is_empty());
            if p.strongly_connected {
                assert!(is_irreducible(&g));
            }
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        assert!(random_model(&GeneratorParams::new(0, 0)).is_err());
        let mut p = GeneratorParams::new(0, 4);
        p.rate_choices = vec![int(0)];
        assert!(random_model(&p).is_err());
    }

    #[test]
    fn high_environments_use_only_high_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let high: ActionSet = ["h", "k"].into_iter().map(Action::new).collect();
        for i in 0..20 {
            let (defs, root) = random_high_environment(&mut rng, &format!("H{i}_"), &high, 4, &[int(1)]);
            let env = ModelEnv::new(defs, root, high.clone());
            assert!(validate(&env).is_empty(), "{:?}", validate(&env));
            let g = derive(&env).unwrap();
            assert!(g.len() <= 4);
            assert!(g.edges().iter().all(|e| high.contains(&e.action)));
        }
    }
}
