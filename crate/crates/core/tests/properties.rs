//! Property tests over randomly generated models.

use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use epsni::ctmc::{generator, is_irreducible, steady_state, steady_state_float};
use epsni::equivalence::{
    check_partition, coarsest, equivalent, is_up_to_we, refinement_rounds, AnalysisGraph, EquivalenceKind, Partition,
};
use epsni::oracle::{largest_by_enumeration, random_model, GeneratorParams};
use epsni::parser::{parse_model, render};
use epsni::security::{check_epsni, check_unwinding};
use epsni::semantics::derive;
use epsni::{ModelEnv, Rational};

fn model(seed: u64, max: usize, compose: bool) -> ModelEnv {
    let mut params = GeneratorParams::new(seed, max);
    params.compose = compose;
    random_model(&params).expect("generator succeeds")
}

fn kinds(env: &ModelEnv) -> Vec<EquivalenceKind> {
    vec![
        EquivalenceKind::Exact,
        EquivalenceKind::WeakExact,
        EquivalenceKind::Lumpable,
        EquivalenceKind::WeakExactUpToH(env.high.clone()),
    ]
}

fn partition_from(labels: &[u8]) -> Partition {
    Partition::from_labels(labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>(), compose in any::<bool>()) {
        let env = model(seed, 10, compose);
        let text = render(&env);
        prop_assert_eq!(parse_model(&text).unwrap(), env, "{}", text);
    }

    #[test]
    fn generation_and_derivation_are_deterministic(seed in any::<u64>()) {
        let first = model(seed, 12, true);
        prop_assert_eq!(&first, &model(seed, 12, true));
        let graph = derive(&first).unwrap();
        prop_assert_eq!(graph.state(0), &first.root);
        prop_assert_eq!(graph, derive(&first).unwrap());
    }

    #[test]
    fn refinement_matches_enumeration(seed in any::<u64>(), compose in any::<bool>()) {
        let env = model(seed, 7, compose);
        let graph = AnalysisGraph::single(&derive(&env).unwrap()).unwrap();
        for kind in kinds(&env) {
            let refined = coarsest(&graph, &kind).unwrap();
            prop_assert!(check_partition(&graph, &refined, &kind).unwrap().is_none());
            prop_assert_eq!(&refined, &largest_by_enumeration(&graph, &kind).unwrap(), "{}", kind);
        }
    }

    #[test]
    fn refinement_rounds_only_split(seed in any::<u64>()) {
        let env = model(seed, 16, true);
        let graph = AnalysisGraph::single(&derive(&env).unwrap()).unwrap();
        for kind in kinds(&env) {
            let rounds = refinement_rounds(&graph, &kind, &Partition::single_block(graph.len())).unwrap();
            for pair in rounds.windows(2) {
                prop_assert!(pair[1].refines(&pair[0]));
            }
        }
    }

    #[test]
    fn equivalent_is_reflexive_and_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let (left, right) = (model(a, 6, false), model(b, 6, false));
        let left = left.merged_with(&rename_defs(&right, "R")).unwrap();
        let right_root = rename_root(&right, "R");
        for kind in kinds(&left) {
            prop_assert!(equivalent(&left, &left.root, &left, &left.root, &kind).unwrap().related);
            let forward = equivalent(&left, &left.root, &left, &right_root, &kind).unwrap().related;
            let backward = equivalent(&left, &right_root, &left, &left.root, &kind).unwrap().related;
            prop_assert_eq!(forward, backward);
        }
    }

    #[test]
    fn weak_exact_is_closed_up_to_itself(seed in any::<u64>()) {
        let env = model(seed, 12, true);
        let graph = AnalysisGraph::single(&derive(&env).unwrap()).unwrap();
        let base = coarsest(&graph, &EquivalenceKind::WeakExact).unwrap();
        prop_assert!(is_up_to_we(&graph, &base, &base).unwrap());
        prop_assert!(is_up_to_we(&graph, &Partition::discrete(graph.len()), &base).unwrap());
    }

    #[test]
    fn exact_steady_state_solves_balance(seed in any::<u64>()) {
        let mut params = GeneratorParams::new(seed, 14);
        params.compose = true;
        params.strongly_connected = true;
        let env = random_model(&params).unwrap();
        let graph = derive(&env).unwrap();
        prop_assert!(is_irreducible(&graph));
        let q = generator(&graph).unwrap();
        for row in q.rows() {
            prop_assert!(row.iter().cloned().sum::<Rational>().is_zero());
        }
        let pi = steady_state(&q, &graph).unwrap().probabilities;
        prop_assert_eq!(pi.iter().cloned().sum::<Rational>(), Rational::from_integer(1.into()));
        prop_assert!(pi.iter().all(|p| *p > Rational::zero()));
        for j in 0..q.len() {
            let flow: Rational = (0..q.len()).map(|i| &pi[i] * q.entry(i, j)).sum();
            prop_assert!(flow.is_zero());
        }
        let approx = steady_state_float(&q, &graph).unwrap();
        for (exact, float) in pi.iter().zip(&approx) {
            prop_assert!((exact.to_f64().unwrap() - float).abs() < 1e-10);
        }
    }

    #[test]
    fn models_without_high_actions_are_secure(seed in any::<u64>()) {
        let mut params = GeneratorParams::new(seed, 10).with_pool(&["l", "m", "tau"]);
        params.compose = true;
        let env = random_model(&params).unwrap();
        prop_assert!(check_epsni(&env).unwrap().secure);
    }

    #[test]
    fn secure_models_pass_unwinding(seed in any::<u64>()) {
        let mut params = GeneratorParams::new(seed, 8);
        params.high_self_loops_only = seed % 2 == 0;
        let env = random_model(&params).unwrap();
        if check_epsni(&env).unwrap().secure {
            prop_assert!(check_unwinding(&env).unwrap().passed);
        }
    }

    #[test]
    fn join_is_the_least_common_coarsening(a in prop::collection::vec(0u8..3, 1..9), seed in any::<u64>()) {
        let b: Vec<u8> = a.iter().enumerate().map(|(i, _)| ((seed >> (i % 64)) & 1) as u8).collect();
        let (p, q) = (partition_from(&a), partition_from(&b));
        let join = p.join(&q);
        prop_assert!(p.refines(&join) && q.refines(&join));
        prop_assert_eq!(join.join(&p), join.clone());
        prop_assert!(Partition::discrete(a.len()).refines(&p));
        prop_assert!(p.refines(&Partition::single_block(a.len())));
    }
}

fn rename_defs(env: &ModelEnv, prefix: &str) -> std::collections::BTreeMap<String, epsni::Term> {
    let text = render(env);
    let renamed = parse_model(&rename_constants(&text, env, prefix)).unwrap();
    renamed.defs
}

fn rename_root(env: &ModelEnv, prefix: &str) -> epsni::Term {
    let text = render(env);
    parse_model(&rename_constants(&text, env, prefix)).unwrap().root
}

/// Prefix every constant name so two generated models can share one
/// environment.
fn rename_constants(text: &str, env: &ModelEnv, prefix: &str) -> String {
    let mut out = String::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if env.defs.contains_key(word.as_str()) {
            out.push_str(prefix);
        }
        out.push_str(word);
        word.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}
