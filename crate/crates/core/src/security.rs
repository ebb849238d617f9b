//! Noninterference checks.
//!
//! The decision procedure is [`check_epsni`]: a model is secure iff its
//! high-restricted form `P \ H = (P <H> 0)/H` is weak-exact equivalent up to
//! `H` to `P` itself. The per-derivative definitional checks against a finite
//! battery of high environments ([`check_epsni_definition`],
//! [`check_psni_with`]) can only falsify, and [`check_unwinding`] is a
//! necessary-condition diagnostic.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::equivalence::{
    certificate_json, equivalent, AnalysisGraph, CertificateJson, EquivalenceKind, EquivalenceVerdict, Origin,
};
use crate::error::{Error, Result};
use crate::model::{Action, ActionSet, ModelEnv, Term};
use crate::parser::EnvironmentFile;
use crate::rate::{int, to_fraction_string, Rate};
use crate::semantics::{derive, derive_term, DeriveOptions};

/// `(term <set> 0)/set`: `term` with the actions of `set` blocked and hidden.
pub fn restrict(term: &Term, set: &ActionSet) -> Term {
    Term::hide(Term::coop(term.clone(), set.clone(), Term::Nil), set.clone())
}

/// `P \ H` for the model's high set.
pub fn restrict_high(env: &ModelEnv, term: &Term) -> Term {
    restrict(term, &env.high)
}

/// Whether every derivative of `term` enables only high actions.
pub fn is_high_component(env: &ModelEnv, term: &Term) -> Result<bool> {
    let graph = derive_term(env, term, &DeriveOptions::default())?;
    Ok(graph.edges().iter().all(|e| env.high.contains(&e.action)))
}

/// A high component together with the constants it needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HighEnvironment {
    pub defs: BTreeMap<String, Term>,
    pub term: Term,
}

impl HighEnvironment {
    pub fn new(defs: BTreeMap<String, Term>, term: Term) -> HighEnvironment {
        HighEnvironment { defs, term }
    }

    pub fn nil() -> HighEnvironment {
        HighEnvironment { defs: BTreeMap::new(), term: Term::Nil }
    }

    /// One environment per `system` declaration of the file.
    pub fn from_file(file: &EnvironmentFile) -> Vec<HighEnvironment> {
        file.members.iter().map(|t| HighEnvironment::new(file.defs.clone(), t.clone())).collect()
    }
}

/// `0`, plus a passive loop and an active rate-1 loop on each high action.
pub fn default_battery(high: &ActionSet) -> Vec<HighEnvironment> {
    let mut battery = vec![HighEnvironment::nil()];
    for action in high {
        for (tag, rate) in [("Passive", Rate::passive()), ("Active", Rate::active(int(1)))] {
            let name = format!("{tag}_{action}");
            let body = Term::prefix(action.clone(), rate, Term::constant(&name));
            battery.push(HighEnvironment::new(BTreeMap::from([(name.clone(), body)]), Term::constant(name)));
        }
    }
    battery
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Corollary,
    DefinitionBattery,
    Unwinding,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Corollary => "corollary",
            Method::DefinitionBattery => "definition-battery",
            Method::Unwinding => "unwinding",
        }
    }
}

/// Why a model was judged insecure.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Witness {
    pub state: String,
    pub other_state: String,
    pub action: String,
    pub clause: String,
    pub left_rate: String,
    pub right_rate: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<Vec<String>>,
    /// Derivative whose check failed (battery methods).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative: Option<String>,
    /// Battery member that exposed the leak.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<String>,
    /// High transition whose endpoints the certificate separates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub responsible: Option<HighEdge>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HighEdge {
    pub source: String,
    pub action: String,
    pub target: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SecurityVerdict {
    pub secure: bool,
    pub method: Method,
    /// Battery methods only: no check was actually run.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

fn witness_from(verdict: &EquivalenceVerdict) -> Option<Witness> {
    let violation = verdict.witness.as_ref()?;
    let json = violation.to_json(&verdict.graph);
    Some(Witness {
        state: json.state,
        other_state: json.other_state,
        action: json.action,
        clause: violation.clause.to_string(),
        left_rate: json.left_rate,
        right_rate: json.right_rate,
        class: json.class,
        derivative: None,
        environment: None,
        responsible: None,
        description: violation.describe(&verdict.graph),
    })
}

/// Decide membership of the model's system component.
pub fn check_epsni(env: &ModelEnv) -> Result<SecurityVerdict> {
    check_epsni_term(env, &env.root)
}

/// Decide membership of `term`: every derivative `P'` must satisfy
/// `P' \ H ≈H_we P'`. The witness names the first derivative, in
/// derivation order, that does not.
///
/// The relation constrains incoming rates only, so a root with no incoming
/// arcs can be related to its restriction even when a later derivative
/// leaks; checking the root alone is available as [`check_epsni_root`].
pub fn check_epsni_term(env: &ModelEnv, term: &Term) -> Result<SecurityVerdict> {
    let graph = derive_term(env, term, &DeriveOptions::default())?;
    let mut root_verdict = None;
    for derivative in graph.states() {
        let verdict = check_epsni_root(env, derivative)?;
        if !verdict.secure {
            let mut verdict = verdict;
            if let Some(w) = verdict.witness.as_mut() {
                w.derivative = Some(derivative.to_string());
            }
            return Ok(verdict);
        }
        root_verdict.get_or_insert(verdict);
    }
    Ok(root_verdict.expect("derivation graph has a root"))
}

/// `term \ H ≈H_we term`, for `term` alone.
pub fn check_epsni_root(env: &ModelEnv, term: &Term) -> Result<SecurityVerdict> {
    let kind = EquivalenceKind::WeakExactUpToH(env.high.clone());
    let verdict = equivalent(env, &restrict_high(env, term), env, term, &kind)?;
    let mut witness = witness_from(&verdict);
    if let Some(w) = witness.as_mut() {
        w.responsible = separated_high_edge(&verdict, &env.high);
    }
    Ok(SecurityVerdict {
        secure: verdict.related,
        method: Method::Corollary,
        vacuous: false,
        witness,
        certificate: Some(verdict.certificate_json()),
    })
}

/// First high edge of the unrestricted side whose endpoints the certificate
/// puts in different blocks.
fn separated_high_edge(verdict: &EquivalenceVerdict, high: &ActionSet) -> Option<HighEdge> {
    let graph = &verdict.graph;
    for s in (0..graph.len()).filter(|&s| graph.state(s).origin == Origin::Right) {
        let term = &graph.state(s).term;
        for action in high {
            for t in states_after(graph, s, action) {
                if !verdict.certificate.same_block(s, t) {
                    return Some(HighEdge {
                        source: term.to_string(),
                        action: action.to_string(),
                        target: graph.state(t).label.clone(),
                    });
                }
            }
        }
    }
    None
}

fn states_after(graph: &AnalysisGraph, state: usize, action: &Action) -> Vec<usize> {
    (0..graph.len())
        .filter(|&t| graph.to_set(state, |u| u == t, action) > int(0))
        .collect()
}

fn esni_with_kind(env: &ModelEnv, term: &Term, high_env: &HighEnvironment, kind: &EquivalenceKind) -> Result<EquivalenceVerdict> {
    let merged = env.merged_with(&high_env.defs)?;
    if !is_high_component(&merged, &high_env.term)? {
        return Err(Error::NotHighComponent(high_env.term.to_string()));
    }
    let composed = Term::hide(Term::coop(term.clone(), env.high.clone(), high_env.term.clone()), env.high.clone());
    equivalent(&merged, &restrict_high(env, term), &merged, &composed, kind)
}

/// `(P <H> 0)/H ≈we (P <H> H_t)/H` for one high environment.
pub fn check_esni_with(env: &ModelEnv, term: &Term, high_env: &HighEnvironment) -> Result<EquivalenceVerdict> {
    esni_with_kind(env, term, high_env, &EquivalenceKind::WeakExact)
}

/// `term` alone against every battery member, with weak-exact equivalence.
pub fn check_esni_battery(env: &ModelEnv, term: &Term, battery: &[HighEnvironment]) -> Result<SecurityVerdict> {
    check_members(env, std::slice::from_ref(term), battery, &EquivalenceKind::WeakExact)
}

/// Check every derivative of the system component against every battery
/// member. A pass is not a proof of security.
pub fn check_epsni_definition(env: &ModelEnv, battery: &[HighEnvironment]) -> Result<SecurityVerdict> {
    check_definition(env, &env.root, battery, &EquivalenceKind::WeakExact)
}

/// As [`check_epsni_definition`] for `term`, with lumpable bisimulation.
pub fn check_psni_with(env: &ModelEnv, term: &Term, battery: &[HighEnvironment]) -> Result<SecurityVerdict> {
    check_definition(env, term, battery, &EquivalenceKind::Lumpable)
}

fn check_definition(
    env: &ModelEnv,
    term: &Term,
    battery: &[HighEnvironment],
    kind: &EquivalenceKind,
) -> Result<SecurityVerdict> {
    let graph = derive_term(env, term, &DeriveOptions::default())?;
    check_members(env, graph.states(), battery, kind)
}

fn check_members(
    env: &ModelEnv,
    derivatives: &[Term],
    battery: &[HighEnvironment],
    kind: &EquivalenceKind,
) -> Result<SecurityVerdict> {
    let mut verdict = SecurityVerdict {
        secure: true,
        method: Method::DefinitionBattery,
        vacuous: battery.is_empty(),
        witness: None,
        certificate: None,
    };
    for derivative in derivatives {
        for member in battery {
            let result = esni_with_kind(env, derivative, member, kind)?;
            if !result.related {
                let mut witness = witness_from(&result).unwrap_or_else(|| Witness {
                    state: derivative.to_string(),
                    other_state: member.term.to_string(),
                    action: String::new(),
                    clause: String::new(),
                    left_rate: to_fraction_string(&int(0)),
                    right_rate: to_fraction_string(&int(0)),
                    class: None,
                    derivative: None,
                    environment: None,
                    responsible: None,
                    description: "roots separated".into(),
                });
                witness.derivative = Some(derivative.to_string());
                witness.environment = Some(member.term.to_string());
                verdict.secure = false;
                verdict.witness = Some(witness);
                verdict.certificate = Some(certificate_json(&result.graph, &result.certificate));
                return Ok(verdict);
            }
        }
    }
    Ok(verdict)
}

/// Result of the unwinding diagnostic for one high edge.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UnwindingEdge {
    pub source: String,
    pub action: String,
    pub target: String,
    /// `P' ≈H_we P''`
    pub up_to_high: bool,
    /// `P' \ H ≈we P'' \ H`
    pub restricted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnwindingReport {
    pub passed: bool,
    pub method: Method,
    pub edges: Vec<UnwindingEdge>,
}

/// Check both unwinding conditions on every high edge of the derivation
/// graph. Necessary for security, not sufficient.
pub fn check_unwinding(env: &ModelEnv) -> Result<UnwindingReport> {
    let graph = derive(env)?;
    let up_to = EquivalenceKind::WeakExactUpToH(env.high.clone());
    let mut cache: HashMap<(usize, usize), (bool, bool)> = HashMap::new();
    let mut edges = Vec::new();
    for edge in graph.edges() {
        if !env.high.contains(&edge.action) {
            continue;
        }
        let (src, dst) = (graph.state(edge.src), graph.state(edge.dst));
        let (up_to_high, restricted) = match cache.get(&(edge.src, edge.dst)) {
            Some(&result) => result,
            None => {
                let first = equivalent(env, src, env, dst, &up_to)?.related;
                let second = equivalent(
                    env,
                    &restrict_high(env, src),
                    env,
                    &restrict_high(env, dst),
                    &EquivalenceKind::WeakExact,
                )?
                .related;
                cache.insert((edge.src, edge.dst), (first, second));
                (first, second)
            }
        };
        edges.push(UnwindingEdge {
            source: src.to_string(),
            action: edge.action.to_string(),
            target: dst.to_string(),
            up_to_high,
            restricted,
        });
    }
    Ok(UnwindingReport {
        passed: edges.iter().all(|e| e.up_to_high && e.restricted),
        method: Method::Unwinding,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    const SECURE_LOOP: &str = "P=(h,1).P + (l,1).P; high {h}; system P;";
    const LEAK: &str = "P=(h,1).PL + (l,1).P; PL=(l,5).PL; high {h}; system P;";

    fn passive_loop() -> HighEnvironment {
        default_battery(&crate::model::action_set(["h"]))[1].clone()
    }

    #[test]
    fn high_component_examples() {
        let env = parse_model("H=(h,T).H; Q=(h,1).(l,1).0; system H; high {h};").unwrap();
        assert!(is_high_component(&env, &Term::constant("H")).unwrap());
        assert!(!is_high_component(&env, &Term::constant("Q")).unwrap());
        let l = Term::prefix(Action::new("l"), Rate::active(int(1)), Term::Nil);
        assert!(!is_high_component(&env, &l).unwrap());
        assert!(is_high_component(&env, &Term::Nil).unwrap());
    }

    #[test]
    fn restriction_prunes_high_edges() {
        let env = parse_model("P=(h,1).P1 + (l,1).P; P1=(l,1).P1; high {h}; system P;").unwrap();
        let restricted = derive_term(&env, &restrict_high(&env, &env.root), &DeriveOptions::default()).unwrap();
        assert_eq!(restricted.len(), 1);
        assert_eq!(restricted.edges().len(), 1);
        assert_eq!(restricted.edges()[0].action, Action::new("l"));
    }

    #[test]
    fn corollary_examples() {
        assert!(check_epsni(&parse_model("P=(l,1).P; high {h}; system P;").unwrap()).unwrap().secure);
        assert!(check_epsni(&parse_model(SECURE_LOOP).unwrap()).unwrap().secure);
        let verdict = check_epsni(&parse_model(LEAK).unwrap()).unwrap();
        assert!(!verdict.secure);
        let witness = verdict.witness.unwrap();
        let responsible = witness.responsible.unwrap();
        assert_eq!((responsible.source.as_str(), responsible.target.as_str()), ("P", "PL"));
    }

    #[test]
    fn delayed_leak_is_caught_at_the_derivative() {
        let env = parse_model("P=(l,1).Q; Q=(h,1).R + (l,1).Q; R=(l,5).R; high {h}; system P;").unwrap();
        assert!(check_epsni_root(&env, &env.root).unwrap().secure);
        let verdict = check_epsni(&env).unwrap();
        assert!(!verdict.secure);
        assert_eq!(verdict.witness.unwrap().derivative.as_deref(), Some("Q"));
    }

    #[test]
    fn esni_examples() {
        let leak = parse_model(LEAK).unwrap();
        assert!(check_esni_with(&leak, &leak.root, &HighEnvironment::nil()).unwrap().related);
        assert!(!check_esni_with(&leak, &leak.root, &passive_loop()).unwrap().related);

        let env = parse_model("P=(l,1).P; H=(h,2).H; high {h}; system P;").unwrap();
        let active = HighEnvironment::new(BTreeMap::new(), Term::constant("H"));
        assert!(check_esni_with(&env, &env.root, &active).unwrap().related);

        let bad = HighEnvironment::new(BTreeMap::new(), Term::constant("P"));
        assert!(matches!(check_esni_with(&env, &env.root, &bad), Err(Error::NotHighComponent(_))));
    }

    #[test]
    fn battery_examples() {
        let secure = parse_model("P=(l,1).P; high {h}; system P;").unwrap();
        let battery = default_battery(&secure.high);
        assert!(check_epsni_definition(&secure, &battery).unwrap().secure);
        let empty = check_epsni_definition(&secure, &[]).unwrap();
        assert!(empty.secure && empty.vacuous);

        let leak = parse_model(LEAK).unwrap();
        let verdict = check_epsni_definition(&leak, &[passive_loop()]).unwrap();
        assert!(!verdict.secure);
        let w = verdict.witness.unwrap();
        assert_eq!(w.derivative.as_deref(), Some("P"));
        assert_eq!(w.environment.as_deref(), Some("Passive_h"));

        assert!(check_psni_with(&secure, &secure.root, &battery).unwrap().secure);
        assert!(!check_psni_with(&leak, &leak.root, &battery).unwrap().secure);
        assert!(check_psni_with(&leak, &leak.root, &[]).unwrap().vacuous);
    }

    #[test]
    fn unwinding_examples() {
        let report = check_unwinding(&parse_model("P=(l,1).P; high {h}; system P;").unwrap()).unwrap();
        assert!(report.passed && report.edges.is_empty());

        let report = check_unwinding(&parse_model(SECURE_LOOP).unwrap()).unwrap();
        assert!(report.passed);
        assert_eq!(report.edges.len(), 1);

        let report = check_unwinding(&parse_model(LEAK).unwrap()).unwrap();
        assert!(!report.passed);
        assert!(!report.edges[0].up_to_high);
    }

    #[test]
    fn verdict_json_shape() {
        let verdict = check_epsni(&parse_model(LEAK).unwrap()).unwrap();
        let json = serde_json::to_value(&verdict).unwrap();
        assert_eq!(json["secure"], false);
        assert_eq!(json["method"], "corollary");
        for key in ["state", "otherState", "action", "clause", "leftRate", "rightRate"] {
            assert!(json["witness"].get(key).is_some(), "{key}");
        }
        assert!(json["certificate"]["blocks"].is_array());
    }
}
