//! Abstract syntax of PEPA components and the model environment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::Rate;

/// An action type. The name `tau` is the unobservable type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(String);

impl Action {
    pub const TAU_NAME: &'static str = "tau";

    pub fn new(name: impl Into<String>) -> Action {
        Action(name.into())
    }

    pub fn tau() -> Action {
        Action(Self::TAU_NAME.to_string())
    }

    pub fn is_tau(&self) -> bool {
        self.0 == Self::TAU_NAME
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type ActionSet = BTreeSet<Action>;

/// Collect action names into a set.
pub fn action_set<I, S>(names: I) -> ActionSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Action::new).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Activity {
    pub action: Action,
    pub rate: Rate,
}

impl Activity {
    pub fn new(action: Action, rate: Rate) -> Activity {
        Activity { action, rate }
    }
}

/// A PEPA component.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Nil,
    Prefix(Activity, Arc<Term>),
    Choice(Arc<Term>, Arc<Term>),
    Const(String),
    Hide(Arc<Term>, ActionSet),
    Coop(Arc<Term>, ActionSet, Arc<Term>),
}

impl Term {
    pub fn prefix(action: Action, rate: Rate, body: Term) -> Term {
        Term::Prefix(Activity::new(action, rate), Arc::new(body))
    }

    pub fn choice(left: Term, right: Term) -> Term {
        Term::Choice(Arc::new(left), Arc::new(right))
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn hide(body: Term, set: ActionSet) -> Term {
        Term::Hide(Arc::new(body), set)
    }

    pub fn coop(left: Term, set: ActionSet, right: Term) -> Term {
        Term::Coop(Arc::new(left), set, Arc::new(right))
    }

    /// Nil, prefix, choice and constants only.
    pub fn is_sequential(&self) -> bool {
        match self {
            Term::Nil | Term::Const(_) => true,
            Term::Prefix(_, body) => body.is_sequential(),
            Term::Choice(l, r) => l.is_sequential() && r.is_sequential(),
            Term::Hide(..) | Term::Coop(..) => false,
        }
    }

    fn constants_into(&self, out: &mut Vec<String>) {
        match self {
            Term::Nil => {}
            Term::Const(name) => out.push(name.clone()),
            Term::Prefix(_, body) => body.constants_into(out),
            Term::Hide(body, _) => body.constants_into(out),
            Term::Choice(l, r) | Term::Coop(l, _, r) => {
                l.constants_into(out);
                r.constants_into(out);
            }
        }
    }

    /// Constant names occurring syntactically, in left-to-right order.
    pub fn constants(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.constants_into(&mut out);
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render_term(self))
    }
}

/// A validation finding with the place it refers to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Diagnostic {
        Diagnostic { location: location.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Constant definitions, the system component and the high action set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelEnv {
    pub defs: BTreeMap<String, Term>,
    pub root: Term,
    pub high: ActionSet,
}

impl ModelEnv {
    pub fn new(defs: BTreeMap<String, Term>, root: Term, high: ActionSet) -> ModelEnv {
        ModelEnv { defs, root, high }
    }

    pub fn definition(&self, name: &str) -> Result<&Term> {
        self.defs.get(name).ok_or_else(|| Error::UndefinedConstant(name.to_string()))
    }

    pub fn with_root(&self, root: Term) -> ModelEnv {
        ModelEnv { defs: self.defs.clone(), root, high: self.high.clone() }
    }

    pub fn with_high(&self, high: ActionSet) -> ModelEnv {
        ModelEnv { defs: self.defs.clone(), root: self.root.clone(), high }
    }

    /// Add definitions from another fragment. Identical re-definitions are
    /// accepted; conflicting ones are an error.
    pub fn merged_with(&self, defs: &BTreeMap<String, Term>) -> Result<ModelEnv> {
        let mut merged = self.defs.clone();
        for (name, body) in defs {
            match merged.get(name) {
                Some(existing) if existing != body => {
                    return Err(Error::DefinitionConflict(name.clone()))
                }
                Some(_) => {}
                None => {
                    merged.insert(name.clone(), body.clone());
                }
            }
        }
        Ok(ModelEnv { defs: merged, root: self.root.clone(), high: self.high.clone() })
    }

    /// Visible actions that are not high, among those occurring in the model.
    pub fn low_actions(&self) -> Result<ActionSet> {
        let mut all = action_alphabet(self, &self.root)?;
        for body in self.defs.values() {
            all.extend(action_alphabet(self, body)?);
        }
        Ok(all.into_iter().filter(|a| !a.is_tau() && !self.high.contains(a)).collect())
    }
}

/// Check every environment invariant and report one diagnostic per violation.
pub fn validate(env: &ModelEnv) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for action in &env.high {
        if action.is_tau() {
            diags.push(Diagnostic::new("high", "tau cannot be a high action"));
        }
        if action.name().is_empty() {
            diags.push(Diagnostic::new("high", "empty action name"));
        }
    }

    for (name, body) in &env.defs {
        let location = format!("definition {name}");
        if !body.is_sequential() {
            diags.push(Diagnostic::new(&location, format!("definition {name} is not sequential")));
        }
        check_guarded(body, false, &location, &mut diags);
        check_passive_consistency(name, body, &location, &mut diags);
        check_common(env, body, &location, &mut diags);
    }

    check_root_shape(&env.root, false, &mut diags);
    check_common(env, &env.root, "system", &mut diags);
    diags
}

fn check_guarded(term: &Term, guarded: bool, location: &str, diags: &mut Vec<Diagnostic>) {
    match term {
        Term::Nil => {}
        Term::Const(name) => {
            if !guarded {
                diags.push(Diagnostic::new(location, format!("unguarded constant {name}")));
            }
        }
        Term::Prefix(_, body) => check_guarded(body, true, location, diags),
        Term::Hide(body, _) => check_guarded(body, guarded, location, diags),
        Term::Choice(l, r) | Term::Coop(l, _, r) => {
            check_guarded(l, guarded, location, diags);
            check_guarded(r, guarded, location, diags);
        }
    }
}

fn check_passive_consistency(name: &str, body: &Term, location: &str, diags: &mut Vec<Diagnostic>) {
    let mut kinds: BTreeMap<&Action, (bool, bool)> = BTreeMap::new();
    let mut stack = vec![body];
    while let Some(term) = stack.pop() {
        match term {
            Term::Prefix(activity, next) => {
                let entry = kinds.entry(&activity.action).or_default();
                if activity.rate.is_active() {
                    entry.0 = true;
                } else {
                    entry.1 = true;
                }
                stack.push(next);
            }
            Term::Choice(l, r) | Term::Coop(l, _, r) => {
                stack.push(l);
                stack.push(r);
            }
            Term::Hide(inner, _) => stack.push(inner),
            Term::Nil | Term::Const(_) => {}
        }
    }
    for (action, (active, passive)) in kinds {
        if active && passive {
            diags.push(Diagnostic::new(
                location,
                format!("action {action} mixes active and passive in {name}"),
            ));
        }
    }
}

fn check_root_shape(term: &Term, under_sequential: bool, diags: &mut Vec<Diagnostic>) {
    match term {
        Term::Nil | Term::Const(_) => {}
        Term::Prefix(_, body) => check_root_shape(body, true, diags),
        Term::Choice(l, r) => {
            check_root_shape(l, true, diags);
            check_root_shape(r, true, diags);
        }
        Term::Hide(body, _) => {
            if under_sequential {
                diags.push(Diagnostic::new("system", "hiding under a prefix or choice"));
            }
            check_root_shape(body, under_sequential, diags);
        }
        Term::Coop(l, _, r) => {
            if under_sequential {
                diags.push(Diagnostic::new("system", "cooperation under a prefix or choice"));
            }
            check_root_shape(l, under_sequential, diags);
            check_root_shape(r, under_sequential, diags);
        }
    }
}

fn check_common(env: &ModelEnv, term: &Term, location: &str, diags: &mut Vec<Diagnostic>) {
    let mut stack = vec![term];
    while let Some(term) = stack.pop() {
        match term {
            Term::Nil => {}
            Term::Const(name) => {
                if !env.defs.contains_key(name) {
                    diags.push(Diagnostic::new(location, format!("undefined constant {name}")));
                }
            }
            Term::Prefix(activity, body) => {
                if activity.action.name().is_empty() {
                    diags.push(Diagnostic::new(location, "empty action name"));
                }
                if !activity.rate.is_positive() {
                    diags.push(Diagnostic::new(
                        location,
                        format!("rate of {} must be positive", activity.action),
                    ));
                }
                stack.push(body);
            }
            Term::Choice(l, r) => {
                stack.push(l);
                stack.push(r);
            }
            Term::Hide(body, set) => {
                if set.iter().any(Action::is_tau) {
                    diags.push(Diagnostic::new(location, "tau cannot be hidden"));
                }
                stack.push(body);
            }
            Term::Coop(l, set, r) => {
                if set.iter().any(Action::is_tau) {
                    diags.push(Diagnostic::new(location, "tau cannot appear in a cooperation set"));
                }
                stack.push(l);
                stack.push(r);
            }
        }
    }
}

/// Action types occurring syntactically in `term` and in the constants it
/// (transitively) refers to. A hiding node contributes `tau`.
pub fn action_alphabet(env: &ModelEnv, term: &Term) -> Result<ActionSet> {
    let mut out = ActionSet::new();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<&Term> = vec![term];
    while let Some(term) = stack.pop() {
        match term {
            Term::Nil => {}
            Term::Const(name) => {
                if seen.insert(name.clone()) {
                    stack.push(env.definition(name)?);
                }
            }
            Term::Prefix(activity, body) => {
                out.insert(activity.action.clone());
                stack.push(body);
            }
            Term::Choice(l, r) | Term::Coop(l, _, r) => {
                stack.push(l);
                stack.push(r);
            }
            Term::Hide(body, _) => {
                out.insert(Action::tau());
                stack.push(body);
            }
        }
    }
    Ok(out)
}
