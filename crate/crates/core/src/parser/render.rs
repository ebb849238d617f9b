use std::fmt::Write;

use crate::model::{ActionSet, ModelEnv, Term};

/// Render an environment in the `.pepa` syntax. The output parses back to an
/// equal environment.
pub fn render(env: &ModelEnv) -> String {
    let mut out = String::new();
    for (name, body) in &env.defs {
        let _ = writeln!(out, "{name} = {};", sequential(body));
    }
    if !env.high.is_empty() {
        let _ = writeln!(out, "high {{{}}};", set_list(&env.high));
    }
    let _ = writeln!(out, "system {};", render_term(&env.root));
    out
}

/// Render a term at the level of a `system` expression.
pub fn render_term(term: &Term) -> String {
    match term {
        Term::Coop(left, set, right) => {
            let left = match left.as_ref() {
                Term::Coop(..) => render_term(left),
                other => hide_level(other),
            };
            format!("{left} <{}> {}", set_list(set), hide_level(right))
        }
        Term::Hide(..) => hide_level(term),
        _ => sequential(term),
    }
}

fn hide_level(term: &Term) -> String {
    match term {
        Term::Hide(body, set) => format!("{}/{{{}}}", hide_level(body), set_list(set)),
        other => operand(other),
    }
}

fn operand(term: &Term) -> String {
    match term {
        Term::Nil | Term::Const(_) => sequential(term),
        Term::Prefix(..) | Term::Choice(..) => format!("({})", sequential(term)),
        Term::Coop(..) | Term::Hide(..) => format!("({})", render_term(term)),
    }
}

fn sequential(term: &Term) -> String {
    match term {
        Term::Choice(left, right) => format!("{} + {}", sequential(left), prefix_term(right)),
        other => prefix_term(other),
    }
}

fn prefix_term(term: &Term) -> String {
    match term {
        Term::Nil => "0".to_string(),
        Term::Const(name) => name.clone(),
        Term::Prefix(activity, body) => {
            format!("({}, {}).{}", activity.action, activity.rate, prefix_term(body))
        }
        Term::Choice(..) => format!("({})", sequential(term)),
        Term::Coop(..) | Term::Hide(..) => format!("({})", render_term(term)),
    }
}

fn set_list(set: &ActionSet) -> String {
    set.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{action_set, Action};
    use crate::parser::parse_model;
    use crate::rate::{int, ratio, Rate};

    fn round_trip(text: &str) {
        let env = parse_model(text).unwrap();
        let rendered = render(&env);
        let again = parse_model(&rendered).unwrap_or_else(|e| panic!("{rendered}\n{e}"));
        assert_eq!(env, again, "{rendered}");
    }

    #[test]
    fn round_trips() {
        round_trip("X = (a,1).X; system X;");
        round_trip("X = (a,1/3).Y + (b,T).X + (c,2*T).X; Y = (d,0.5).X; high {b, c}; system X <b> Y/{a};");
        round_trip("P = (a,1).P; system (P <a> P) <> (P/{a}/{} <> 0);");
        round_trip("P = (a,1).P; system (a,2).(b,1).P + P;");
    }

    #[test]
    fn nested_structure_survives() {
        let a = Action::new("a");
        let leaf = |n: &str| Term::prefix(a.clone(), Rate::Active(int(1)), Term::constant(n));
        let right_nested = Term::choice(leaf("X"), Term::choice(leaf("Y"), Term::Nil));
        let body = Term::prefix(a.clone(), Rate::Active(ratio(1, 3)), right_nested.clone());
        let root = Term::coop(
            Term::constant("X"),
            action_set(["a"]),
            Term::coop(Term::hide(right_nested, action_set(["a"])), ActionSet::new(), Term::Nil),
        );
        let env = ModelEnv::new(
            [("X".to_string(), body), ("Y".to_string(), leaf("X"))].into_iter().collect(),
            root,
            ActionSet::new(),
        );
        let again = parse_model(&render(&env)).unwrap();
        assert_eq!(env, again, "{}", render(&env));
    }

    #[test]
    fn rate_rendering() {
        let env = parse_model("X = (a,1/3).X + (b,T).X + (c,2*T).X; system X;").unwrap();
        let text = render(&env);
        assert!(text.contains("(a, 1/3)"));
        assert!(text.contains("(b, T)"));
        assert!(text.contains("(c, 2*T)"));
    }
}
