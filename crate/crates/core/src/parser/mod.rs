//! Text syntax for PEPA models (`.pepa` files).
//!
//! ```text
//! X = (a, 1.5).Y + (b, T).X;     // sequential definitions
//! Y = (c, 1/3).X;
//! high {b};                       // optional
//! system (X <b> X) / {a};        // exactly one
//! ```

mod lexer;
mod render;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed};

use crate::model::{Action, ActionSet, ModelEnv, Term};
use crate::rate::{parse_rational, Rate};

use lexer::{lex, Span, Tok, Token};
pub use render::{render, render_term};

/// Model text together with a name used in diagnostics.
#[derive(Clone, Debug)]
pub struct SourceModel {
    pub name: String,
    pub text: String,
}

impl SourceModel {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> SourceModel {
        SourceModel { name: name.into(), text: text.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub source_name: Option<String>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if let Some(name) = &self.source_name {
                write!(f, "{name}:")?;
            }
            write!(f, "{}:{}: {}", d.line, d.column, d.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

impl ParseError {
    fn single(span: Span, message: impl Into<String>) -> ParseError {
        ParseError {
            source_name: None,
            diagnostics: vec![ParseDiagnostic { line: span.line, column: span.column, message: message.into() }],
        }
    }
}

/// A set of high environments sharing one block of definitions.
///
/// Written in the model syntax with one `system` declaration per member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvironmentFile {
    pub defs: BTreeMap<String, Term>,
    pub members: Vec<Term>,
}

pub fn parse_model(text: &str) -> Result<ModelEnv, ParseError> {
    let items = parse_items(text)?;
    let mut errors = items.errors;
    match items.systems.len() {
        0 => errors.push(diag(items.end, "missing system declaration")),
        1 => {}
        _ => errors.push(diag(items.systems[1].1, "more than one system declaration")),
    }
    if !errors.is_empty() {
        return Err(ParseError { source_name: None, diagnostics: errors });
    }
    let root = items.systems.into_iter().next().map(|(t, _)| t).unwrap_or(Term::Nil);
    Ok(ModelEnv::new(items.defs, root, items.high))
}

pub fn parse_source(source: &SourceModel) -> Result<ModelEnv, ParseError> {
    parse_model(&source.text).map_err(|mut e| {
        e.source_name = Some(source.name.clone());
        e
    })
}

/// Parse a high-environment file: definitions plus any number of `system`
/// declarations, each naming one environment.
pub fn parse_environments(text: &str) -> Result<EnvironmentFile, ParseError> {
    let items = parse_items(text)?;
    if !items.errors.is_empty() {
        return Err(ParseError { source_name: None, diagnostics: items.errors });
    }
    Ok(EnvironmentFile { defs: items.defs, members: items.systems.into_iter().map(|(t, _)| t).collect() })
}

/// Parse a single component expression, such as `P <a> Q` or `(a, 1).P`.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    const WRAP: &str = "system ";
    let file = parse_environments(&format!("{WRAP}{text};")).map_err(|mut e| {
        for d in &mut e.diagnostics {
            if d.line == 1 {
                d.column = d.column.saturating_sub(WRAP.len()).max(1);
            }
        }
        e
    })?;
    if !file.defs.is_empty() || file.members.len() != 1 {
        return Err(ParseError::single(Span { line: 1, column: 1 }, "expected a single component"));
    }
    Ok(file.members.into_iter().next().expect("one member"))
}

fn diag(span: Span, message: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic { line: span.line, column: span.column, message: message.into() }
}

struct Items {
    defs: BTreeMap<String, Term>,
    systems: Vec<(Term, Span)>,
    high: ActionSet,
    errors: Vec<ParseDiagnostic>,
    end: Span,
}

fn parse_items(text: &str) -> Result<Items, ParseError> {
    let tokens = lex(text).map_err(|(span, msg)| ParseError::single(span, msg))?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut items = Items {
        defs: BTreeMap::new(),
        systems: Vec::new(),
        high: ActionSet::new(),
        errors: Vec::new(),
        end: Span::default(),
    };
    let mut seen_high = false;
    loop {
        let token = parser.peek().clone();
        match &token.tok {
            Tok::Eof => {
                items.end = token.span;
                break;
            }
            Tok::LIdent(word) if word == "system" => {
                parser.bump();
                let term = parser.model_expr()?;
                parser.expect(&Tok::Semi, "';'")?;
                items.systems.push((term, token.span));
            }
            Tok::LIdent(word) if word == "high" => {
                parser.bump();
                parser.expect(&Tok::LBrace, "'{'")?;
                let set = parser.action_list(&Tok::RBrace, "high set")?;
                parser.expect(&Tok::RBrace, "'}'")?;
                parser.expect(&Tok::Semi, "';'")?;
                if seen_high {
                    items.errors.push(diag(token.span, "more than one high declaration"));
                }
                seen_high = true;
                items.high.extend(set);
            }
            Tok::UIdent(name) => {
                parser.bump();
                parser.expect(&Tok::Eq, "'='")?;
                let body = parser.choice()?;
                parser.expect(&Tok::Semi, "';'")?;
                if name == "T" {
                    items.errors.push(diag(token.span, "T is reserved for passive rates"));
                } else if items.defs.contains_key(name) {
                    items.errors.push(diag(token.span, format!("duplicate definition of {name}")));
                } else {
                    items.defs.insert(name.clone(), body);
                }
            }
            other => {
                return Err(ParseError::single(
                    token.span,
                    format!("expected a definition, 'high' or 'system', found {other}"),
                ))
            }
        }
    }
    Ok(items)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let token = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        token
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Token, ParseError> {
        let token = self.peek().clone();
        if &token.tok == tok {
            Ok(self.bump())
        } else {
            Err(ParseError::single(token.span, format!("expected {what}, found {}", token.tok)))
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::single(self.peek().span, message))
    }

    fn at_prefix(&self) -> bool {
        matches!(self.peek_at(0), Tok::LParen)
            && matches!(self.peek_at(1), Tok::LIdent(_))
            && matches!(self.peek_at(2), Tok::Comma)
    }

    /// Comma-separated action names up to (not including) `close`; may be empty.
    fn action_list(&mut self, close: &Tok, context: &str) -> Result<ActionSet, ParseError> {
        let mut set = ActionSet::new();
        if self.peek().tok == *close {
            return Ok(set);
        }
        loop {
            let token = self.bump();
            match token.tok {
                Tok::LIdent(name) if name == Action::TAU_NAME => {
                    return Err(ParseError::single(token.span, format!("tau is not allowed in a {context}")))
                }
                Tok::LIdent(name) => {
                    set.insert(Action::new(name));
                }
                other => {
                    return Err(ParseError::single(token.span, format!("expected an action name, found {other}")))
                }
            }
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                return Ok(set);
            }
        }
    }

    fn model_expr(&mut self) -> Result<Term, ParseError> {
        let mut left = self.hide_level()?;
        while self.peek().tok == Tok::Lt {
            self.bump();
            let set = self.action_list(&Tok::Gt, "cooperation set")?;
            self.expect(&Tok::Gt, "'>'")?;
            let right = self.hide_level()?;
            left = Term::coop(left, set, right);
        }
        Ok(left)
    }

    fn hide_level(&mut self) -> Result<Term, ParseError> {
        let mut term = self.atom()?;
        while self.peek().tok == Tok::Slash {
            self.bump();
            self.expect(&Tok::LBrace, "'{'")?;
            let set = self.action_list(&Tok::RBrace, "hiding set")?;
            self.expect(&Tok::RBrace, "'}'")?;
            term = Term::hide(term, set);
        }
        Ok(term)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        if self.peek().tok == Tok::LParen && !self.at_prefix() {
            self.bump();
            let inner = self.model_expr()?;
            self.expect(&Tok::RParen, "')'")?;
            return Ok(inner);
        }
        self.choice()
    }

    fn choice(&mut self) -> Result<Term, ParseError> {
        let mut term = self.prefix_term()?;
        while self.peek().tok == Tok::Plus {
            self.bump();
            let right = self.prefix_term()?;
            term = Term::choice(term, right);
        }
        Ok(term)
    }

    fn prefix_term(&mut self) -> Result<Term, ParseError> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::LParen if self.at_prefix() => {
                self.bump();
                let action = match self.bump().tok {
                    Tok::LIdent(name) => Action::new(name),
                    _ => unreachable!("at_prefix checked the action name"),
                };
                self.expect(&Tok::Comma, "','")?;
                let rate = self.rate()?;
                self.expect(&Tok::RParen, "')'")?;
                self.expect(&Tok::Dot, "'.'")?;
                let body = self.prefix_term()?;
                Ok(Term::prefix(action, rate, body))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.choice()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::UIdent(name) if name == "T" => self.error("T is reserved for passive rates"),
            Tok::UIdent(name) => {
                self.bump();
                Ok(Term::constant(name.clone()))
            }
            Tok::Number(n) if n == "0" => {
                self.bump();
                Ok(Term::Nil)
            }
            other => self.error(format!("expected a prefix, constant or 0, found {other}")),
        }
    }

    fn rate(&mut self) -> Result<Rate, ParseError> {
        let token = self.bump();
        match token.tok {
            Tok::UIdent(name) if name == "T" => Ok(Rate::passive()),
            Tok::Number(text) => {
                let value = parse_rational(&text)
                    .ok_or_else(|| ParseError::single(token.span, format!("invalid number {text}")))?;
                if !value.is_positive() {
                    return Err(ParseError::single(token.span, "rates must be positive"));
                }
                if self.peek().tok == Tok::Star {
                    self.bump();
                    match self.bump() {
                        Token { tok: Tok::UIdent(t), .. } if t == "T" => {}
                        other => {
                            return Err(ParseError::single(other.span, format!("expected T, found {}", other.tok)))
                        }
                    }
                    if !value.denom().is_one() || text.contains('.') || text.contains('/') {
                        return Err(ParseError::single(token.span, "passive weights must be integers"));
                    }
                    return Ok(Rate::Passive(value));
                }
                Ok(Rate::Active(value))
            }
            other => Err(ParseError::single(token.span, format!("expected a rate, found {other}"))),
        }
    }
}
