//! Rendering of command results as text, JSON or DOT.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use epsni::ctmc::{CtmcJson, Generator, SteadyState};
use epsni::equivalence::{certificate_json, AnalysisGraph, CertificateJson, EquivalenceKind, EquivalenceVerdict, Partition};
use epsni::model::Diagnostic;
use epsni::parser::ParseError;
use epsni::security::{SecurityVerdict, UnwindingReport, Witness};
use epsni::semantics::DerivationGraph;
use epsni::{Error, ModelEnv};

use crate::Format;

/// A finished command: exit code plus its renderings.
pub struct Output {
    pub code: u8,
    human: String,
    json: Value,
    dot: Option<String>,
}

impl Output {
    pub fn emit(&self, format: Format) {
        match format {
            Format::Human => print!("{}", self.human),
            Format::Json => println!("{}", pretty(&self.json)),
            Format::Dot => print!("{}", self.dot.as_deref().unwrap_or_default()),
        }
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialise")
}

fn document<T: Serialize>(command: &str, body: &T) -> Value {
    let mut value = serde_json::to_value(body).expect("report types serialise");
    if let Value::Object(map) = &mut value {
        map.insert("command".into(), Value::String(command.into()));
    }
    value
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Parse(ParseError),
    Invalid(Vec<Diagnostic>),
    Analysis(Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Parse(_) => 2,
            Failure::Invalid(_) => 3,
            Failure::Analysis(Error::UnionNotClosed { .. }) => 1,
            Failure::Analysis(Error::GeneratorParams(_)) => 2,
            Failure::Analysis(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Parse(_) => "parse",
            Failure::Invalid(_) => "invalid",
            Failure::Analysis(_) => "analysis",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Parse(_) => "could not parse input".into(),
            Failure::Invalid(_) => "model is invalid".into(),
            Failure::Analysis(e) => e.to_string(),
        }
    }

    fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            Failure::Parse(e) => e
                .diagnostics
                .iter()
                .map(|d| Diagnostic {
                    location: match &e.source_name {
                        Some(name) => format!("{name}:{}:{}", d.line, d.column),
                        None => format!("{}:{}", d.line, d.column),
                    },
                    message: d.message.clone(),
                })
                .collect(),
            Failure::Invalid(list) => list.clone(),
            _ => Vec::new(),
        }
    }
}

pub fn emit_failure(format: Format, failure: &Failure) {
    if format == Format::Json {
        let value = json!({
            "error": {
                "kind": failure.kind(),
                "code": failure.code(),
                "message": failure.message(),
                "diagnostics": failure.diagnostics(),
            }
        });
        println!("{}", pretty(&value));
        return;
    }
    eprintln!("error: {}", failure.message());
    for d in failure.diagnostics() {
        eprintln!("  {d}");
    }
}

pub fn validation(env: &ModelEnv, diagnostics: Vec<Diagnostic>) -> Output {
    let valid = diagnostics.is_empty();
    let high: Vec<String> = env.high.iter().map(|a| a.to_string()).collect();
    let mut human = if valid {
        format!(
            "valid: {} definitions, system {}, high {{{}}}\n",
            env.defs.len(),
            env.root,
            high.join(", ")
        )
    } else {
        "invalid:\n".to_string()
    };
    for d in &diagnostics {
        let _ = writeln!(human, "  {d}");
    }
    let json = json!({
        "command": "validate",
        "valid": valid,
        "definitions": env.defs.len(),
        "system": env.root.to_string(),
        "high": high,
        "diagnostics": diagnostics,
    });
    Output { code: if valid { 0 } else { 3 }, human, json, dot: None }
}

pub fn graph(graph: &DerivationGraph) -> Output {
    let mut human = format!("{} states, {} edges\n", graph.len(), graph.edges().len());
    for (i, state) in graph.states().iter().enumerate() {
        let _ = writeln!(human, "  s{i}  {state}");
    }
    for e in graph.edges() {
        let _ = writeln!(human, "  s{} --({}, {}) x{}--> s{}", e.src, e.action, e.rate, e.multiplicity, e.dst);
    }
    Output { code: 0, human, json: document("graph", &graph.to_json()), dot: Some(graph.to_dot()) }
}

pub fn ctmc(graph: &DerivationGraph, generator: &Generator, steady: Option<&SteadyState>) -> Output {
    let body = CtmcJson::new(graph, generator, steady);
    let mut human = String::from("states:\n");
    for (i, state) in body.states.iter().enumerate() {
        let _ = writeln!(human, "  s{i}  {state}");
    }
    human.push_str("generator:\n");
    let width = body.generator.iter().flatten().map(String::len).max().unwrap_or(1);
    for row in &body.generator {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        let _ = writeln!(human, "  [ {} ]", cells.join("  "));
    }
    if let Some(pi) = &body.steady_state {
        human.push_str("steady state:\n");
        for (i, p) in pi.iter().enumerate() {
            let _ = writeln!(human, "  s{i}  {p}");
        }
    }
    Output { code: 0, human, json: document("ctmc", &body), dot: None }
}

fn certificate_lines(out: &mut String, certificate: &CertificateJson) {
    for (i, block) in certificate.blocks.iter().enumerate() {
        let members: Vec<String> = block
            .iter()
            .map(|s| format!("{} [{}]", s.term, s.origin.name()))
            .collect();
        let _ = writeln!(out, "  block {i}: {}", members.join(", "));
    }
}

pub fn equivalence(verdict: &EquivalenceVerdict) -> Output {
    let graph = &verdict.graph;
    let (left, right) = (graph.roots()[0], graph.roots()[1]);
    let certificate = verdict.certificate_json();
    let mut human = format!(
        "{} {} {} under {}\n",
        graph.state(left).label,
        if verdict.related { "is related to" } else { "is not related to" },
        graph.state(right).label,
        verdict.kind
    );
    if let Some(w) = &verdict.witness {
        let _ = writeln!(human, "witness: {}", w.describe(graph));
    }
    human.push_str("largest relation:\n");
    certificate_lines(&mut human, &certificate);
    let mut json = json!({
        "command": "equiv",
        "kind": verdict.kind.name(),
        "left": graph.state(left).label,
        "right": graph.state(right).label,
        "related": verdict.related,
        "witness": verdict.witness.as_ref().map(|w| w.to_json(graph)),
        "certificate": certificate,
    });
    if verdict.witness.is_none() {
        json.as_object_mut().expect("object").remove("witness");
    }
    Output { code: if verdict.related { 0 } else { 1 }, human, json, dot: None }
}

fn witness_lines(out: &mut String, w: &Witness) {
    let _ = writeln!(out, "witness: {}", w.description);
    if let Some(d) = &w.derivative {
        let _ = writeln!(out, "  at derivative {d}");
    }
    if let Some(e) = &w.environment {
        let _ = writeln!(out, "  against high environment {e}");
    }
    if let Some(edge) = &w.responsible {
        let _ = writeln!(out, "  high transition {} --{}--> {} is not absorbed", edge.source, edge.action, edge.target);
    }
}

pub fn security(command: &str, verdict: &SecurityVerdict) -> Output {
    let method = verdict.method.name();
    let mut human = match (verdict.secure, verdict.vacuous) {
        (true, true) => format!("no check run: empty battery ({method})\n"),
        (true, false) if command == "epsni" => format!("secure ({method})\n"),
        (true, false) => format!("no leak found by the battery ({method}); this is not a proof of security\n"),
        (false, _) => format!("insecure ({method})\n"),
    };
    if let Some(w) = &verdict.witness {
        witness_lines(&mut human, w);
    }
    Output { code: if verdict.secure { 0 } else { 1 }, human, json: document(command, verdict), dot: None }
}

pub fn unwinding(report: &UnwindingReport) -> Output {
    let mut human = format!(
        "unwinding conditions {} ({} high transitions; diagnostic only)\n",
        if report.passed { "hold" } else { "fail" },
        report.edges.len()
    );
    for e in &report.edges {
        let _ = writeln!(
            human,
            "  {} --{}--> {}: up to high {}, restricted {}",
            e.source,
            e.action,
            e.target,
            if e.up_to_high { "ok" } else { "FAILS" },
            if e.restricted { "ok" } else { "FAILS" }
        );
    }
    Output { code: if report.passed { 0 } else { 1 }, human, json: document("unwind", report), dot: None }
}

pub fn oracle(graph: &AnalysisGraph, kind: &EquivalenceKind, enumerated: &Partition, refined: &Partition) -> Output {
    let agree = enumerated == refined;
    let (by_enumeration, by_refinement) = (certificate_json(graph, enumerated), certificate_json(graph, refined));
    let mut human = format!(
        "{}: enumeration and refinement {} on {} states\n",
        kind,
        if agree { "agree" } else { "DISAGREE" },
        graph.len()
    );
    human.push_str("enumeration:\n");
    certificate_lines(&mut human, &by_enumeration);
    if !agree {
        human.push_str("refinement:\n");
        certificate_lines(&mut human, &by_refinement);
    }
    let json = json!({
        "command": "oracle",
        "kind": kind.name(),
        "states": graph.len(),
        "agree": agree,
        "enumeration": by_enumeration,
        "refinement": by_refinement,
    });
    Output { code: if agree { 0 } else { 1 }, human, json, dot: None }
}
