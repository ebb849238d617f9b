use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::JSONSchema;
use proptest::prelude::*;
use serde_json::Value;

use epsni::oracle::{random_model, GeneratorParams};
use epsni::parser::render;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.stdout))
    }
}

fn epsni(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_epsni")).args(args).current_dir(root()).output().expect("spawn epsni");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

fn load(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file")).expect("schema JSON")
}

fn schema(name: &str) -> JSONSchema {
    let dir = root().join("docs/schema");
    let common = load(&dir.join("common.schema.json"));
    JSONSchema::options()
        .with_document("json-schema:///common.schema.json".into(), common)
        .compile(&load(&dir.join(format!("{name}.schema.json"))))
        .expect("schema compiles")
}

fn assert_valid(name: &str, doc: &Value) {
    let compiled = schema(name);
    let messages: Vec<String> = match compiled.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{name} schema rejects document:\n{}\n{doc:#}", messages.join("\n"));
}

fn write_model(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn secure_model_exits_zero() {
    let run = epsni(&["epsni", "models/secure.pepa"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.starts_with("secure"));
}

#[test]
fn leak_exits_one_with_json_witness() {
    let run = epsni(&["--format", "json", "epsni", "models/leak.pepa"]);
    assert_eq!(run.code, 1);
    let doc = run.json();
    assert_valid("security", &doc);
    assert_eq!(doc["secure"], false);
    let witness = &doc["witness"];
    assert_eq!(witness["derivative"], "P");
    // P can take h (rate 1) to PL, which is outside P's class; the
    // restricted copy has no such move. Own-class balance: 0 against -1.
    assert_eq!(witness["leftRate"], "0/1");
    assert_eq!(witness["rightRate"], "-1/1");
    assert_eq!(witness["responsible"]["target"], "PL");
}

#[test]
fn tau_pair_is_weak_exact_only() {
    let exact = epsni(&["--format", "json", "equiv", "models/tau_pair.pepa", "--left", "X", "--right", "Y", "--kind", "exact"]);
    assert_eq!(exact.code, 1);
    let doc = exact.json();
    assert_valid("equiv", &doc);
    assert_eq!(doc["witness"]["leftRate"], "5/1");
    assert_eq!(doc["witness"]["rightRate"], "7/1");

    let weak = epsni(&["equiv", "models/tau_pair.pepa", "--left", "X", "--right", "Y", "--kind", "weak-exact"]);
    assert_eq!(weak.code, 0);
    assert!(weak.stdout.contains("X is related to Y under weak-exact"));
}

#[test]
fn equiv_accepts_component_expressions() {
    let lumpable = ["equiv", "models/two_state.pepa", "--left", "(a, 1).Y", "--right", "X", "--kind", "lumpable"];
    let run = epsni(&lumpable);
    assert_eq!(run.code, 0, "{}{}", run.stdout, run.stderr);
    // X is entered by (b, 2) from Y while the prefix term has no
    // predecessor, so the incoming clause tells them apart.
    let run = epsni(&["equiv", "models/two_state.pepa", "--left", "(a, 1).Y", "--right", "X", "--kind", "exact"]);
    assert_eq!(run.code, 1);
    assert!(run.stdout.contains("a = b"), "{}", run.stdout);
}

#[test]
fn human_witness_shows_both_rates() {
    let run = epsni(&["epsni", "models/leak.pepa"]);
    assert_eq!(run.code, 1);
    assert!(run.stdout.contains("q[S,P,a] - q[P,a] = q[S,Q,a] - q[Q,a]"), "{}", run.stdout);
    assert!(run.stdout.contains(": 0 vs -1"), "{}", run.stdout);
}

#[test]
fn steady_state_of_client_server() {
    // Balance by hand: 2 pi0 = pi2/2 and 3 pi1 = 2 pi0, so
    // pi = (3, 2, 12) / 17.
    let run = epsni(&["--format", "json", "ctmc", "--steady", "models/client_server.pepa"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let doc = run.json();
    assert_valid("ctmc", &doc);
    assert_eq!(doc["steadyState"], serde_json::json!(["3/17", "2/17", "12/17"]));
    assert_eq!(doc["generator"][2], serde_json::json!(["1/2", "0/1", "-1/2"]));
}

#[test]
fn every_command_output_matches_its_schema() {
    let cases: &[(&str, &[&str])] = &[
        ("validate", &["validate", "models/toggle.pepa"]),
        ("graph", &["graph", "models/client_server.pepa"]),
        ("ctmc", &["ctmc", "models/two_state.pepa"]),
        ("equiv", &["equiv", "models/toggle.pepa", "--left", "Up", "--right", "Down", "--kind", "weak-exact-up-to-h"]),
        ("security", &["epsni", "models/toggle.pepa"]),
        ("security", &["epsni", "--root-only", "models/secure_high_loop.pepa"]),
        ("security", &["esni", "models/passive_high.pepa", "--envs", "models/active_battery.pepa"]),
        ("security", &["esni", "models/secure.pepa"]),
        ("security", &["psni", "models/leak.pepa", "--envs", "models/battery.pepa"]),
        ("unwind", &["unwind", "models/toggle.pepa"]),
        ("unwind", &["unwind", "models/leak.pepa"]),
        ("oracle", &["oracle", "models/toggle.pepa", "--kind", "lumpable"]),
        ("error", &["epsni", "models/passive_high.pepa"]),
        ("error", &["epsni", "no-such-file.pepa"]),
        ("error", &["no-such-command"]),
    ];
    for (name, args) in cases {
        let mut full = vec!["--format", "json"];
        full.extend_from_slice(args);
        let run = epsni(&full);
        assert_valid(name, &run.json());
    }
}

#[test]
fn vacuous_battery_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_model(&dir, "empty.pepa", "// no members\n");
    let run = epsni(&["--format", "json", "esni", "models/leak.pepa", "--envs", &empty]);
    assert_eq!(run.code, 0);
    let doc = run.json();
    assert_valid("security", &doc);
    assert_eq!(doc["vacuous"], true);
}

#[test]
fn exit_codes_for_errors() {
    let dir = tempfile::tempdir().unwrap();
    let undefined = write_model(&dir, "undefined.pepa", "P = (a, 1).Q; system P;");
    let broken = write_model(&dir, "broken.pepa", "P = (a, 1).P\nsystem P;");

    let run = epsni(&["validate", &undefined]);
    assert_eq!(run.code, 3);
    assert!(run.stdout.contains("invalid"));

    let run = epsni(&["--format", "json", "graph", &broken]);
    assert_eq!(run.code, 2);
    let doc = run.json();
    assert_valid("error", &doc);
    assert_eq!(doc["error"]["kind"], "parse");
    assert!(doc["error"]["diagnostics"][0]["location"].as_str().unwrap().ends_with(":2:1"));

    assert_eq!(epsni(&["ctmc", "--steady", "models/passive_high.pepa"]).code, 3);
    assert_eq!(epsni(&["--format", "dot", "epsni", "models/leak.pepa"]).code, 2);
    assert_eq!(epsni(&["epsni", "--bogus-flag", "models/leak.pepa"]).code, 2);
    assert_eq!(epsni(&["equiv", "models/two_state.pepa", "--left", "Nope", "--right", "X", "--kind", "exact"]).code, 3);
}

#[test]
fn reducible_models_are_invalid_for_steady_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(&dir, "reducible.pepa", "A = (a, 1).B; B = (b, 1).B; system A;");
    let run = epsni(&["--format", "json", "ctmc", "--steady", &path]);
    assert_eq!(run.code, 3);
    assert!(run.json()["error"]["message"].as_str().unwrap().contains("reducible"));
}

#[test]
fn oracle_refuses_large_models() {
    let dir = tempfile::tempdir().unwrap();
    let chain: String = (0..12).map(|i| format!("S{i} = (a, 1).S{};\n", (i + 1) % 12)).collect();
    let path = write_model(&dir, "ring.pepa", &format!("{chain}system S0;"));
    let run = epsni(&["oracle", &path, "--kind", "exact"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("enumeration guard"), "{}", run.stderr);
}

#[test]
fn high_override_warns() {
    let run = epsni(&["epsni", "models/leak.pepa", "--high", "l"]);
    assert!(run.stderr.contains("overrides"), "{}", run.stderr);
    assert_eq!(epsni(&["epsni", "models/leak.pepa", "--high", "h"]).stderr, "");
}

#[test]
fn dot_output_labels_edges() {
    let run = epsni(&["--format", "dot", "graph", "models/two_state.pepa"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.starts_with("digraph"));
    assert!(run.stdout.contains("s0 -> s1 [label=\"a, 1 \u{d7}1\"];"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        &["--format", "json", "epsni", "models/leak.pepa"][..],
        &["--format", "json", "psni", "models/toggle.pepa", "--envs", "models/battery.pepa"][..],
        &["--format", "json", "graph", "models/client_server.pepa"][..],
    ] {
        assert_eq!(epsni(args).stdout, epsni(args).stdout);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_models_produce_valid_documents(seed in 0u64..10_000) {
        let env = random_model(&GeneratorParams::new(seed, 8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = write_model(&dir, "m.pepa", &render(&env));
        for (name, command) in [("graph", "graph"), ("security", "epsni"), ("unwind", "unwind")] {
            let run = epsni(&["--format", "json", command, &path]);
            prop_assert!(run.code <= 1, "{command}: {}", run.stdout);
            assert_valid(name, &run.json());
        }
        let run = epsni(&["--format", "json", "oracle", &path, "--kind", "weak-exact"]);
        let doc = run.json();
        if run.code == 3 {
            assert_valid("error", &doc);
        } else {
            assert_valid("oracle", &doc);
            prop_assert_eq!(&doc["agree"], &Value::Bool(true));
        }
    }
}
