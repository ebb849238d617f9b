//! `epsni`: parse PEPA models, build their Markov chains and check
//! noninterference.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use epsni::equivalence::{coarsest, equivalent, AnalysisGraph, EquivalenceKind};
use epsni::model::{action_set, validate};
use epsni::oracle::largest_by_enumeration;
use epsni::parser::{parse_environments, parse_source, parse_term, ParseError, SourceModel};
use epsni::security::{
    check_epsni, check_epsni_root, check_esni_battery, check_psni_with, check_unwinding, default_battery,
    HighEnvironment,
};
use epsni::semantics::{derive, require_complete};
use epsni::{ctmc, Error, ModelEnv};

use report::{Failure, Output};

#[derive(Parser, Debug)]
#[command(name = "epsni", version, about = "Noninterference checks for PEPA models")]
struct Cli {
    /// Output format. `dot` is accepted by `graph` only.
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Exact,
    WeakExact,
    Lumpable,
    WeakExactUpToH,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a model.
    Validate { model: PathBuf },
    /// Derivation graph of the system component.
    Graph { model: PathBuf },
    /// Infinitesimal generator, optionally with the steady-state distribution.
    Ctmc {
        model: PathBuf,
        #[arg(long)]
        steady: bool,
    },
    /// Compare two components over the model's definitions.
    Equiv {
        model: PathBuf,
        /// Component expression, usually a constant name.
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Decide security of the system component.
    Epsni {
        model: PathBuf,
        /// High actions, comma separated; replaces the file's `high` declaration.
        #[arg(long, value_delimiter = ',')]
        high: Option<Vec<String>>,
        /// Check the initial state only instead of every derivative.
        #[arg(long)]
        root_only: bool,
    },
    /// Test the initial state against a battery of high environments.
    Esni {
        model: PathBuf,
        /// Battery file; defaults to a built-in battery.
        #[arg(long)]
        envs: Option<PathBuf>,
    },
    /// Test every derivative against a battery, with lumpable bisimulation.
    Psni {
        model: PathBuf,
        #[arg(long)]
        envs: Option<PathBuf>,
    },
    /// Unwinding conditions on every high transition (diagnostic only).
    Unwind { model: PathBuf },
    /// Compare partition refinement with brute-force enumeration on a small model.
    Oracle {
        model: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = err.exit_code();
            if code != 0 && wants_json(std::env::args()) {
                report::emit_failure(Format::Json, &Failure::Usage(err.to_string().trim_end().to_string()));
            } else {
                let _ = err.print();
            }
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(output) => {
            output.emit(cli.format);
            ExitCode::from(output.code)
        }
        Err(failure) => {
            report::emit_failure(cli.format, &failure);
            ExitCode::from(failure.code())
        }
    }
}

/// Whether the raw arguments ask for JSON, for reporting usage errors.
fn wants_json(args: impl Iterator<Item = String>) -> bool {
    let args: Vec<String> = args.collect();
    args.iter().any(|a| a == "--format=json") || args.windows(2).any(|w| w[0] == "--format" && w[1] == "json")
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    if cli.format == Format::Dot && !matches!(cli.command, Command::Graph { .. }) {
        return Err(Failure::Usage("--format dot is only available for the graph command".into()));
    }
    match &cli.command {
        Command::Validate { model } => {
            let env = parse_file(model)?;
            let diagnostics = validate(&env);
            Ok(report::validation(&env, diagnostics))
        }
        Command::Graph { model } => {
            let env = load(model)?;
            let graph = derive(&env)?;
            Ok(report::graph(&graph))
        }
        Command::Ctmc { model, steady } => {
            let env = load(model)?;
            let graph = derive(&env)?;
            require_complete(&graph)?;
            let generator = ctmc::generator(&graph)?;
            let distribution = if *steady {
                ctmc::require_irreducible(&graph)?;
                Some(ctmc::steady_state(&generator, &graph)?)
            } else {
                None
            };
            Ok(report::ctmc(&graph, &generator, distribution.as_ref()))
        }
        Command::Equiv { model, left, right, kind } => {
            let env = load(model)?;
            let left = parse_term(left).map_err(|e| Failure::Parse(named(e, "--left")))?;
            let right = parse_term(right).map_err(|e| Failure::Parse(named(e, "--right")))?;
            let checked = env.with_root(epsni::Term::coop(left.clone(), Default::default(), right.clone()));
            invalid_if_any(&checked)?;
            let verdict = equivalent(&env, &left, &env, &right, &equivalence_kind(*kind, &env))?;
            Ok(report::equivalence(&verdict))
        }
        Command::Epsni { model, high, root_only } => {
            let mut env = load(model)?;
            if let Some(names) = high {
                let set = action_set(names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()));
                if set != env.high {
                    eprintln!(
                        "warning: --high {{{}}} overrides the model's high declaration {{{}}}",
                        join(&set),
                        join(&env.high)
                    );
                }
                env = env.with_high(set);
                invalid_if_any(&env)?;
            }
            let verdict = if *root_only { check_epsni_root(&env, &env.root)? } else { check_epsni(&env)? };
            Ok(report::security("epsni", &verdict))
        }
        Command::Esni { model, envs } => {
            let env = load(model)?;
            let battery = battery(&env, envs.as_deref())?;
            let verdict = check_esni_battery(&env, &env.root, &battery)?;
            Ok(report::security("esni", &verdict))
        }
        Command::Psni { model, envs } => {
            let env = load(model)?;
            let battery = battery(&env, envs.as_deref())?;
            let verdict = check_psni_with(&env, &env.root, &battery)?;
            Ok(report::security("psni", &verdict))
        }
        Command::Unwind { model } => {
            let env = load(model)?;
            Ok(report::unwinding(&check_unwinding(&env)?))
        }
        Command::Oracle { model, kind } => {
            let env = load(model)?;
            let graph = AnalysisGraph::single(&derive(&env)?)?;
            let kind = equivalence_kind(*kind, &env);
            let enumerated = largest_by_enumeration(&graph, &kind)?;
            let refined = coarsest(&graph, &kind)?;
            Ok(report::oracle(&graph, &kind, &enumerated, &refined))
        }
    }
}

fn equivalence_kind(kind: KindArg, env: &ModelEnv) -> EquivalenceKind {
    match kind {
        KindArg::Exact => EquivalenceKind::Exact,
        KindArg::WeakExact => EquivalenceKind::WeakExact,
        KindArg::Lumpable => EquivalenceKind::Lumpable,
        KindArg::WeakExactUpToH => EquivalenceKind::WeakExactUpToH(env.high.clone()),
    }
}

fn join(set: &epsni::ActionSet) -> String {
    set.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn named(mut err: ParseError, name: &str) -> ParseError {
    err.source_name = Some(name.to_string());
    err
}

fn parse_file(path: &Path) -> Result<ModelEnv, Failure> {
    let text = read(path)?;
    parse_source(&SourceModel::new(path.display().to_string(), text)).map_err(Failure::Parse)
}

/// Parse and validate; any diagnostic makes the model unusable.
fn load(path: &Path) -> Result<ModelEnv, Failure> {
    let env = parse_file(path)?;
    invalid_if_any(&env)?;
    Ok(env)
}

fn invalid_if_any(env: &ModelEnv) -> Result<(), Failure> {
    let diagnostics = validate(env);
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invalid(diagnostics))
    }
}

fn battery(env: &ModelEnv, path: Option<&Path>) -> Result<Vec<HighEnvironment>, Failure> {
    match path {
        None => Ok(default_battery(&env.high)),
        Some(path) => {
            let text = read(path)?;
            let file = parse_environments(&text).map_err(|e| Failure::Parse(named(e, &path.display().to_string())))?;
            Ok(HighEnvironment::from_file(&file))
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        Failure::Analysis(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> impl Iterator<Item = String> {
        list.iter().map(|s| s.to_string()).collect::<Vec<_>>().into_iter()
    }

    #[test]
    fn json_requests_are_spotted() {
        assert!(wants_json(args(&["epsni", "--format", "json", "bogus"])));
        assert!(wants_json(args(&["epsni", "bogus", "--format=json"])));
        assert!(!wants_json(args(&["epsni", "--format", "human"])));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
