use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Validation problems in a model are not errors; they are returned as
/// [`Diagnostic`](crate::model::Diagnostic) lists by `validate`.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("undefined constant {0}")]
    UndefinedConstant(String),

    #[error("action {action} is enabled with both active and passive rates; synchronise or hide it")]
    MixedRates { action: String },

    #[error("rate kinds do not match in shared activity: {0}")]
    RateKind(String),

    #[error("state space exceeds the cap of {cap} states")]
    StateCap { cap: usize },

    #[error("model is incomplete: passive rates reach the top level in {}", .states.join(", "))]
    Incomplete { states: Vec<String> },

    #[error("model is reducible: component {{{}}} cannot be left", .component.join(", "))]
    Reducible { component: Vec<String> },

    #[error("invalid state index {0}")]
    StateIndex(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("enumeration guard: {states} states exceeds the limit of {limit}")]
    EnumerationGuard { states: usize, limit: usize },

    #[error("union of kept partitions is not closed under the {kind} clauses")]
    UnionNotClosed { kind: String },

    #[error("{0} is not a high component")]
    NotHighComponent(String),

    #[error("constant {0} is defined differently in the model and the high environment")]
    DefinitionConflict(String),

    #[error("random model generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("invalid generator parameters: {0}")]
    GeneratorParams(String),

    #[error("singular linear system while solving for the steady state")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
