use std::fmt;

use crate::syntax::Symbol;

/// Position of a token in the source text. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        Self { line, column, length }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error at {span}: {message}")]
    Parse { span: SourceSpan, message: String },

    #[error("predicate `{predicate}` used with arity {found}, expected {expected}")]
    ArityMismatch {
        predicate: Symbol,
        expected: usize,
        found: usize,
        span: Option<SourceSpan>,
    },

    #[error("unsafe rule `{rule}`: variable {variable} does not occur in a positive body atom")]
    UnsafeRule {
        rule: String,
        variable: Symbol,
        span: Option<SourceSpan>,
    },

    #[error("program is not stratified: negative dependency cycle {}", display_cycle(.cycle))]
    Unstratified {
        cycle: Vec<Symbol>,
        span: Option<SourceSpan>,
    },

    #[error("predicate `{predicate}` is defined both by facts and by rules")]
    MixedClassification { predicate: Symbol },

    #[error("predicate name `{predicate}` uses the reserved `__` separator")]
    ReservedPredicate {
        predicate: Symbol,
        span: Option<SourceSpan>,
    },

    #[error("capacity exceeded: {what} (limit {limit})")]
    CapacityExceeded { what: &'static str, limit: usize },

    #[error("interrupted: time limit reached")]
    Interrupted,

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("cannot compare {0}")]
    IncomparableConstants(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Source location attached to the error, if the error came from parsing.
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Error::Parse { span, .. } => Some(*span),
            Error::ArityMismatch { span, .. }
            | Error::UnsafeRule { span, .. }
            | Error::Unstratified { span, .. }
            | Error::ReservedPredicate { span, .. } => *span,
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

fn display_cycle(cycle: &[Symbol]) -> String {
    cycle
        .iter()
        .map(Symbol::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

pub type Result<T> = std::result::Result<T, Error>;
