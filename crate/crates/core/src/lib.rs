//! Disjunctive Datalog with stratified negation, brave and cautious query answering,
//! and the dynamic magic-set rewriting.

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod error;
pub mod integration;
pub mod optimizer;
pub mod oracle;
pub mod parser;
pub mod query;
pub mod rewriter;
pub mod sips;
pub mod solver;
pub mod syntax;

pub use error::{Error, Result, SourceSpan};
pub use syntax::{Atom, CmpOp, Comparison, Constant, Interpretation, Literal, Program, Query, Rule, Substitution, Symbol, Term};
